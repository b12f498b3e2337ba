#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "oracles.hpp"
#include "specgnn/pipeline.hpp"

using namespace specgnn;
using Catch::Approx;

namespace {

// Small hand-rolled corpus: conversation sizes 2 and 3, two speakers.
Corpus tiny_corpus() {
  Rng rng(71);
  Corpus c;
  c.n_classes = 3;
  c.dims = {4, 3, 3};
  for (const auto& [id, n_utt, split] :
       std::vector<std::tuple<std::string, int, std::string>>{
           {"a", 2, "train"}, {"b", 3, "train"}}) {
    Conversation conv;
    conv.id = id;
    conv.split = split;
    for (int i = 0; i < n_utt; ++i) {
      Utterance u;
      u.index = i;
      u.speaker_id = i % 2;
      u.label = i % c.n_classes;
      u.feat_text = Eigen::VectorXd::NullaryExpr(
          c.dims.text, [&](Eigen::Index) { return rng.normal(); });
      u.feat_audio = Eigen::VectorXd::NullaryExpr(
          c.dims.audio, [&](Eigen::Index) { return rng.normal(); });
      u.feat_visual = Eigen::VectorXd::NullaryExpr(
          c.dims.visual, [&](Eigen::Index) { return rng.normal(); });
      conv.utterances.push_back(std::move(u));
    }
    c.conversations.push_back(std::move(conv));
  }
  return c;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.d_model = 6;
  cfg.depth_m = 1;
  cfg.window_k = 2;
  cfg.val_fraction = 0.0;
  return cfg;
}

SynthSpec learnable_spec() {
  SynthSpec spec;
  spec.seed = 13;
  spec.n_conversations = 20;
  spec.min_utterances = 4;
  spec.max_utterances = 6;
  spec.n_classes = 3;
  spec.dims = {4, 4, 4};
  spec.flip_rate = 0.1;
  spec.noise_sigma = 0.2;
  spec.train_fraction = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("zero parameters produce uniform logits") {
  const Corpus corpus = tiny_corpus();
  RunConfig cfg = small_config();
  Rng rng(1);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  for (TensorRef& t : trainable_tensors(params)) {
    std::fill(t.data, t.data + t.size, 0.0);
  }
  const ForwardResult r = forward(corpus.conversations[0], params);
  CHECK(r.logits.cwiseAbs().maxCoeff() == 0.0);
  const std::vector<int> preds = predict(r.logits);
  for (const int p : preds) CHECK(p == 0);  // tie rule: lowest index
}

TEST_CASE("single-utterance conversation flows end to end") {
  Corpus corpus = tiny_corpus();
  Conversation single = corpus.conversations[0];
  single.utterances.resize(1);
  RunConfig cfg = small_config();
  Rng rng(2);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  const ForwardResult r = forward(single, params);
  CHECK(r.logits.rows() == 1);
  CHECK(r.logits.cols() == corpus.n_classes);
}

TEST_CASE("forward matches a straight-line re-composition of the ops") {
  const Corpus corpus = tiny_corpus();
  const Conversation& conv = corpus.conversations[0];  // 2 utterances
  RunConfig cfg = small_config();
  cfg.activation = Activation::kLeakyRelu;
  Rng rng(3);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  // give the biases generic values so the re-composition exercises them
  Rng jitter(4);
  for (TensorRef& t : trainable_tensors(params)) {
    for (std::size_t k = 0; k < t.size; ++k) {
      t.data[k] += jitter.uniform(-0.1, 0.1);
    }
  }

  const int n = conv.size();
  const int d = cfg.d_model;

  // encode, fuse
  std::vector<Eigen::VectorXd> phi_t;
  for (const Utterance& u : conv.utterances) phi_t.push_back(u.feat_text);
  const auto u_t = encode_text(phi_t, params.encoder);
  std::vector<Eigen::VectorXd> x_rows;
  for (int m = 0; m < 3; ++m) x_rows.insert(x_rows.end(), n, {});
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd s =
        embed_speaker(conv.utterances[i].speaker_id, params.speaker);
    x_rows[i] = fuse_speaker(u_t[i], s);
    x_rows[n + i] = fuse_speaker(
        encode_affine(conv.utterances[i].feat_audio, params.encoder.w_audio,
                      params.encoder.b_audio),
        s);
    x_rows[2 * n + i] = fuse_speaker(
        encode_affine(conv.utterances[i].feat_visual, params.encoder.w_visual,
                      params.encoder.b_visual),
        s);
  }

  // pad, transform, run both stacks by explicit per-frequency loops
  Eigen::MatrixXd x_pad = Eigen::MatrixXd::Zero(params.dims.n_spec, d);
  for (int r = 0; r < 3 * n; ++r) x_pad.row(r) = x_rows[r];
  const FrequencyFeatures f = dft_nodes(x_pad);

  auto run_stack = [&](const FgnStack& stack) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(f.nodes(), d);
    Eigen::MatrixXcd running = f.data;
    for (const FourierGraphOperator& layer : stack.layers) {
      Eigen::MatrixXcd next(f.nodes(), d);
      for (Eigen::Index freq = 0; freq < f.nodes(); ++freq) {
        next.row(freq) = running.row(freq) * layer.op_block(freq);
      }
      running = next;
      Eigen::MatrixXcd pre = running;
      pre.rowwise() += layer.bias.transpose();
      for (Eigen::Index i = 0; i < pre.rows(); ++i) {
        for (Eigen::Index j = 0; j < pre.cols(); ++j) {
          sum(i, j) += Complex(
              activate_scalar(stack.activation, pre(i, j).real()),
              activate_scalar(stack.activation, pre(i, j).imag()));
        }
      }
    }
    FrequencyFeatures out;
    out.data = sum;
    return idft_nodes_real(out).topRows(3 * n).eval();
  };
  const Eigen::MatrixXd low = run_stack(params.low_stack);
  const Eigen::MatrixXd high = run_stack(params.high_stack);

  // concat per utterance, ReLU, head
  Eigen::MatrixXd logits(n, corpus.n_classes);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd cat(6 * d);
    cat << low.row(i).transpose(), high.row(i).transpose(),
        low.row(n + i).transpose(), high.row(n + i).transpose(),
        low.row(2 * n + i).transpose(), high.row(2 * n + i).transpose();
    const Eigen::VectorXd relu = cat.cwiseMax(0.0);
    logits.row(i) = (params.w_head * relu + params.b_head).transpose();
  }

  const ForwardResult r = forward(conv, params);
  CHECK((r.logits - logits).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict follows the argmax scan oracle") {
  Eigen::MatrixXd logits(3, 3);
  logits << 1.0, 0.0, 0.0,   // clear winner
      0.5, 0.5, 0.5,         // all equal -> 0
      -1.0, 2.0, 2.0;        // tie between 1 and 2 -> 1
  const std::vector<int> preds = predict(logits);
  CHECK(preds == std::vector<int>{0, 0, 1});

  Rng rng(5);
  Eigen::MatrixXd random(10, 5);
  for (int k = 0; k < random.size(); ++k) random.data()[k] = rng.normal();
  const std::vector<int> got = predict(random);
  for (int i = 0; i < 10; ++i) {
    int best = 0;
    for (int j = 1; j < 5; ++j) {
      if (random(i, j) > random(i, best)) best = j;
    }
    CHECK(got[i] == best);
  }
}

TEST_CASE("dropping the contrastive weight equals the CL ablation") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig zero_lambda = small_config();
  zero_lambda.epochs = 3;
  zero_lambda.lambda_ccl = 0.0;
  RunConfig ablated = small_config();
  ablated.epochs = 3;
  ablated.ablate_contrastive = true;

  const TrainResult a = train(corpus, zero_lambda);
  const TrainResult b = train(corpus, ablated);
  REQUIRE(a.log_lines.size() == b.log_lines.size());
  for (std::size_t i = 1; i < a.log_lines.size(); ++i) {
    CHECK(a.log_lines[i]["ce"] == b.log_lines[i]["ce"]);
    CHECK(a.log_lines[i]["total"] == b.log_lines[i]["total"]);
  }
}

TEST_CASE("without the contrastive term the total loss is the CE loss") {
  const Corpus corpus = tiny_corpus();
  RunConfig cfg = small_config();
  cfg.ablate_contrastive = true;
  Rng rng(6);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  const LossReport rep = conversation_loss(corpus.conversations[0], params);
  CHECK(rep.total == rep.ce);
  CHECK(rep.ccl == 0.0);
}

TEST_CASE("speaker ablation ignores the speaker table") {
  const Corpus corpus = tiny_corpus();
  RunConfig cfg = small_config();
  cfg.ablate_speaker = true;
  Rng rng(7);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  const Eigen::MatrixXd before = forward(corpus.conversations[0], params).logits;
  params.speaker.weight.setConstant(42.0);  // any perturbation
  const Eigen::MatrixXd after = forward(corpus.conversations[0], params).logits;
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("modality subsets shrink the classifier head") {
  const Corpus corpus = tiny_corpus();
  for (const auto& [mods, factor] :
       std::vector<std::pair<std::string, int>>{
           {"t", 1}, {"ta", 2}, {"tav", 3}, {"va", 2}}) {
    RunConfig cfg = small_config();
    cfg.modalities = mods;
    Rng rng(8);
    ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
    CHECK(params.w_head.cols() == factor * 2 * cfg.d_model);
    const ForwardResult r = forward(corpus.conversations[1], params);
    CHECK(r.logits.rows() == corpus.conversations[1].size());
  }
  // single band halves the per-modality width
  RunConfig cfg = small_config();
  cfg.bands = "low";
  Rng rng(9);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  CHECK(params.w_head.cols() == 3 * cfg.d_model);
  const LossReport rep = conversation_loss(corpus.conversations[0], params);
  CHECK(rep.ccl == 0.0);  // contrastive needs both bands
}

TEST_CASE("permuting classes in the head permutes the logits") {
  const Corpus corpus = tiny_corpus();
  RunConfig cfg = small_config();
  Rng rng(10);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  const Eigen::MatrixXd base = forward(corpus.conversations[0], params).logits;

  const std::vector<int> perm = {2, 0, 1};  // new row p came from old row perm[p]
  ModelParams permuted = params;
  for (int p = 0; p < 3; ++p) {
    permuted.w_head.row(p) = params.w_head.row(perm[p]);
    permuted.b_head(p) = params.b_head(perm[p]);
  }
  const Eigen::MatrixXd got = forward(corpus.conversations[0], permuted).logits;
  for (int p = 0; p < 3; ++p) {
    CHECK((got.col(p) - base.col(perm[p])).cwiseAbs().maxCoeff() == 0.0);
  }
  // argmax moves consistently with the permutation
  const std::vector<int> base_pred = predict(base);
  const std::vector<int> got_pred = predict(got);
  for (std::size_t i = 0; i < base_pred.size(); ++i) {
    CHECK(perm[got_pred[i]] == base_pred[i]);
  }
}

TEST_CASE("evaluate is invariant to conversation order") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig cfg = small_config();
  Rng rng(11);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);

  std::vector<const Conversation*> view = corpus.split_view("train");
  const MetricsReport before = evaluate(view, params);
  std::reverse(view.begin(), view.end());
  const MetricsReport after = evaluate(view, params);
  CHECK(before.weighted_f1 == after.weighted_f1);
  CHECK(before.confusion == after.confusion);
}

TEST_CASE("training descends on a learnable corpus") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig cfg = small_config();
  cfg.epochs = 50;
  cfg.lambda_ccl = 0.1;
  const TrainResult result = train(corpus, cfg);
  const double first = result.log_lines[1]["total"].get<double>();
  const double last = result.log_lines.back()["total"].get<double>();
  CHECK(last < first);
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig cfg = small_config();
  cfg.epochs = 4;
  cfg.val_fraction = 0.2;
  const TrainResult a = train(corpus, cfg);
  const TrainResult b = train(corpus, cfg);
  REQUIRE(a.log_lines.size() == b.log_lines.size());
  for (std::size_t i = 0; i < a.log_lines.size(); ++i) {
    CHECK(a.log_lines[i].dump() == b.log_lines[i].dump());
  }
}

TEST_CASE("spatial baseline trains and skips the contrastive term") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig cfg = apply_ablation(small_config(), "fgn");
  cfg.epochs = 3;
  const TrainResult result = train(corpus, cfg);
  for (std::size_t i = 1; i < result.log_lines.size(); ++i) {
    CHECK(result.log_lines[i]["ccl"].get<double>() == 0.0);
  }
}

TEST_CASE("train rejects a corpus without a train split") {
  Corpus corpus = tiny_corpus();
  for (Conversation& conv : corpus.conversations) conv.split = "test";
  CHECK_THROWS_AS(train(corpus, small_config()), InvalidInput);
}

TEST_CASE("free-spectral forward rejects conversations beyond n_spec") {
  const Corpus corpus = tiny_corpus();
  RunConfig cfg = small_config();
  Rng rng(12);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);

  Conversation longer = corpus.conversations[1];
  for (int extra = 0; extra < 3; ++extra) {
    Utterance u = longer.utterances.back();
    u.index = longer.size();
    longer.utterances.push_back(u);
  }
  CHECK_THROWS_AS(forward(longer, params), InvalidInput);
}

TEST_CASE("oversmoothing probe reports a mean cosine in [-1, 1]") {
  const Corpus corpus = generate_synthetic(learnable_spec());
  RunConfig cfg = small_config();
  Rng rng(13);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  const double probe =
      oversmoothing_probe(corpus.split_view("train"), params);
  CHECK(probe >= -1.0);
  CHECK(probe <= 1.0);
}
