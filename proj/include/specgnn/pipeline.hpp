// End-to-end model: encode -> fuse speaker -> interaction graph -> dual-band
// spectral stacks -> per-band inverse transform -> classifier, plus the
// training loop, evaluation, and ablation wiring.
//
// The similarity-derived adjacency (and everything computed from it: filters,
// kernel spectra) is rebuilt from the current encoder outputs on every
// forward pass but treated as a constant during differentiation. Gradients
// flow through the node features only. A precomputed GraphContext can be
// passed in to pin the graph, which is what the finite-difference checks do.
#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specgnn/config.hpp"
#include "specgnn/corpus.hpp"
#include "specgnn/encoding.hpp"
#include "specgnn/errors.hpp"
#include "specgnn/graph.hpp"
#include "specgnn/metrics.hpp"
#include "specgnn/objective.hpp"
#include "specgnn/optim.hpp"
#include "specgnn/params.hpp"
#include "specgnn/spectral.hpp"

namespace specgnn {

struct EncodedFeatures {
  std::vector<Eigen::VectorXd> text_seq;                    // raw phi_t
  std::vector<Eigen::VectorXd> u_text, u_audio, u_visual;   // encoder outputs
  std::vector<Eigen::VectorXd> x_text, x_audio, x_visual;   // + speaker
  BiGruCache gru_cache;
};

struct GraphContext {
  InteractionGraph graph;
  FilterPair filters;
  Eigen::VectorXcd lambda_low, lambda_high;  // circulant kernel spectra
  bool valid = false;
};

struct ForwardResult {
  Eigen::MatrixXd logits;  // [N x C]
  ContrastiveBatch batch;  // both bands live
  bool has_batch = false;
  double residue_low = 0.0, residue_high = 0.0;

  // caches for the backward pass
  EncodedFeatures enc;
  GraphContext ctx;
  Eigen::MatrixXd x_nodes;   // [3N x d]
  Eigen::MatrixXd x_padded;  // [n_work x d]
  FgnBandCache cache_low, cache_high;
  FgnStack built_low, built_high;  // circulant mode: per-conversation ops
  Eigen::MatrixXd low_spatial, high_spatial;  // [3N x d]
  Eigen::MatrixXd sp_pre1, sp_out1, sp_pre2, sp_out2;  // spatial baseline
  Eigen::MatrixXd head_input, head_relu;  // [N x head_dim]
};

inline EncodedFeatures encode_conversation(const Conversation& conv,
                                           const ModelParams& params) {
  if (conv.utterances.empty()) {
    throw InvalidInput("forward: empty conversation");
  }
  EncodedFeatures enc;
  const int n = conv.size();
  enc.text_seq.reserve(n);
  for (const Utterance& u : conv.utterances) enc.text_seq.push_back(u.feat_text);
  enc.u_text =
      encode_text_forward(enc.text_seq, params.encoder, &enc.gru_cache);
  enc.u_audio.reserve(n);
  enc.u_visual.reserve(n);
  for (const Utterance& u : conv.utterances) {
    enc.u_audio.push_back(
        encode_affine(u.feat_audio, params.encoder.w_audio,
                      params.encoder.b_audio));
    enc.u_visual.push_back(
        encode_affine(u.feat_visual, params.encoder.w_visual,
                      params.encoder.b_visual));
  }
  enc.x_text.resize(n);
  enc.x_audio.resize(n);
  enc.x_visual.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(params.dims.d_model);
    if (!params.config.ablate_speaker) {
      s = embed_speaker(conv.utterances[i].speaker_id, params.speaker);
    }
    enc.x_text[i] = fuse_speaker(enc.u_text[i], s);
    enc.x_audio[i] = fuse_speaker(enc.u_audio[i], s);
    enc.x_visual[i] = fuse_speaker(enc.u_visual[i], s);
  }
  return enc;
}

inline GraphContext build_graph_context(const EncodedFeatures& enc,
                                        const RunConfig& config) {
  GraphContext ctx;
  ctx.graph = build_interaction_graph(enc.x_text, enc.x_audio, enc.x_visual,
                                      config.window_k, config.phi);
  ctx.filters = normalized_filters(ctx.graph.adjacency);
  ctx.lambda_low = kernel_spectrum(circulant_kernel_row(ctx.filters.low));
  ctx.lambda_high = kernel_spectrum(circulant_kernel_row(ctx.filters.high));
  ctx.valid = true;
  return ctx;
}

namespace detail {

// circulant mode: materialize this conversation's operators from the shared
// per-layer weights and the conversation's kernel spectrum
inline FgnStack materialize_stack(const FgnStack& stored,
                                  const Eigen::VectorXcd& lambda) {
  FgnStack built;
  built.activation = stored.activation;
  built.layers.reserve(stored.layers.size());
  for (const FourierGraphOperator& layer : stored.layers) {
    FourierGraphOperator fgo;
    fgo.band = layer.band;
    fgo.mode = layer.mode;
    fgo.bias = layer.bias;
    const Eigen::Index d = layer.weight.rows();
    fgo.op.resize(lambda.size() * d, d);
    for (Eigen::Index f = 0; f < lambda.size(); ++f) {
      fgo.op_block(f) = lambda(f) * layer.weight;
    }
    built.layers.push_back(std::move(fgo));
  }
  return built;
}

struct HeadLayout {
  // block row offset in the head input for (modality index, band index)
  std::vector<std::pair<int, int>> blocks;  // (modality 0..2, band 0=low/1=high/-1=spatial)
};

inline HeadLayout head_layout(const RunConfig& c) {
  HeadLayout layout;
  const char mods[3] = {'t', 'a', 'v'};
  for (int m = 0; m < 3; ++m) {
    if (!c.use_modality(mods[m])) continue;
    if (c.ablate_fgn) {
      layout.blocks.emplace_back(m, -1);
    } else {
      if (c.use_low_band()) layout.blocks.emplace_back(m, 0);
      if (c.use_high_band()) layout.blocks.emplace_back(m, 1);
    }
  }
  return layout;
}

}  // namespace detail

inline ForwardResult forward(const Conversation& conv,
                             const ModelParams& params,
                             const GraphContext* fixed_ctx = nullptr) {
  const RunConfig& cfg = params.config;
  const int n = conv.size();
  const int d = params.dims.d_model;

  ForwardResult r;
  r.enc = encode_conversation(conv, params);

  r.x_nodes.resize(3 * n, d);
  for (int i = 0; i < n; ++i) {
    r.x_nodes.row(i) = r.enc.x_text[i];
    r.x_nodes.row(n + i) = r.enc.x_audio[i];
    r.x_nodes.row(2 * n + i) = r.enc.x_visual[i];
  }

  const bool need_ctx =
      cfg.ablate_fgn || cfg.mode == FgoMode::kCirculantExact;
  if (fixed_ctx != nullptr) {
    r.ctx = *fixed_ctx;
  } else if (need_ctx) {
    r.ctx = build_graph_context(r.enc, cfg);
  }

  if (cfg.ablate_fgn) {
    // X <- sigma(L^l X W), two layers
    const Eigen::MatrixXd& low = r.ctx.filters.low;
    r.sp_pre1 = low * r.x_nodes * params.spatial.w1;
    r.sp_out1 = r.sp_pre1.unaryExpr(
        [&](double v) { return activate_scalar(cfg.activation, v); });
    r.sp_pre2 = low * r.sp_out1 * params.spatial.w2;
    r.sp_out2 = r.sp_pre2.unaryExpr(
        [&](double v) { return activate_scalar(cfg.activation, v); });
  } else {
    int n_work = 3 * n;
    if (cfg.mode == FgoMode::kFreeSpectral) {
      n_work = params.dims.n_spec;
      if (3 * n > n_work) {
        throw InvalidInput("forward: conversation has " + std::to_string(n) +
                           " utterances but the model's spectral length is " +
                           std::to_string(n_work / 3));
      }
    }
    r.x_padded = Eigen::MatrixXd::Zero(n_work, d);
    r.x_padded.topRows(3 * n) = r.x_nodes;

    auto run_band = [&](const FgnStack& stored, const Eigen::VectorXcd& lam,
                        FgnBandCache& cache, FgnStack& built,
                        double& residue) {
      const FgnStack* stack = &stored;
      if (cfg.mode == FgoMode::kCirculantExact) {
        built = detail::materialize_stack(stored, lam);
        stack = &built;
      }
      const FrequencyFeatures y = fgn_band_forward(r.x_padded, *stack, &cache);
      return idft_nodes_real(y, &residue).topRows(3 * n).eval();
    };
    if (cfg.use_low_band()) {
      r.low_spatial = run_band(params.low_stack, r.ctx.lambda_low, r.cache_low,
                               r.built_low, r.residue_low);
    }
    if (cfg.use_high_band()) {
      r.high_spatial = run_band(params.high_stack, r.ctx.lambda_high,
                                r.cache_high, r.built_high, r.residue_high);
    }
    if (cfg.use_low_band() && cfg.use_high_band()) {
      r.batch.low = r.low_spatial;
      r.batch.high = r.high_spatial;
      r.batch.tau = cfg.tau;
      r.has_batch = true;
    }
  }

  // classifier: concat selected (modality, band) blocks per utterance
  const detail::HeadLayout layout = detail::head_layout(cfg);
  const int head_dim = head_input_dim(cfg, d);
  r.head_input.resize(n, head_dim);
  for (int i = 0; i < n; ++i) {
    int off = 0;
    for (const auto& [mod, band] : layout.blocks) {
      const int node = mod * n + i;
      if (band == -1) {
        r.head_input.row(i).segment(off, d) = r.sp_out2.row(node);
      } else if (band == 0) {
        r.head_input.row(i).segment(off, d) = r.low_spatial.row(node);
      } else {
        r.head_input.row(i).segment(off, d) = r.high_spatial.row(node);
      }
      off += d;
    }
  }
  r.head_relu = r.head_input.cwiseMax(0.0);
  r.logits = r.head_relu * params.w_head.transpose();
  r.logits.rowwise() += params.b_head.transpose();
  if (!r.logits.allFinite()) {
    throw NumericalError("forward: non-finite logits");
  }
  return r;
}

// Row-wise argmax; ties resolve to the lowest class index.
inline std::vector<int> predict(const Eigen::MatrixXd& logits) {
  std::vector<int> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    }
    out[i] = best;
  }
  return out;
}

inline std::vector<int> conversation_labels(const Conversation& conv) {
  std::vector<int> labels;
  labels.reserve(conv.utterances.size());
  for (const Utterance& u : conv.utterances) labels.push_back(u.label);
  return labels;
}

inline LossReport conversation_loss(const Conversation& conv,
                                    const ModelParams& params,
                                    const GraphContext* fixed_ctx = nullptr,
                                    ForwardResult* fwd_out = nullptr) {
  ForwardResult r = forward(conv, params, fixed_ctx);
  LossReport report;
  report.ce = cross_entropy_from_logits(r.logits, conversation_labels(conv));
  report.lambda_ccl =
      params.config.contrastive_active() ? params.config.lambda_ccl : 0.0;
  if (params.config.contrastive_active() && r.has_batch) {
    report.lfcl = lfcl(r.batch, params.config.normalize_contrastive);
    report.hfcl = hfcl(r.batch, params.config.normalize_contrastive);
    report.ccl = report.lfcl + report.hfcl;
  }
  report.total = total_loss(report.ce, report.ccl, report.lambda_ccl);
  if (fwd_out != nullptr) *fwd_out = std::move(r);
  return report;
}

// Forward + backward. Gradients are scaled by `scale` and accumulated into
// `grads` (a zeros_like(params) structure).
inline LossReport conversation_loss_and_grads(
    const Conversation& conv, const ModelParams& params, ModelParams& grads,
    double scale = 1.0, const GraphContext* fixed_ctx = nullptr,
    ForwardResult* fwd_out = nullptr) {
  const RunConfig& cfg = params.config;
  const int n = conv.size();
  const int d = params.dims.d_model;

  ForwardResult r = forward(conv, params, fixed_ctx);

  LossReport report;
  Eigen::MatrixXd g_logits;
  report.ce =
      cross_entropy_from_logits(r.logits, conversation_labels(conv), &g_logits);
  g_logits *= scale;

  // head backward
  grads.w_head += g_logits.transpose() * r.head_relu;
  grads.b_head += g_logits.colwise().sum().transpose();
  Eigen::MatrixXd g_head_input = g_logits * params.w_head;
  for (Eigen::Index i = 0; i < g_head_input.rows(); ++i) {
    for (Eigen::Index j = 0; j < g_head_input.cols(); ++j) {
      if (r.head_input(i, j) <= 0.0) g_head_input(i, j) = 0.0;
    }
  }

  // scatter head blocks back onto node-embedding gradients
  Eigen::MatrixXd g_low =
      Eigen::MatrixXd::Zero(3 * n, d);
  Eigen::MatrixXd g_high = Eigen::MatrixXd::Zero(3 * n, d);
  Eigen::MatrixXd g_sp_out2 = Eigen::MatrixXd::Zero(3 * n, d);
  const detail::HeadLayout layout = detail::head_layout(cfg);
  for (int i = 0; i < n; ++i) {
    int off = 0;
    for (const auto& [mod, band] : layout.blocks) {
      const int node = mod * n + i;
      const auto seg = g_head_input.row(i).segment(off, d);
      if (band == -1) {
        g_sp_out2.row(node) += seg;
      } else if (band == 0) {
        g_low.row(node) += seg;
      } else {
        g_high.row(node) += seg;
      }
      off += d;
    }
  }

  // contrastive term
  report.lambda_ccl = cfg.contrastive_active() ? cfg.lambda_ccl : 0.0;
  if (cfg.contrastive_active() && r.has_batch) {
    ContrastiveGrads cg;
    const double combined =
        ccl_with_grads(r.batch, cfg.normalize_contrastive, &cg);
    report.lfcl = lfcl(r.batch, cfg.normalize_contrastive);
    report.hfcl = combined - report.lfcl;
    report.ccl = combined;
    g_low += scale * report.lambda_ccl * cg.d_low;
    g_high += scale * report.lambda_ccl * cg.d_high;
  }
  report.total = total_loss(report.ce, report.ccl, report.lambda_ccl);

  // band stacks (or spatial baseline) backward to node features
  Eigen::MatrixXd g_x_nodes = Eigen::MatrixXd::Zero(3 * n, d);
  if (cfg.ablate_fgn) {
    const Eigen::MatrixXd& low = r.ctx.filters.low;
    Eigen::MatrixXd g_pre2 = g_sp_out2;
    for (Eigen::Index i = 0; i < g_pre2.rows(); ++i) {
      for (Eigen::Index j = 0; j < g_pre2.cols(); ++j) {
        g_pre2(i, j) *= activate_grad_scalar(cfg.activation, r.sp_pre2(i, j));
      }
    }
    grads.spatial.w2 += (low * r.sp_out1).transpose() * g_pre2;
    Eigen::MatrixXd g_out1 = low * g_pre2 * params.spatial.w2.transpose();
    for (Eigen::Index i = 0; i < g_out1.rows(); ++i) {
      for (Eigen::Index j = 0; j < g_out1.cols(); ++j) {
        g_out1(i, j) *= activate_grad_scalar(cfg.activation, r.sp_pre1(i, j));
      }
    }
    grads.spatial.w1 += (low * r.x_nodes).transpose() * g_out1;
    g_x_nodes += low * g_out1 * params.spatial.w1.transpose();
  } else {
    const int n_work = static_cast<int>(r.x_padded.rows());
    auto band_backward = [&](const Eigen::MatrixXd& g_band,
                             const FgnStack& stored, const FgnStack& built,
                             const FgnBandCache& cache,
                             const Eigen::VectorXcd& lam, FgnStack& g_stack) {
      Eigen::MatrixXd g_spatial_full = Eigen::MatrixXd::Zero(n_work, d);
      g_spatial_full.topRows(3 * n) = g_band;
      const Eigen::MatrixXcd g_y = idft_real_backward(g_spatial_full);
      FgnBandGrads bg;
      const FgnStack& active =
          cfg.mode == FgoMode::kCirculantExact ? built : stored;
      const Eigen::MatrixXd g_x_full =
          fgn_band_backward(g_y, active, cache, &bg);
      for (std::size_t m = 0; m < stored.layers.size(); ++m) {
        if (cfg.mode == FgoMode::kFreeSpectral) {
          g_stack.layers[m].op += bg.d_op[m];
        } else {
          g_stack.layers[m].weight += fgo_weight_grad(bg.d_op[m], lam);
        }
        g_stack.layers[m].bias += bg.d_bias[m];
      }
      g_x_nodes += g_x_full.topRows(3 * n);
    };
    if (cfg.use_low_band()) {
      band_backward(g_low, params.low_stack, r.built_low, r.cache_low,
                    r.ctx.lambda_low, grads.low_stack);
    }
    if (cfg.use_high_band()) {
      band_backward(g_high, params.high_stack, r.built_high, r.cache_high,
                    r.ctx.lambda_high, grads.high_stack);
    }
  }

  // fuse/speaker backward
  std::vector<Eigen::VectorXd> g_u_text(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd g_t = g_x_nodes.row(i);
    const Eigen::VectorXd g_a = g_x_nodes.row(n + i);
    const Eigen::VectorXd g_v = g_x_nodes.row(2 * n + i);
    if (!cfg.ablate_speaker) {
      grads.speaker.weight.col(conv.utterances[i].speaker_id) +=
          g_t + g_a + g_v;
    }
    g_u_text[i] = g_t;
    grads.encoder.w_audio += g_a * conv.utterances[i].feat_audio.transpose();
    grads.encoder.b_audio += g_a;
    grads.encoder.w_visual += g_v * conv.utterances[i].feat_visual.transpose();
    grads.encoder.b_visual += g_v;
  }
  encode_text_backward(params.encoder, r.enc.gru_cache, g_u_text,
                       grads.encoder.gru_fwd, grads.encoder.gru_bwd);

  if (fwd_out != nullptr) *fwd_out = std::move(r);
  return report;
}

inline MetricsReport evaluate(
    const std::vector<const Conversation*>& conversations,
    const ModelParams& params,
    std::vector<std::vector<int>>* predictions = nullptr) {
  std::vector<int> labels, preds;
  if (predictions != nullptr) predictions->clear();
  for (const Conversation* conv : conversations) {
    const ForwardResult r = forward(*conv, params);
    std::vector<int> p = predict(r.logits);
    for (const Utterance& u : conv->utterances) labels.push_back(u.label);
    preds.insert(preds.end(), p.begin(), p.end());
    if (predictions != nullptr) predictions->push_back(std::move(p));
  }
  return compute_metrics(labels, preds, params.dims.n_classes);
}

// Mean pairwise cosine similarity of the per-node band embeddings after the
// stack; rises toward 1 as representations collapse.
inline double oversmoothing_probe(
    const std::vector<const Conversation*>& conversations,
    const ModelParams& params) {
  double total = 0.0;
  int count = 0;
  for (const Conversation* conv : conversations) {
    const ForwardResult r = forward(*conv, params);
    const int rows = static_cast<int>(r.x_nodes.rows());
    const int d = params.dims.d_model;
    const int bands = params.config.ablate_fgn ? 1 : params.config.n_bands();
    Eigen::MatrixXd e(rows, bands * d);
    if (params.config.ablate_fgn) {
      e = r.sp_out2;
    } else {
      int off = 0;
      if (params.config.use_low_band()) {
        e.middleCols(off, d) = r.low_spatial;
        off += d;
      }
      if (params.config.use_high_band()) {
        e.middleCols(off, d) = r.high_spatial;
      }
    }
    for (int i = 0; i < rows; ++i) {
      const double norm = e.row(i).norm();
      if (norm > 0.0) e.row(i) /= norm;
    }
    // sum of off-diagonal cosines = |sum of unit rows|^2 - #nonzero rows
    const Eigen::VectorXd s = e.colwise().sum();
    const double offdiag = s.squaredNorm() - static_cast<double>(rows);
    total += offdiag / (static_cast<double>(rows) * (rows - 1));
    ++count;
  }
  return count > 0 ? total / count : 0.0;
}

struct TrainResult {
  ModelParams params;  // best by validation weighted F1 (last if no val)
  std::vector<nlohmann::json> log_lines;
  int best_epoch = 0;
  double best_val_wf1 = 0.0;
  int epochs_run = 0;
};

inline ModelDims dims_from_corpus(const Corpus& corpus,
                                  const RunConfig& config) {
  ModelDims dims;
  dims.d_text = corpus.dims.text;
  dims.d_audio = corpus.dims.audio;
  dims.d_visual = corpus.dims.visual;
  dims.d_model = config.d_model;
  dims.n_classes = corpus.n_classes;
  dims.n_speakers = corpus.n_speakers();
  dims.n_spec = 3 * corpus.max_utterances();
  return dims;
}

// Minibatch AdamW with early stopping on validation weighted F1. When the
// corpus has no "val" split, the tail of the train split (val_fraction) is
// held out; with val_fraction == 0 early stopping is disabled.
inline TrainResult train(const Corpus& corpus, const RunConfig& config,
                         std::ostream* progress = nullptr) {
  validate_config(config);
  std::vector<const Conversation*> train_set = corpus.split_view("train");
  std::vector<const Conversation*> val_set = corpus.split_view("val");
  if (train_set.empty()) throw InvalidInput("train: empty train split");
  if (val_set.empty() && config.val_fraction > 0.0) {
    const int n_val = std::max(
        1, static_cast<int>(std::lround(config.val_fraction *
                                        static_cast<double>(train_set.size()))));
    if (n_val < static_cast<int>(train_set.size())) {
      val_set.assign(train_set.end() - n_val, train_set.end());
      train_set.resize(train_set.size() - n_val);
    }
  }

  const Rng master(config.seed);
  Rng init_rng = master.derive(0);
  TrainResult result;
  result.params = init_model(dims_from_corpus(corpus, config), config,
                             init_rng);
  ModelParams best = result.params;

  AdamW opt(config.lr, config.beta1, config.beta2, config.adam_eps,
            config.weight_decay);
  ModelParams grads = zeros_like(result.params);
  auto param_refs = trainable_tensors(result.params);
  auto grad_refs = trainable_tensors(grads);

  nlohmann::json header;
  header["config"] = config_to_json(config);
  header["parameters"] = parameter_count(result.params);
  header["train_conversations"] = train_set.size();
  header["val_conversations"] = val_set.size();
  result.log_lines.push_back(header);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_wf1 = -1.0;
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng = master.derive(1000 + static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    LossReport epoch_mean;
    double max_residue = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + config.batch_size);
      const double batch_scale = 1.0 / static_cast<double>(stop - start);
      for (TensorRef& t : grad_refs) std::fill(t.data, t.data + t.size, 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        ForwardResult fwd;
        const LossReport rep = conversation_loss_and_grads(
            *train_set[order[k]], result.params, grads, batch_scale, nullptr,
            &fwd);
        if (!std::isfinite(rep.total)) {
          std::ostringstream os;
          os << "train: non-finite loss at epoch " << epoch << ", conversation "
             << train_set[order[k]]->id << " (ce=" << rep.ce
             << ", ccl=" << rep.ccl << ")";
          throw NumericalError(os.str());
        }
        epoch_mean.ce += rep.ce;
        epoch_mean.lfcl += rep.lfcl;
        epoch_mean.hfcl += rep.hfcl;
        epoch_mean.ccl += rep.ccl;
        epoch_mean.total += rep.total;
        max_residue =
            std::max({max_residue, fwd.residue_low, fwd.residue_high});
        ++seen;
      }
      opt.step(param_refs, grad_refs);
    }
    const double inv = 1.0 / static_cast<double>(seen);
    epoch_mean.ce *= inv;
    epoch_mean.lfcl *= inv;
    epoch_mean.hfcl *= inv;
    epoch_mean.ccl *= inv;
    epoch_mean.total *= inv;

    nlohmann::json line;
    line["epoch"] = epoch;
    line["ce"] = epoch_mean.ce;
    line["lfcl"] = epoch_mean.lfcl;
    line["hfcl"] = epoch_mean.hfcl;
    line["ccl"] = epoch_mean.ccl;
    line["total"] = epoch_mean.total;
    line["max_idft_residue"] = max_residue;

    result.epochs_run = epoch;
    if (!val_set.empty()) {
      const MetricsReport val = evaluate(val_set, result.params);
      line["val_wacc"] = val.weighted_acc;
      line["val_wf1"] = val.weighted_f1;
      if (val.weighted_f1 > best_wf1) {
        best_wf1 = val.weighted_f1;
        best_epoch = epoch;
        best = result.params;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      line["val_wacc"] = nullptr;
      line["val_wf1"] = nullptr;
    }
    result.log_lines.push_back(line);
    if (progress != nullptr) {
      *progress << "epoch " << epoch << " total " << epoch_mean.total;
      if (!val_set.empty()) *progress << " val_wf1 " << line["val_wf1"];
      *progress << "\n";
    }
    if (!val_set.empty() && stale >= config.patience) break;
  }

  if (!val_set.empty()) {
    result.params = best;
    result.best_epoch = best_epoch;
    result.best_val_wf1 = best_wf1;
  } else {
    result.best_epoch = result.epochs_run;
    result.best_val_wf1 = std::nan("");
  }
  return result;
}

}  // namespace specgnn
