// Command-line driver: corpus synthesis, training, evaluation, the
// spatial-vs-spectral benchmark, and filter/operator spectrum dumps.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage/config error.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specgnn/bench.hpp"
#include "specgnn/checkpoint.hpp"
#include "specgnn/pipeline.hpp"

namespace {

using namespace specgnn;

struct ConfigOverrides {
  std::string config_path;
  std::uint64_t seed = 0;
  double lr = 0, phi = 0, tau = 0, lambda_ccl = 0;
  int epochs = 0, batch = 0, depth = 0, d_model = 0, window_k = 0,
      patience = 0;
  std::string mode, activation, modalities, bands, ablate;
  bool deterministic = true;

  void register_options(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration JSON file");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--epochs", epochs, "epoch budget");
    cmd->add_option("--batch", batch, "minibatch size (conversations)");
    cmd->add_option("--depth", depth, "spectral network depth M");
    cmd->add_option("--d-model", d_model, "model width");
    cmd->add_option("--window-k", window_k, "same-modal window radius");
    cmd->add_option("--phi", phi, "cross-modal edge weight scale");
    cmd->add_option("--tau", tau, "contrastive temperature");
    cmd->add_option("--lambda-ccl", lambda_ccl, "contrastive loss weight");
    cmd->add_option("--patience", patience, "early-stopping patience");
    cmd->add_option("--mode", mode, "operator mode: circulant|free");
    cmd->add_option("--activation", activation,
                    "identity|relu|leaky_relu|tanh");
    cmd->add_option("--modalities", modalities, "subset of tav, e.g. ta");
    cmd->add_option("--bands", bands, "low|high|lowhigh");
    cmd->add_option("--ablate", ablate, "se|cl|fgn");
    cmd->add_flag("--deterministic,!--no-deterministic", deterministic,
                  "single-threaded bit-stable execution (always on)");
  }

  RunConfig resolve(const CLI::App* cmd) const {
    RunConfig cfg =
        config_path.empty() ? RunConfig{} : load_config(config_path);
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--lr")) cfg.lr = lr;
    if (cmd->count("--epochs")) cfg.epochs = epochs;
    if (cmd->count("--batch")) cfg.batch_size = batch;
    if (cmd->count("--depth")) cfg.depth_m = depth;
    if (cmd->count("--d-model")) cfg.d_model = d_model;
    if (cmd->count("--window-k")) cfg.window_k = window_k;
    if (cmd->count("--phi")) cfg.phi = phi;
    if (cmd->count("--tau")) cfg.tau = tau;
    if (cmd->count("--lambda-ccl")) cfg.lambda_ccl = lambda_ccl;
    if (cmd->count("--patience")) cfg.patience = patience;
    if (cmd->count("--mode")) cfg.mode = mode_from_string(mode);
    if (cmd->count("--activation")) {
      cfg.activation = activation_from_string(activation);
    }
    if (cmd->count("--modalities")) cfg.modalities = modalities;
    if (cmd->count("--bands")) cfg.bands = bands;
    if (cmd->count("--ablate")) cfg = apply_ablation(cfg, ablate);
    if (cmd->count("--deterministic") || cmd->count("--no-deterministic")) {
      cfg.deterministic = deterministic;
    }
    validate_config(cfg);
    return cfg;
  }
};

void print_metrics(const MetricsReport& m, std::ostream& os) {
  os << std::fixed << std::setprecision(4);
  os << "class      acc      f1   support\n";
  for (std::size_t c = 0; c < m.per_class_acc.size(); ++c) {
    os << std::setw(5) << c << std::setw(9) << m.per_class_acc[c]
       << std::setw(8) << m.per_class_f1[c] << std::setw(10)
       << m.confusion.row(static_cast<Eigen::Index>(c)).sum() << "\n";
  }
  os << "weighted acc " << m.weighted_acc << "  weighted f1 " << m.weighted_f1
     << "  (n=" << m.total << ")\n";
  os.unsetf(std::ios::fixed);
  os << std::setprecision(6);
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["weighted_acc"] = m.weighted_acc;
  j["weighted_f1"] = m.weighted_f1;
  j["per_class_acc"] = m.per_class_acc;
  j["per_class_f1"] = m.per_class_f1;
  j["total"] = m.total;
  std::vector<std::vector<int>> confusion(m.confusion.rows());
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) {
      confusion[r].push_back(m.confusion(r, c));
    }
  }
  j["confusion"] = confusion;
  return j;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path);
  return os;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path,
              const CLI::App* cmd, std::uint64_t seed) {
  std::ifstream in(spec_path);
  if (!in) throw ParseError("cannot open " + spec_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("synth spec: " + std::string(e.what()));
  }
  SynthSpec spec = synth_spec_from_json(j);
  if (cmd->count("--seed")) spec.seed = seed;
  const Corpus corpus = generate_synthetic(spec);
  save_corpus(corpus, out_path);
  std::cout << "wrote " << corpus.conversations.size() << " conversations to "
            << out_path << "\n"
            << "spec: " << synth_spec_to_json(spec).dump() << "\n";
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& out_path,
              const std::string& log_path, const ConfigOverrides& overrides,
              const CLI::App* cmd) {
  const Corpus corpus = load_corpus(corpus_path);
  const RunConfig cfg = overrides.resolve(cmd);

  TrainResult result = train(corpus, cfg, &std::cerr);
  save_checkpoint(result.params, out_path);

  const std::string log_file =
      log_path.empty() ? out_path + ".log.jsonl" : log_path;
  std::ofstream log = open_out(log_file);
  for (const nlohmann::json& line : result.log_lines) {
    log << line.dump() << "\n";
  }

  std::cout << "parameters: " << parameter_count(result.params) << "\n"
            << "epochs run: " << result.epochs_run << "\n";
  if (!std::isnan(result.best_val_wf1)) {
    std::cout << "best val weighted-F1: " << result.best_val_wf1
              << " (epoch " << result.best_epoch << ")\n";
  }
  const auto test_view = corpus.split_view("test");
  if (!test_view.empty()) {
    std::cout << "test split:\n";
    print_metrics(evaluate(test_view, result.params), std::cout);
  }
  std::cout << "checkpoint: " << out_path << "\nlog: " << log_file << "\n";
  return 0;
}

int cmd_eval(const std::string& corpus_path, const std::string& ckpt_path,
             const std::string& split, const std::string& json_path) {
  const Corpus corpus = load_corpus(corpus_path);
  const ModelParams params = load_checkpoint(ckpt_path);
  const auto view = corpus.split_view(split);
  if (view.empty()) {
    throw InvalidInput("eval: corpus has no '" + split + "' conversations");
  }
  const MetricsReport metrics = evaluate(view, params);
  const double probe = oversmoothing_probe(view, params);
  print_metrics(metrics, std::cout);
  std::cout << "oversmoothing mean pairwise cosine: " << probe << "\n";
  if (!json_path.empty()) {
    nlohmann::json j;
    j["config"] = config_to_json(params.config);
    j["split"] = split;
    j["metrics"] = metrics_to_json(metrics);
    j["oversmoothing_mean_cos"] = probe;
    open_out(json_path) << j.dump(2) << "\n";
    std::cout << "json: " << json_path << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& sizes_csv, int dim, int repeats,
              const std::string& out_path, std::uint64_t seed) {
  std::vector<int> sizes;
  std::stringstream ss(sizes_csv);
  for (std::string item; std::getline(ss, item, ',');) {
    sizes.push_back(std::stoi(item));
  }
  if (sizes.empty()) throw InvalidConfig("bench: empty size list");

  const std::vector<BenchRow> rows = run_bench(sizes, dim, repeats, seed);

  const nlohmann::json cfg = {{"sizes", sizes},
                              {"dim", dim},
                              {"repeats", repeats},
                              {"seed", seed}};
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  *os << "# config: " << cfg.dump() << "\n";
  *os << "n,residual,spatial_seconds,spectral_seconds\n";
  for (const BenchRow& r : rows) {
    *os << r.n << "," << r.residual << "," << r.spatial_seconds << ","
        << r.spectral_seconds << "\n";
  }
  const double s_spatial = spatial_slope(rows);
  const double s_spectral = spectral_slope(rows);
  std::cout << "log-log slope spatial " << s_spatial << ", spectral "
            << s_spectral << "\n";
  if (!(s_spectral < s_spatial)) {
    std::cerr << "bench: spectral route did not scale better\n";
    return 1;
  }
  return 0;
}

int cmd_spectrum(const std::string& corpus_path, const std::string& ckpt_path,
                 int conversation_index, const std::string& prefix,
                 bool dump_matrices, const ConfigOverrides& overrides,
                 const CLI::App* cmd) {
  const Corpus corpus = load_corpus(corpus_path);
  if (conversation_index < 0 ||
      conversation_index >= static_cast<int>(corpus.conversations.size())) {
    throw InvalidInput("spectrum: conversation index out of range");
  }
  ModelParams params = [&] {
    if (!ckpt_path.empty()) return load_checkpoint(ckpt_path);
    const RunConfig cfg = overrides.resolve(cmd);
    Rng rng = Rng(cfg.seed).derive(0);
    return init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  }();
  const Conversation& conv = corpus.conversations[conversation_index];
  const GraphContext ctx =
      build_graph_context(encode_conversation(conv, params), params.config);
  const std::string cfg_echo = config_to_json(params.config).dump();

  {
    auto os = open_out(prefix + "_filter_eigenvalues.csv");
    os << "# config: " << cfg_echo << "\n";
    os << "filter,index,eigenvalue\n";
    for (const auto& [name, m] :
         {std::pair{"low", &ctx.filters.low}, {"high", &ctx.filters.high}}) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m);
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        os << name << "," << i << "," << es.eigenvalues()(i) << "\n";
      }
    }
  }
  {
    auto os = open_out(prefix + "_lambda.csv");
    os << "# config: " << cfg_echo << "\n";
    os << "band,frequency,real,imag,magnitude\n";
    for (const auto& [name, lam] : {std::pair{"low", &ctx.lambda_low},
                                    {"high", &ctx.lambda_high}}) {
      for (Eigen::Index f = 0; f < lam->size(); ++f) {
        os << name << "," << f << "," << (*lam)(f).real() << ","
           << (*lam)(f).imag() << "," << std::abs((*lam)(f)) << "\n";
      }
    }
  }
  if (dump_matrices) {
    const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",",
                              "\n");
    for (const auto& [name, m] :
         {std::pair{"adjacency", &ctx.graph.adjacency},
          {"filter_low", &ctx.filters.low},
          {"filter_high", &ctx.filters.high}}) {
      auto os = open_out(prefix + "_" + name + ".csv");
      os << "# config: " << cfg_echo << "\n" << m->format(csv) << "\n";
    }
  }
  std::cout << "wrote spectrum CSVs with prefix " << prefix << " (conversation "
            << conv.id << ", " << ctx.graph.n_nodes << " nodes)\n";
  return 0;
}

int cmd_params(const std::string& corpus_path,
               const ConfigOverrides& overrides, const CLI::App* cmd) {
  const Corpus corpus = load_corpus(corpus_path);
  const RunConfig cfg = overrides.resolve(cmd);
  Rng rng = Rng(cfg.seed).derive(0);
  ModelParams params = init_model(dims_from_corpus(corpus, cfg), cfg, rng);
  for (const TensorRef& t : trainable_tensors(params)) {
    std::cout << std::setw(28) << std::left << t.name << " ";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
      std::cout << (i ? "x" : "") << t.shape[i];
    }
    std::cout << (t.is_complex ? " complex" : "") << "\n";
  }
  std::cout << "total parameters (doubles): " << parameter_count(params)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "specgnn: frequency-domain graph network for multimodal conversation "
      "emotion recognition"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec_path, "synthesis spec JSON")
      ->required();
  synth->add_option("--out", synth_out, "corpus output path")->required();
  synth->add_option("--seed", synth_seed, "override the spec seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_corpus, train_out, train_log;
  ConfigOverrides train_overrides;
  train_cmd->add_option("--corpus", train_corpus, "corpus JSON")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")
      ->required();
  train_cmd->add_option("--log", train_log,
                        "training log path (default <out>.log.jsonl)");
  train_overrides.register_options(train_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_corpus, eval_ckpt, eval_split = "test", eval_json;
  eval_cmd->add_option("--corpus", eval_corpus, "corpus JSON")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")
      ->required();
  eval_cmd->add_option("--split", eval_split, "split tag (default test)");
  eval_cmd->add_option("--json", eval_json, "also write metrics JSON here");

  // bench
  auto* bench_cmd = app.add_subcommand(
      "bench", "time the spatial route against the spectral route");
  std::string bench_sizes = "256,512,1024,2048,4096,8192,16384";
  std::string bench_out;
  int bench_dim = 8, bench_repeats = 3;
  std::uint64_t bench_seed = 0;
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated node counts");
  bench_cmd->add_option("--dim", bench_dim, "feature dimension");
  bench_cmd->add_option("--repeats", bench_repeats, "timing repeats");
  bench_cmd->add_option("--out", bench_out, "CSV output path");
  bench_cmd->add_option("--seed", bench_seed, "rng seed");

  // spectrum
  auto* spectrum_cmd = app.add_subcommand(
      "spectrum", "dump filter eigenvalues and kernel spectra as CSV");
  std::string spec_corpus, spec_ckpt, spec_prefix = "spectrum";
  int spec_conv = 0;
  bool spec_dump_matrices = false;
  ConfigOverrides spectrum_overrides;
  spectrum_cmd->add_option("--corpus", spec_corpus, "corpus JSON")->required();
  spectrum_cmd->add_option("--checkpoint", spec_ckpt,
                           "optional trained checkpoint");
  spectrum_cmd->add_option("--conversation", spec_conv,
                           "conversation index (default 0)");
  spectrum_cmd->add_option("--out-prefix", spec_prefix, "output file prefix");
  spectrum_cmd->add_flag("--dump-matrices", spec_dump_matrices,
                         "also dump adjacency and both filters");
  spectrum_overrides.register_options(spectrum_cmd);

  // params
  auto* params_cmd =
      app.add_subcommand("params", "print the trainable tensor inventory");
  std::string params_corpus;
  ConfigOverrides params_overrides;
  params_cmd->add_option("--corpus", params_corpus, "corpus JSON")->required();
  params_overrides.register_options(params_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_spec_path, synth_out, synth, synth_seed);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_corpus, train_out, train_log, train_overrides,
                       train_cmd);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_corpus, eval_ckpt, eval_split, eval_json);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_sizes, bench_dim, bench_repeats, bench_out,
                       bench_seed);
    }
    if (spectrum_cmd->parsed()) {
      return cmd_spectrum(spec_corpus, spec_ckpt, spec_conv, spec_prefix,
                          spec_dump_matrices, spectrum_overrides,
                          spectrum_cmd);
    }
    if (params_cmd->parsed()) {
      return cmd_params(params_corpus, params_overrides, params_cmd);
    }
  } catch (const specgnn::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const specgnn::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const specgnn::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
