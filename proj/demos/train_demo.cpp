// Minimal training walkthrough on an in-memory synthetic corpus.
#include <iostream>

#include "specgnn/pipeline.hpp"

int main() {
  using namespace specgnn;

  SynthSpec spec;
  spec.seed = 7;
  spec.n_conversations = 30;
  spec.min_utterances = 6;
  spec.max_utterances = 10;
  spec.flip_rate = 0.2;
  spec.noise_sigma = 0.3;
  const Corpus corpus = generate_synthetic(spec);

  RunConfig cfg;
  cfg.seed = 7;
  cfg.d_model = 8;
  cfg.depth_m = 2;
  cfg.epochs = 40;
  cfg.batch_size = 4;

  const TrainResult result = train(corpus, cfg);
  std::cout << "trained " << result.epochs_run << " epochs, "
            << parameter_count(const_cast<ModelParams&>(result.params))
            << " parameters\n";

  const auto test_view = corpus.split_view("test");
  const MetricsReport metrics = evaluate(test_view, result.params);
  std::cout << "test weighted F1: " << metrics.weighted_f1 << "\n"
            << "oversmoothing probe: "
            << oversmoothing_probe(test_view, result.params) << "\n";
  return 0;
}
