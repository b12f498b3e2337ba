// Run configuration: every hyperparameter, ablation switch, and seed. One
// config fully determines a run; it is echoed into every artifact.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "specgnn/errors.hpp"
#include "specgnn/spectral.hpp"

namespace specgnn {

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "tanh") return Activation::kTanh;
  throw InvalidConfig("unknown activation '" + s + "'");
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kTanh: return "tanh";
  }
  return "leaky_relu";
}

inline FgoMode mode_from_string(const std::string& s) {
  if (s == "circulant") return FgoMode::kCirculantExact;
  if (s == "free") return FgoMode::kFreeSpectral;
  throw InvalidConfig("unknown mode '" + s + "' (want circulant|free)");
}

struct RunConfig {
  std::uint64_t seed = 0;

  // graph
  int window_k = 4;
  double phi = 0.5;

  // spectral network
  int depth_m = 4;
  int d_model = 16;
  FgoMode mode = FgoMode::kFreeSpectral;
  Activation activation = Activation::kLeakyRelu;

  // objective
  double tau = 0.5;
  double lambda_ccl = 0.3;
  bool normalize_contrastive = true;

  // optimizer
  double lr = 1e-3;
  int batch_size = 8;
  int epochs = 200;
  int patience = 20;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double val_fraction = 0.1;  // carved from train when the corpus has no val

  // ablations / subsets
  bool ablate_speaker = false;      // speaker embedding forced to zero
  bool ablate_contrastive = false;  // contrastive term dropped from the loss
  bool ablate_fgn = false;          // two-layer spatial low-pass baseline
  std::string modalities = "tav";   // subset of "t","a","v"
  std::string bands = "lowhigh";    // "low" | "high" | "lowhigh"

  bool deterministic = true;

  bool use_low_band() const { return bands == "lowhigh" || bands == "low"; }
  bool use_high_band() const { return bands == "lowhigh" || bands == "high"; }
  bool use_modality(char m) const {
    return modalities.find(m) != std::string::npos;
  }
  int n_modalities() const { return static_cast<int>(modalities.size()); }
  int n_bands() const { return (use_low_band() ? 1 : 0) + (use_high_band() ? 1 : 0); }

  // contrastive learning needs both bands live
  bool contrastive_active() const {
    return !ablate_contrastive && !ablate_fgn && lambda_ccl > 0.0 &&
           use_low_band() && use_high_band();
  }
};

inline void validate_config(const RunConfig& c) {
  if (c.window_k < 0) throw InvalidConfig("config: window_k < 0");
  if (c.phi <= 0.0) throw InvalidConfig("config: phi <= 0");
  if (c.depth_m < 0) throw InvalidConfig("config: depth < 0");
  if (c.d_model < 2 || c.d_model % 2 != 0) {
    throw InvalidConfig("config: d_model must be even and >= 2");
  }
  if (c.tau <= 0.0) throw InvalidConfig("config: tau <= 0");
  if (c.lambda_ccl < 0.0) throw InvalidConfig("config: lambda_ccl < 0");
  if (c.lr <= 0.0) throw InvalidConfig("config: lr <= 0");
  if (c.batch_size < 1) throw InvalidConfig("config: batch_size < 1");
  if (c.epochs < 1) throw InvalidConfig("config: epochs < 1");
  if (c.patience < 1) throw InvalidConfig("config: patience < 1");
  if (c.weight_decay < 0.0) throw InvalidConfig("config: weight_decay < 0");
  if (c.val_fraction < 0.0 || c.val_fraction >= 1.0) {
    throw InvalidConfig("config: val_fraction outside [0,1)");
  }
  if (c.modalities.empty() ||
      c.modalities.find_first_not_of("tav") != std::string::npos) {
    throw InvalidConfig("config: modalities must be a nonempty subset of tav");
  }
  for (std::size_t i = 0; i + 1 < c.modalities.size(); ++i) {
    if (c.modalities.find(c.modalities[i], i + 1) != std::string::npos) {
      throw InvalidConfig("config: repeated modality flag");
    }
  }
  if (c.bands != "low" && c.bands != "high" && c.bands != "lowhigh") {
    throw InvalidConfig("config: bands must be low|high|lowhigh");
  }
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{{"seed", c.seed},
                        {"window_k", c.window_k},
                        {"phi", c.phi},
                        {"depth", c.depth_m},
                        {"d_model", c.d_model},
                        {"mode", to_string(c.mode)},
                        {"activation", to_string(c.activation)},
                        {"tau", c.tau},
                        {"lambda_ccl", c.lambda_ccl},
                        {"normalize_contrastive", c.normalize_contrastive},
                        {"lr", c.lr},
                        {"batch_size", c.batch_size},
                        {"epochs", c.epochs},
                        {"patience", c.patience},
                        {"weight_decay", c.weight_decay},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"adam_eps", c.adam_eps},
                        {"val_fraction", c.val_fraction},
                        {"ablate_speaker", c.ablate_speaker},
                        {"ablate_contrastive", c.ablate_contrastive},
                        {"ablate_fgn", c.ablate_fgn},
                        {"modalities", c.modalities},
                        {"bands", c.bands},
                        {"deterministic", c.deterministic}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.window_k = j.value("window_k", c.window_k);
    c.phi = j.value("phi", c.phi);
    c.depth_m = j.value("depth", c.depth_m);
    c.d_model = j.value("d_model", c.d_model);
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode"));
    if (j.contains("activation")) {
      c.activation = activation_from_string(j.at("activation"));
    }
    c.tau = j.value("tau", c.tau);
    c.lambda_ccl = j.value("lambda_ccl", c.lambda_ccl);
    c.normalize_contrastive =
        j.value("normalize_contrastive", c.normalize_contrastive);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.ablate_speaker = j.value("ablate_speaker", c.ablate_speaker);
    c.ablate_contrastive = j.value("ablate_contrastive", c.ablate_contrastive);
    c.ablate_fgn = j.value("ablate_fgn", c.ablate_fgn);
    c.modalities = j.value("modalities", c.modalities);
    c.bands = j.value("bands", c.bands);
    c.deterministic = j.value("deterministic", c.deterministic);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: malformed JSON: ") + e.what());
  }
  validate_config(c);
  return c;
}

// "se" zeroes the speaker embedding, "cl" drops the contrastive term, "fgn"
// swaps the spectral stacks for the two-layer spatial low-pass baseline.
inline RunConfig apply_ablation(RunConfig c, const std::string& which) {
  if (which == "se") {
    c.ablate_speaker = true;
  } else if (which == "cl") {
    c.ablate_contrastive = true;
  } else if (which == "fgn") {
    c.ablate_fgn = true;
  } else {
    throw InvalidConfig("unknown ablation '" + which + "' (want se|cl|fgn)");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config: JSON parse failure in " + path + ": " +
                     e.what());
  }
  return config_from_json(j);
}

}  // namespace specgnn
