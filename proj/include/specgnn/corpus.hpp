// Conversation corpora: JSON load/save and the synthetic generator with
// planted slow-trend (low-frequency) and single-modality-flip
// (high-frequency, cross-modal) emotion structure.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specgnn/errors.hpp"
#include "specgnn/rng.hpp"

namespace specgnn {

struct Utterance {
  int index = 0;  // 0-based position, derived on load
  int speaker_id = 0;
  int label = 0;
  Eigen::VectorXd feat_text, feat_audio, feat_visual;
};

struct Conversation {
  std::string id;
  std::string split;  // "train" | "val" | "test"
  std::vector<Utterance> utterances;

  int size() const { return static_cast<int>(utterances.size()); }
};

struct CorpusDims {
  int text = 0, audio = 0, visual = 0;
};

struct Corpus {
  int n_classes = 0;
  CorpusDims dims;
  std::vector<Conversation> conversations;

  std::vector<const Conversation*> split_view(const std::string& tag) const {
    std::vector<const Conversation*> out;
    for (const auto& c : conversations) {
      if (c.split == tag) out.push_back(&c);
    }
    return out;
  }

  int max_utterances() const {
    int m = 0;
    for (const auto& c : conversations) m = std::max(m, c.size());
    return m;
  }

  int n_speakers() const {
    int m = -1;
    for (const auto& c : conversations) {
      for (const auto& u : c.utterances) m = std::max(m, u.speaker_id);
    }
    return m + 1;
  }
};

namespace detail {

inline void check_finite(const Eigen::VectorXd& v, const std::string& where) {
  if (!v.allFinite()) {
    throw ParseError("corpus: non-finite feature value at " + where);
  }
}

inline std::string utt_path(std::size_t ci, std::size_t ui,
                            const std::string& field) {
  std::ostringstream os;
  os << "conversations[" << ci << "].utterances[" << ui << "]." << field;
  return os.str();
}

}  // namespace detail

inline void validate_corpus(const Corpus& corpus) {
  if (corpus.n_classes < 1) throw ParseError("corpus: n_classes < 1");
  if (corpus.dims.text < 1 || corpus.dims.audio < 1 || corpus.dims.visual < 1) {
    throw InvalidInput("corpus: feature dims must be positive");
  }
  for (std::size_t ci = 0; ci < corpus.conversations.size(); ++ci) {
    const Conversation& conv = corpus.conversations[ci];
    if (conv.split != "train" && conv.split != "val" && conv.split != "test") {
      throw ParseError("corpus: conversations[" + std::to_string(ci) +
                       "] has unknown split tag '" + conv.split + "'");
    }
    if (conv.utterances.empty()) {
      throw ParseError("corpus: conversations[" + std::to_string(ci) +
                       "] is empty");
    }
    for (std::size_t ui = 0; ui < conv.utterances.size(); ++ui) {
      const Utterance& u = conv.utterances[ui];
      if (u.speaker_id < 0) {
        throw ParseError("corpus: negative speaker at " +
                         detail::utt_path(ci, ui, "speaker"));
      }
      if (u.label < 0 || u.label >= corpus.n_classes) {
        throw ParseError("corpus: label out of range [0, " +
                         std::to_string(corpus.n_classes) + ") at " +
                         detail::utt_path(ci, ui, "label"));
      }
      if (u.feat_text.size() != corpus.dims.text ||
          u.feat_audio.size() != corpus.dims.audio ||
          u.feat_visual.size() != corpus.dims.visual) {
        throw InvalidInput("corpus: feature dim mismatch at " +
                           detail::utt_path(ci, ui, "t/a/v"));
      }
      detail::check_finite(u.feat_text, detail::utt_path(ci, ui, "t"));
      detail::check_finite(u.feat_audio, detail::utt_path(ci, ui, "a"));
      detail::check_finite(u.feat_visual, detail::utt_path(ci, ui, "v"));
    }
  }
}

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  validate_corpus(corpus);
  nlohmann::json j;
  j["n_classes"] = corpus.n_classes;
  j["dims"] = {{"t", corpus.dims.text},
               {"a", corpus.dims.audio},
               {"v", corpus.dims.visual}};
  j["conversations"] = nlohmann::json::array();
  for (const Conversation& conv : corpus.conversations) {
    nlohmann::json jc;
    jc["id"] = conv.id;
    jc["split"] = conv.split;
    jc["utterances"] = nlohmann::json::array();
    for (const Utterance& u : conv.utterances) {
      nlohmann::json ju;
      ju["speaker"] = u.speaker_id;
      ju["label"] = u.label;
      ju["t"] = std::vector<double>(u.feat_text.begin(), u.feat_text.end());
      ju["a"] = std::vector<double>(u.feat_audio.begin(), u.feat_audio.end());
      ju["v"] =
          std::vector<double>(u.feat_visual.begin(), u.feat_visual.end());
      jc["utterances"].push_back(std::move(ju));
    }
    j["conversations"].push_back(std::move(jc));
  }
  return j;
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
  Corpus corpus;
  try {
    corpus.n_classes = j.at("n_classes").get<int>();
    corpus.dims.text = j.at("dims").at("t").get<int>();
    corpus.dims.audio = j.at("dims").at("a").get<int>();
    corpus.dims.visual = j.at("dims").at("v").get<int>();
    for (const auto& jc : j.at("conversations")) {
      Conversation conv;
      conv.id = jc.at("id").get<std::string>();
      conv.split = jc.at("split").get<std::string>();
      int index = 0;
      for (const auto& ju : jc.at("utterances")) {
        Utterance u;
        u.index = index++;
        u.speaker_id = ju.at("speaker").get<int>();
        u.label = ju.at("label").get<int>();
        const auto t = ju.at("t").get<std::vector<double>>();
        const auto a = ju.at("a").get<std::vector<double>>();
        const auto v = ju.at("v").get<std::vector<double>>();
        u.feat_text = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
        u.feat_audio = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
        u.feat_visual = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
        conv.utterances.push_back(std::move(u));
      }
      corpus.conversations.push_back(std::move(conv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corpus: malformed JSON: ") + e.what());
  }
  validate_corpus(corpus);
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("corpus: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("corpus: JSON parse failure in " + path + ": " +
                     e.what());
  }
  return corpus_from_json(j);
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("corpus: cannot write " + path);
  out << corpus_to_json(corpus).dump(2) << "\n";
}

// Synthetic corpus recipe. Base emotions follow a slow per-speaker cycle
// (low-frequency structure); with probability flip_rate an utterance's label
// flips to a different class and only one randomly chosen modality's features
// move to the flipped prototype (high-frequency, cross-modal structure).
struct SynthSpec {
  std::uint64_t seed = 0;
  int n_conversations = 10;
  int min_utterances = 8;
  int max_utterances = 16;
  int n_speakers = 4;
  int n_classes = 4;
  int trend_period = 16;  // speaker-local utterances per emotion cycle
  double flip_rate = 0.1;
  double noise_sigma = 0.1;
  CorpusDims dims{8, 8, 8};
  double train_fraction = 0.8;
  double val_fraction = 0.0;  // remainder of train/val goes to test
};

inline void validate_spec(const SynthSpec& spec) {
  if (spec.n_conversations < 1) throw InvalidConfig("synth: n_conversations < 1");
  if (spec.min_utterances < 1 || spec.max_utterances < spec.min_utterances) {
    throw InvalidConfig("synth: bad utterance range");
  }
  if (spec.n_speakers < 1) throw InvalidConfig("synth: n_speakers < 1");
  if (spec.n_classes < 2) throw InvalidConfig("synth: n_classes < 2");
  if (spec.trend_period < 2) throw InvalidConfig("synth: trend_period < 2");
  if (spec.flip_rate < 0.0 || spec.flip_rate > 1.0) {
    throw InvalidConfig("synth: flip_rate outside [0,1]");
  }
  if (spec.noise_sigma < 0.0) throw InvalidConfig("synth: negative noise");
  if (spec.dims.text < spec.n_classes || spec.dims.audio < spec.n_classes ||
      spec.dims.visual < spec.n_classes) {
    throw InvalidConfig("synth: dims must be >= n_classes for prototypes");
  }
  if (spec.train_fraction < 0.0 || spec.val_fraction < 0.0 ||
      spec.train_fraction + spec.val_fraction > 1.0) {
    throw InvalidConfig("synth: bad split fractions");
  }
}

// Which utterances were flipped, per conversation. Returned alongside the
// corpus so probes can score the flipped subset without widening the schema.
using FlipRecord = std::vector<std::vector<bool>>;

namespace detail {

// class prototype: 3 * e_c in each modality space
inline Eigen::VectorXd prototype(int cls, int dim, double scale = 3.0) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
  p(cls) = scale;
  return p;
}

inline Eigen::VectorXd noisy_prototype(int cls, int dim, double sigma,
                                       Rng& rng) {
  Eigen::VectorXd p = prototype(cls, dim);
  for (int i = 0; i < dim; ++i) p(i) += rng.normal(sigma);
  return p;
}

}  // namespace detail

inline Corpus generate_synthetic(const SynthSpec& spec,
                                 FlipRecord* flips = nullptr) {
  validate_spec(spec);
  const Rng master(spec.seed);
  Corpus corpus;
  corpus.n_classes = spec.n_classes;
  corpus.dims = spec.dims;
  if (flips != nullptr) flips->clear();

  const int n_train =
      static_cast<int>(std::lround(spec.train_fraction * spec.n_conversations));
  const int n_val =
      static_cast<int>(std::lround(spec.val_fraction * spec.n_conversations));

  for (int ci = 0; ci < spec.n_conversations; ++ci) {
    Rng rng = master.derive(static_cast<std::uint64_t>(ci));
    Conversation conv;
    conv.id = "synth-" + std::to_string(ci);
    conv.split = ci < n_train ? "train" : (ci < n_train + n_val ? "val" : "test");

    const int n_utt = spec.min_utterances +
                      static_cast<int>(rng.below(
                          spec.max_utterances - spec.min_utterances + 1));
    // one slow emotional arc per conversation; every speaker rides it, so
    // each speaker's own utterance sequence follows the cycle too
    const int phase = static_cast<int>(rng.below(spec.trend_period));
    std::vector<bool> conv_flips;

    for (int ui = 0; ui < n_utt; ++ui) {
      Utterance u;
      u.index = ui;
      u.speaker_id = static_cast<int>(rng.below(spec.n_speakers));

      const int tick = (ui + phase) % spec.trend_period;
      const int base_label = tick * spec.n_classes / spec.trend_period;

      const bool flipped = rng.uniform() < spec.flip_rate;
      int label = base_label;
      int signal_modality = -1;
      if (flipped) {
        label = static_cast<int>(rng.below(spec.n_classes - 1));
        if (label >= base_label) ++label;  // uniform over classes != base
        signal_modality = static_cast<int>(rng.below(3));
      }
      u.label = label;
      conv_flips.push_back(flipped);

      const int t_cls = signal_modality == 0 ? label : base_label;
      const int a_cls = signal_modality == 1 ? label : base_label;
      const int v_cls = signal_modality == 2 ? label : base_label;
      u.feat_text =
          detail::noisy_prototype(t_cls, spec.dims.text, spec.noise_sigma, rng);
      u.feat_audio = detail::noisy_prototype(a_cls, spec.dims.audio,
                                             spec.noise_sigma, rng);
      u.feat_visual = detail::noisy_prototype(v_cls, spec.dims.visual,
                                              spec.noise_sigma, rng);
      conv.utterances.push_back(std::move(u));
    }
    corpus.conversations.push_back(std::move(conv));
    if (flips != nullptr) flips->push_back(std::move(conv_flips));
  }
  return corpus;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.seed = j.value("seed", s.seed);
    s.n_conversations = j.value("n_conversations", s.n_conversations);
    s.min_utterances = j.value("min_utterances", s.min_utterances);
    s.max_utterances = j.value("max_utterances", s.max_utterances);
    s.n_speakers = j.value("n_speakers", s.n_speakers);
    s.n_classes = j.value("n_classes", s.n_classes);
    s.trend_period = j.value("trend_period", s.trend_period);
    s.flip_rate = j.value("flip_rate", s.flip_rate);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    if (j.contains("dims")) {
      s.dims.text = j.at("dims").value("t", s.dims.text);
      s.dims.audio = j.at("dims").value("a", s.dims.audio);
      s.dims.visual = j.at("dims").value("v", s.dims.visual);
    }
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.val_fraction = j.value("val_fraction", s.val_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec: malformed JSON: ") + e.what());
  }
  validate_spec(s);
  return s;
}

inline nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  return nlohmann::json{{"seed", s.seed},
                        {"n_conversations", s.n_conversations},
                        {"min_utterances", s.min_utterances},
                        {"max_utterances", s.max_utterances},
                        {"n_speakers", s.n_speakers},
                        {"n_classes", s.n_classes},
                        {"trend_period", s.trend_period},
                        {"flip_rate", s.flip_rate},
                        {"noise_sigma", s.noise_sigma},
                        {"dims",
                         {{"t", s.dims.text},
                          {"a", s.dims.audio},
                          {"v", s.dims.visual}}},
                        {"train_fraction", s.train_fraction},
                        {"val_fraction", s.val_fraction}};
}

}  // namespace specgnn
