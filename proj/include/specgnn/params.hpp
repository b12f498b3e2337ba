// Model parameters, initialization, and a flat tensor registry. The registry
// drives the optimizer, checkpoint serialization, and finite-difference
// checks, so every trainable tensor is enumerated exactly once, in a fixed
// order.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specgnn/config.hpp"
#include "specgnn/encoding.hpp"
#include "specgnn/errors.hpp"
#include "specgnn/graph.hpp"
#include "specgnn/rng.hpp"
#include "specgnn/spectral.hpp"

namespace specgnn {

struct ModelDims {
  int d_text = 0, d_audio = 0, d_visual = 0;
  int d_model = 0;
  int n_classes = 0;
  int n_speakers = 0;
  int n_spec = 0;  // spectral length: 3 * max utterances seen at init
};

// Two-layer spatial low-pass baseline, used by the "without spectral network"
// ablation: X <- sigma(L^l X W), twice.
struct SpatialBaselineParams {
  Eigen::MatrixXd w1, w2;  // [d_model x d_model]
};

struct ModelParams {
  ModelDims dims;
  RunConfig config;
  SpeakerTable speaker;
  EncoderParams encoder;
  // free mode: layers[].op are the trainable tensors.
  // circulant mode: layers[].weight are trainable; op is rebuilt per
  // conversation from that conversation's filter spectrum.
  FgnStack low_stack, high_stack;
  SpatialBaselineParams spatial;
  Eigen::MatrixXd w_head;  // [n_classes x head_dim]
  Eigen::VectorXd b_head;
};

// Width of the per-utterance classifier input: one d_model block per
// (selected modality, active band); the spatial baseline has a single block
// per modality.
inline int head_input_dim(const RunConfig& c, int d_model) {
  const int per_modality = c.ablate_fgn ? 1 : c.n_bands();
  return c.n_modalities() * per_modality * d_model;
}

// Adjacency of the canonical conversation used to seed free-spectral
// operators: window edges at full weight, cross-modal edges at phi.
inline Eigen::MatrixXd canonical_adjacency(int n_utt, int window_k,
                                           double phi) {
  const int n = 3 * n_utt;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < 3; ++m) {
    const int base = m * n_utt;
    for (int i = 0; i < n_utt; ++i) {
      for (int j = i + 1; j <= std::min(n_utt - 1, i + window_k); ++j) {
        a(base + i, base + j) = a(base + j, base + i) = 1.0;
      }
    }
  }
  for (int i = 0; i < n_utt; ++i) {
    const int t = i, au = n_utt + i, v = 2 * n_utt + i;
    a(t, au) = a(au, t) = phi;
    a(t, v) = a(v, t) = phi;
    a(au, v) = a(v, au) = phi;
  }
  return a;
}

inline ModelParams init_model(const ModelDims& dims, const RunConfig& config,
                              Rng& rng) {
  validate_config(config);
  if (dims.d_model != config.d_model) {
    throw InvalidConfig("init_model: dims.d_model != config.d_model");
  }
  if (dims.n_spec % 3 != 0 || dims.n_spec < 3) {
    throw InvalidConfig("init_model: n_spec must be a positive multiple of 3");
  }
  ModelParams p;
  p.dims = dims;
  p.config = config;

  p.speaker.weight = init_matrix(dims.d_model, dims.n_speakers,
                                 dims.n_speakers, rng);

  const int hidden = dims.d_model / 2;
  p.encoder.gru_fwd = init_gru_cell(hidden, dims.d_text, rng);
  p.encoder.gru_bwd = init_gru_cell(hidden, dims.d_text, rng);
  p.encoder.w_audio = init_matrix(dims.d_model, dims.d_audio, dims.d_audio, rng);
  p.encoder.b_audio = Eigen::VectorXd::Zero(dims.d_model);
  p.encoder.w_visual =
      init_matrix(dims.d_model, dims.d_visual, dims.d_visual, rng);
  p.encoder.b_visual = Eigen::VectorXd::Zero(dims.d_model);

  if (config.ablate_fgn) {
    p.spatial.w1 = init_matrix(dims.d_model, dims.d_model, dims.d_model, rng);
    p.spatial.w2 = init_matrix(dims.d_model, dims.d_model, dims.d_model, rng);
  } else {
    const FilterPair canonical = normalized_filters(
        canonical_adjacency(dims.n_spec / 3, config.window_k, config.phi));
    auto make_stack = [&](Band band, const Eigen::MatrixXd& filter) {
      FgnStack stack;
      stack.activation = config.activation;
      for (int m = 0; m <= config.depth_m; ++m) {
        const Eigen::MatrixXd w =
            init_matrix(dims.d_model, dims.d_model, dims.d_model, rng);
        FourierGraphOperator fgo = build_fgo(filter, w, config.mode, band);
        if (config.mode == FgoMode::kFreeSpectral) {
          fgo.weight.resize(0, 0);  // op entries are the parameters now
        } else {
          fgo.op.resize(0, 0);  // rebuilt per conversation from its filter
        }
        stack.layers.push_back(std::move(fgo));
      }
      return stack;
    };
    if (config.use_low_band()) {
      p.low_stack = make_stack(Band::kLow, canonical.low);
    }
    if (config.use_high_band()) {
      p.high_stack = make_stack(Band::kHigh, canonical.high);
    }
  }

  const int head_dim = head_input_dim(config, dims.d_model);
  p.w_head = init_matrix(dims.n_classes, head_dim, head_dim, rng);
  p.b_head = Eigen::VectorXd::Zero(dims.n_classes);
  return p;
}

// A view into one trainable tensor. Complex tensors are exposed as their
// interleaved (re, im) doubles.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;  // in doubles
  std::vector<Eigen::Index> shape;
  bool is_complex = false;
};

namespace detail {

inline void add_tensor(std::vector<TensorRef>& out, const std::string& name,
                       Eigen::MatrixXd& m) {
  out.push_back({name, m.data(), static_cast<std::size_t>(m.size()),
                 {m.rows(), m.cols()}, false});
}

inline void add_tensor(std::vector<TensorRef>& out, const std::string& name,
                       Eigen::VectorXd& v) {
  out.push_back({name, v.data(), static_cast<std::size_t>(v.size()),
                 {v.size()}, false});
}

inline void add_tensor(std::vector<TensorRef>& out, const std::string& name,
                       Eigen::MatrixXcd& m) {
  out.push_back({name, reinterpret_cast<double*>(m.data()),
                 static_cast<std::size_t>(2 * m.size()), {m.rows(), m.cols()},
                 true});
}

inline void add_tensor(std::vector<TensorRef>& out, const std::string& name,
                       Eigen::VectorXcd& v) {
  out.push_back({name, reinterpret_cast<double*>(v.data()),
                 static_cast<std::size_t>(2 * v.size()), {v.size()}, true});
}

inline void add_gru(std::vector<TensorRef>& out, const std::string& prefix,
                    GruCellParams& g) {
  add_tensor(out, prefix + ".w_z", g.w_z);
  add_tensor(out, prefix + ".w_r", g.w_r);
  add_tensor(out, prefix + ".w_h", g.w_h);
  add_tensor(out, prefix + ".u_z", g.u_z);
  add_tensor(out, prefix + ".u_r", g.u_r);
  add_tensor(out, prefix + ".u_h", g.u_h);
  add_tensor(out, prefix + ".b_z", g.b_z);
  add_tensor(out, prefix + ".b_r", g.b_r);
  add_tensor(out, prefix + ".b_h", g.b_h);
}

inline void add_stack(std::vector<TensorRef>& out, const std::string& prefix,
                      FgnStack& stack, FgoMode mode) {
  for (std::size_t m = 0; m < stack.layers.size(); ++m) {
    FourierGraphOperator& layer = stack.layers[m];
    const std::string lp = prefix + ".layer" + std::to_string(m);
    if (mode == FgoMode::kFreeSpectral) {
      add_tensor(out, lp + ".op", layer.op);
    } else {
      add_tensor(out, lp + ".weight", layer.weight);
    }
    add_tensor(out, lp + ".bias", layer.bias);
  }
}

}  // namespace detail

// Every trainable tensor under the active configuration, fixed order.
inline std::vector<TensorRef> trainable_tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  detail::add_tensor(out, "speaker.weight", p.speaker.weight);
  detail::add_gru(out, "encoder.gru_fwd", p.encoder.gru_fwd);
  detail::add_gru(out, "encoder.gru_bwd", p.encoder.gru_bwd);
  detail::add_tensor(out, "encoder.w_audio", p.encoder.w_audio);
  detail::add_tensor(out, "encoder.b_audio", p.encoder.b_audio);
  detail::add_tensor(out, "encoder.w_visual", p.encoder.w_visual);
  detail::add_tensor(out, "encoder.b_visual", p.encoder.b_visual);
  if (p.config.ablate_fgn) {
    detail::add_tensor(out, "spatial.w1", p.spatial.w1);
    detail::add_tensor(out, "spatial.w2", p.spatial.w2);
  } else {
    if (p.config.use_low_band()) {
      detail::add_stack(out, "low", p.low_stack, p.config.mode);
    }
    if (p.config.use_high_band()) {
      detail::add_stack(out, "high", p.high_stack, p.config.mode);
    }
  }
  detail::add_tensor(out, "head.weight", p.w_head);
  detail::add_tensor(out, "head.bias", p.b_head);
  return out;
}

inline std::size_t parameter_count(ModelParams& p) {
  std::size_t n = 0;
  for (const TensorRef& t : trainable_tensors(p)) n += t.size;
  return n;
}

// Same structure with every trainable tensor zeroed; used as a gradient
// accumulator so gradients and parameters enumerate identically.
inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (TensorRef& t : trainable_tensors(z)) {
    std::fill(t.data, t.data + t.size, 0.0);
  }
  return z;
}

inline void accumulate(ModelParams& acc, const ModelParams& delta,
                       double scale = 1.0) {
  auto a = trainable_tensors(acc);
  auto d = trainable_tensors(const_cast<ModelParams&>(delta));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size; ++k) {
      a[i].data[k] += scale * d[i].data[k];
    }
  }
}

}  // namespace specgnn
