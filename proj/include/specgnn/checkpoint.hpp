// Versioned checkpoint container: a JSON header (config + dims) followed by
// every trainable tensor with a shape header and float64 payload, all
// little-endian regardless of host byte order.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specgnn/errors.hpp"
#include "specgnn/params.hpp"
#include "specgnn/rng.hpp"

namespace specgnn {
namespace detail {

constexpr char kCheckpointMagic[8] = {'S', 'P', 'E', 'C', 'G', 'N', 'N', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

inline double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace detail

inline void save_checkpoint(ModelParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("checkpoint: cannot write " + path);
  os.write(detail::kCheckpointMagic, 8);
  detail::write_u64(os, detail::kCheckpointVersion);

  nlohmann::json header;
  header["config"] = config_to_json(params.config);
  header["dims"] = {{"d_text", params.dims.d_text},
                    {"d_audio", params.dims.d_audio},
                    {"d_visual", params.dims.d_visual},
                    {"d_model", params.dims.d_model},
                    {"n_classes", params.dims.n_classes},
                    {"n_speakers", params.dims.n_speakers},
                    {"n_spec", params.dims.n_spec}};
  const std::string header_str = header.dump();
  detail::write_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  const auto tensors = trainable_tensors(params);
  detail::write_u64(os, tensors.size());
  for (const TensorRef& t : tensors) {
    detail::write_u64(os, t.name.size());
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    os.put(t.is_complex ? 1 : 0);
    os.put(static_cast<char>(t.shape.size()));
    for (const Eigen::Index dim : t.shape) {
      detail::write_u64(os, static_cast<std::uint64_t>(dim));
    }
    detail::write_u64(os, t.size);
    for (std::size_t k = 0; k < t.size; ++k) detail::write_f64(os, t.data[k]);
  }
  if (!os) throw ParseError("checkpoint: write failure on " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0) {
    throw ParseError("checkpoint: bad magic in " + path);
  }
  const std::uint64_t version = detail::read_u64(is);
  if (version != detail::kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " +
                     std::to_string(version));
  }
  const std::uint64_t header_len = detail::read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw ParseError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed header: ") + e.what());
  }
  const RunConfig config = config_from_json(header.at("config"));
  ModelDims dims;
  try {
    const auto& jd = header.at("dims");
    dims.d_text = jd.at("d_text").get<int>();
    dims.d_audio = jd.at("d_audio").get<int>();
    dims.d_visual = jd.at("d_visual").get<int>();
    dims.d_model = jd.at("d_model").get<int>();
    dims.n_classes = jd.at("n_classes").get<int>();
    dims.n_speakers = jd.at("n_speakers").get<int>();
    dims.n_spec = jd.at("n_spec").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed dims: ") + e.what());
  }

  Rng rng(0);
  ModelParams params = init_model(dims, config, rng);
  auto tensors = trainable_tensors(params);
  const std::uint64_t count = detail::read_u64(is);
  if (count != tensors.size()) {
    throw ParseError("checkpoint: tensor count mismatch (file has " +
                     std::to_string(count) + ", model expects " +
                     std::to_string(tensors.size()) + ")");
  }
  for (TensorRef& t : tensors) {
    const std::uint64_t name_len = detail::read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!is || name != t.name) {
      throw ParseError("checkpoint: tensor name mismatch, expected " + t.name);
    }
    const int is_complex = is.get();
    const int ndim = is.get();
    if (is_complex != (t.is_complex ? 1 : 0) ||
        ndim != static_cast<int>(t.shape.size())) {
      throw ParseError("checkpoint: tensor type mismatch at " + t.name);
    }
    for (const Eigen::Index dim : t.shape) {
      if (detail::read_u64(is) != static_cast<std::uint64_t>(dim)) {
        throw ParseError("checkpoint: tensor shape mismatch at " + t.name);
      }
    }
    const std::uint64_t size = detail::read_u64(is);
    if (size != t.size) {
      throw ParseError("checkpoint: tensor size mismatch at " + t.name);
    }
    for (std::size_t k = 0; k < t.size; ++k) t.data[k] = detail::read_f64(is);
  }
  return params;
}

}  // namespace specgnn
