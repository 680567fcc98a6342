#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "loadcast/core/binary_io.hpp"
#include "loadcast/core/errors.hpp"
#include "loadcast/models/model.hpp"

// Weight file layout (all integers little-endian):
//   "LCWT"                          magic
//   u32 version
//   u64 n, n bytes                  model spec as JSON
//   u32 block count
//   per block: u32 name length, name bytes, u32 rank, rank x u64 extents,
//              extents-product x f64 values
//   u64 FNV-1a hash of every preceding byte

namespace loadcast::models {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

namespace detail {

using binary::fnv1a;
using binary::put;

struct Reader : binary::Reader {
  Reader(const std::string& bytes, std::string path) : binary::Reader(bytes, std::move(path), "weight file") {}
};

struct Block {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct WeightFile {
  ModelSpec spec;
  std::vector<Block> blocks;
};

inline WeightFile read_weight_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(bytes, path);
  if (r.str(4) != "LCWT") throw FormatError(path + ": not a weight file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightFormatVersion) {
    throw FormatError(path + ": weight format version " + std::to_string(version) + ", expected " +
                      std::to_string(kWeightFormatVersion));
  }
  WeightFile f;
  const auto spec_len = r.get<std::uint64_t>();
  if (spec_len > bytes.size()) throw FormatError(path + ": weight file is truncated");
  const std::string spec_text = r.str(spec_len);
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Block b;
    b.name = r.str(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError(path + ": block '" + b.name + "' has implausible rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      b.shape.push_back(r.get<std::uint64_t>());
      n *= b.shape.back();
    }
    if (n > bytes.size()) throw FormatError(path + ": weight file is truncated");
    b.values.resize(n);
    r.doubles(b.values.data(), n);
    f.blocks.push_back(std::move(b));
  }
  const std::size_t body = r.pos();
  if (r.get<std::uint64_t>() != fnv1a(bytes, body)) throw FormatError(path + ": checksum mismatch");
  if (r.pos() != bytes.size()) throw FormatError(path + ": trailing bytes after checksum");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": embedded spec is not JSON: " + e.what());
  }
  f.spec = spec_from_json(j);
  return f;
}

}  // namespace detail

inline void save_weights(ForecastModel& model, const std::string& path) {
  std::string out = "LCWT";
  detail::put<std::uint32_t>(out, kWeightFormatVersion);
  const std::string spec = to_json(model.spec).dump();
  detail::put<std::uint64_t>(out, spec.size());
  out += spec;
  layers::ParamList list = model.params();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(list.trainable.size() + list.buffers.size()));
  auto block = [&](const std::string& name, const Tensor& t) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.raw()), t.size() * sizeof(double));
  };
  for (const auto& [name, v] : list.trainable) block(name, v.value());
  for (const auto& [name, t] : list.buffers) block(name, *t);
  detail::put<std::uint64_t>(out, detail::fnv1a(out, out.size()));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write weight file " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing weight file " + path);
}

/// Loads blocks into an existing model. Names and shapes must match the
/// model's own layout; nothing is modified unless every block matches.
inline void load_weights_into(ForecastModel& model, const std::string& path) {
  detail::WeightFile f = detail::read_weight_file(path);
  layers::ParamList list = model.params();
  std::vector<std::pair<std::string, Tensor*>> targets;
  for (auto& [name, v] : list.trainable) targets.emplace_back(name, &v.mutable_value());
  for (auto& [name, t] : list.buffers) targets.emplace_back(name, t);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& [name, t] = targets[i];
    if (i >= f.blocks.size()) throw ShapeError(path + ": missing block for layer '" + name + "'");
    const auto& b = f.blocks[i];
    if (b.name != name) throw ShapeError(path + ": expected layer '" + name + "', file has '" + b.name + "'");
    if (b.shape != t->shape()) {
      throw ShapeError(path + ": layer '" + name + "' has shape " + to_string(b.shape) + " in file, model expects " +
                       to_string(t->shape()));
    }
  }
  if (f.blocks.size() != targets.size()) {
    throw ShapeError(path + ": unexpected extra layer '" + f.blocks[targets.size()].name + "'");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::copy(f.blocks[i].values.begin(), f.blocks[i].values.end(), targets[i].second->raw());
  }
}

/// Rebuilds the model described by the embedded spec and fills its weights.
inline ForecastModel load_weights(const std::string& path) {
  detail::WeightFile f = detail::read_weight_file(path);
  ForecastModel model = ForecastModel::build(f.spec, 0);
  load_weights_into(model, path);
  return model;
}

}  // namespace loadcast::models
