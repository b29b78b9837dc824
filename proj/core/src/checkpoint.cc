// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inhernet/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "inhernet/conv.h"
#include "inhernet/errors.h"
#include "inhernet/inherit.h"

namespace inhernet {
namespace {

using nlohmann::ordered_json;

constexpr std::uint64_t kMaxManifestBytes = 1ULL << 30;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(p[i]) << (8 * i);
  }
  return v;
}

ordered_json geometry_json(const ConvGeometry& g) {
  return {{"channels", g.channels}, {"height", g.height}, {"width", g.width},
          {"stride", g.stride},     {"padding", g.padding}};
}

ConvGeometry geometry_from(const ordered_json& j) {
  ConvGeometry g;
  g.channels = j.at("channels").get<std::size_t>();
  g.height = j.at("height").get<std::size_t>();
  g.width = j.at("width").get<std::size_t>();
  g.stride = j.at("stride").get<std::size_t>();
  g.padding = j.at("padding").get<std::size_t>();
  return g;
}

ordered_json attributes(const Layer& layer) {
  if (const auto* l = dynamic_cast<const DenseLayer*>(&layer)) {
    return {{"has_bias", l->has_bias()}};
  }
  if (dynamic_cast<const ReluLayer*>(&layer)) return ordered_json::object();
  if (const auto* l = dynamic_cast<const Conv2DLayer*>(&layer)) {
    const auto& d = l->kernel().dims();
    return {{"kernel", {d[0], d[1], d[2], d[3]}},
            {"geometry", geometry_json(l->geometry())},
            {"has_bias", l->has_bias()}};
  }
  if (const auto* l = dynamic_cast<const InherNetLayer*>(&layer)) {
    return {{"rank", l->rank()},
            {"heads", l->num_heads()},
            {"combiner", to_string(l->combiner())},
            {"gate_input", to_string(l->gate_input())},
            {"gate_trainable", l->gate().trainable},
            {"has_bias", l->bias().has_value()},
            {"has_head_bias", l->head_biases().has_value()}};
  }
  if (const auto* l = dynamic_cast<const InverseLayer*>(&layer)) {
    return {{"rank", l->rank()},
            {"heads", l->num_heads()},
            {"combiner", to_string(l->combiner())},
            {"gate_trainable", l->gate().trainable},
            {"has_bias", l->bias().has_value()}};
  }
  if (const auto* l = dynamic_cast<const SymmetricLayer*>(&layer)) {
    return {{"rank", l->rank()},
            {"branches", l->num_branches()},
            {"gate_trainable", l->gate().trainable},
            {"has_bias", l->bias().has_value()}};
  }
  if (const auto* l = dynamic_cast<const InherConvLayer*>(&layer)) {
    const auto& d = l->spatial().kernel().dims();
    return {{"rank", l->rank()},
            {"heads", l->num_heads()},
            {"out_channels", l->out_channels()},
            {"kernel_rows", d[2]},
            {"kernel_cols", d[3]},
            {"geometry", geometry_json(l->spatial().geometry())},
            {"combiner", to_string(l->combiner())},
            {"gate_trainable", l->gate().trainable},
            {"has_bias", l->bias().has_value()}};
  }
  throw StateError("cannot serialize layer kind " +
                   std::string(to_string(layer.kind())));
}

Gating zero_gate(std::size_t dim, std::size_t heads, bool trainable) {
  return Gating{Matrix(dim, heads), std::vector<double>(heads, 0.0), trainable};
}

// A zero-valued layer with the topology described by the manifest entry.
std::unique_ptr<Layer> skeleton(const ordered_json& e) {
  const std::string kind = e.at("kind").get<std::string>();
  const std::size_t m = e.at("input_width").get<std::size_t>();
  const std::size_t n = e.at("output_width").get<std::size_t>();
  const ordered_json& a = e.at("attributes");
  auto flag = [&](const char* key) { return a.at(key).get<bool>(); };
  auto size = [&](const char* key) { return a.at(key).get<std::size_t>(); };
  auto zero_bias = [](bool on, std::size_t len) {
    return on ? std::optional<std::vector<double>>(std::vector<double>(len, 0.0))
              : std::nullopt;
  };

  if (kind == "dense") {
    return std::make_unique<DenseLayer>(Matrix(m, n),
                                        zero_bias(flag("has_bias"), n));
  }
  if (kind == "relu") return std::make_unique<ReluLayer>(m);
  if (kind == "conv2d") {
    const auto d = a.at("kernel").get<std::vector<std::size_t>>();
    if (d.size() != 4) throw FormatError("conv kernel needs four dims");
    return std::make_unique<Conv2DLayer>(
        Tensor4D({d[0], d[1], d[2], d[3]}), geometry_from(a.at("geometry")),
        zero_bias(flag("has_bias"), d[0]));
  }
  if (kind == "inhernet") {
    const std::size_t r = size("rank"), h = size("heads");
    const GateInput gi = parse_gate_input(a.at("gate_input").get<std::string>());
    auto layer = std::make_unique<InherNetLayer>(
        Matrix(m, r), std::vector<Matrix>(h, Matrix(r, n)),
        zero_gate(gi == GateInput::kCode ? r : m, h, flag("gate_trainable")),
        gi, parse_combiner(a.at("combiner").get<std::string>()));
    if (flag("has_bias")) layer->set_bias(std::vector<double>(n, 0.0));
    if (flag("has_head_bias")) {
      layer->set_head_biases(std::vector<std::vector<double>>(
          h, std::vector<double>(n, 0.0)));
    }
    return layer;
  }
  if (kind == "inverse") {
    const std::size_t r = size("rank"), h = size("heads");
    auto layer = std::make_unique<InverseLayer>(
        std::vector<Matrix>(h, Matrix(m, r)), Matrix(r, n),
        zero_gate(m, h, flag("gate_trainable")),
        parse_combiner(a.at("combiner").get<std::string>()));
    if (flag("has_bias")) layer->set_bias(std::vector<double>(n, 0.0));
    return layer;
  }
  if (kind == "symmetric") {
    const std::size_t r = size("rank"), b = size("branches");
    auto layer = std::make_unique<SymmetricLayer>(
        std::vector<Matrix>(b, Matrix(m, r)),
        std::vector<Matrix>(b, Matrix(r, n)),
        zero_gate(m, b, flag("gate_trainable")));
    if (flag("has_bias")) layer->set_bias(std::vector<double>(n, 0.0));
    return layer;
  }
  if (kind == "inherconv") {
    const std::size_t r = size("rank"), h = size("heads");
    const std::size_t out = size("out_channels");
    const ConvGeometry g = geometry_from(a.at("geometry"));
    Conv2DLayer spatial(
        Tensor4D({r, g.channels, size("kernel_rows"), size("kernel_cols")}),
        g);
    auto layer = std::make_unique<InherConvLayer>(
        std::move(spatial), std::vector<Tensor4D>(h, Tensor4D({out, r, 1, 1})),
        zero_gate(r, h, flag("gate_trainable")),
        parse_combiner(a.at("combiner").get<std::string>()));
    if (flag("has_bias")) layer->set_bias(std::vector<double>(out, 0.0));
    return layer;
  }
  throw FormatError("unknown layer kind '" + kind + "'");
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}

std::string layer_name(std::size_t i, const std::string& kind) {
  return "layer " + std::to_string(i) + " (" + kind + ")";
}

}  // namespace

void write_checkpoint(const Network& net, std::ostream& out,
                      const CheckpointInfo& info) {
  Network copy = net;
  ordered_json layers = ordered_json::array();
  std::string blob;
  for (std::size_t i = 0; i < copy.size(); ++i) {
    Layer& layer = copy.layer(i);
    ordered_json tensors = ordered_json::array();
    std::size_t count = 0;
    for (const TensorRef& t : layer.tensors()) {
      tensors.push_back(
          {{"name", t.name}, {"shape", t.shape}, {"count", t.value.size()}});
      count += t.value.size();
      for (double v : t.value) put_le(blob, std::bit_cast<std::uint64_t>(v));
    }
    layers.push_back({{"kind", to_string(layer.kind())},
                      {"input_width", layer.input_width()},
                      {"output_width", layer.output_width()},
                      {"attributes", attributes(layer)},
                      {"param_count", count},
                      {"tensors", std::move(tensors)}});
  }
  ordered_json manifest = {{"format", "inhernet-checkpoint"},
                           {"version", kCheckpointVersion},
                           {"seed", info.seed},
                           {"config", info.config},
                           {"layers", std::move(layers)},
                           {"blob_bytes", blob.size()}};
  const std::string text = manifest.dump();
  std::string header(kCheckpointMagic, sizeof kCheckpointMagic);
  put_le(header, kCheckpointVersion);
  put_le(header, static_cast<std::uint64_t>(text.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("failed to write checkpoint");
}

Network read_checkpoint(std::istream& in, CheckpointInfo* info) {
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  constexpr std::size_t kHeader = sizeof kCheckpointMagic + 4 + 8;
  if (bytes.size() < kHeader ||
      std::memcmp(p, kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError("not an inhernet checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(p + 8);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto manifest_len = get_le<std::uint64_t>(p + 12);
  if (manifest_len > kMaxManifestBytes ||
      manifest_len > bytes.size() - kHeader) {
    throw FormatError("manifest length " + std::to_string(manifest_len) +
                      " exceeds the file");
  }
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(bytes.substr(kHeader, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  const std::size_t blob_start = kHeader + manifest_len;
  const std::size_t blob_size = bytes.size() - blob_start;

  Network net;
  std::size_t offset = 0;
  try {
    const ordered_json& layers = manifest.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const ordered_json& e = layers[i];
      const std::string kind = e.at("kind").get<std::string>();
      const std::string name = layer_name(i, kind);
      std::unique_ptr<Layer> layer;
      try {
        layer = skeleton(e);
      } catch (const FormatError&) {
        throw;
      } catch (const Error& err) {
        throw FormatError(name + ": " + err.what());
      }
      const auto refs = layer->tensors();
      const ordered_json& declared = e.at("tensors");
      if (declared.size() != refs.size()) {
        throw CorruptionError(name + ": manifest lists " +
                              std::to_string(declared.size()) +
                              " tensors, topology has " +
                              std::to_string(refs.size()));
      }
      std::size_t declared_total = 0;
      for (std::size_t t = 0; t < refs.size(); ++t) {
        const auto shape = declared[t].at("shape").get<std::vector<std::size_t>>();
        const auto count = declared[t].at("count").get<std::size_t>();
        if (declared[t].at("name").get<std::string>() != refs[t].name ||
            shape != refs[t].shape || count != refs[t].value.size() ||
            shape_product(shape) != count) {
          throw CorruptionError(name + ": tensor '" + refs[t].name +
                                "' declares " + std::to_string(count) +
                                " values, topology needs " +
                                std::to_string(refs[t].value.size()));
        }
        declared_total += count;
      }
      const auto param_count = e.at("param_count").get<std::size_t>();
      if (param_count != declared_total) {
        throw CorruptionError(name + ": declared parameter count " +
                              std::to_string(param_count) + " but tensors hold " +
                              std::to_string(declared_total));
      }
      const std::size_t need = declared_total * 8;
      if (blob_size - offset < need) {
        throw CorruptionError(name + ": expected " + std::to_string(need) +
                              " bytes, blob has " +
                              std::to_string(blob_size - offset) +
                              " remaining (" + std::to_string(blob_size) +
                              " total)");
      }
      for (const TensorRef& t : refs) {
        for (double& v : t.value) {
          v = std::bit_cast<double>(get_le<std::uint64_t>(p + blob_start + offset));
          offset += 8;
        }
      }
      net.add(std::move(layer));
    }
    if (offset != blob_size) {
      throw CorruptionError("blob holds " + std::to_string(blob_size) +
                            " bytes, manifest declares " +
                            std::to_string(offset));
    }
    if (info) {
      info->seed = manifest.at("seed").get<std::uint64_t>();
      info->config =
          manifest.at("config").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent topology: ") + e.what());
  }
  return net;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move " + tmp.string() + " to " + path.string());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     const CheckpointInfo& info) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(net, out, info);
  write_file_atomic(path, out.str());
}

Network load_checkpoint(const std::filesystem::path& path,
                        CheckpointInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in, info);
}

}  // namespace inhernet
