// Copyright 2026 The presynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/nnet.hpp"

namespace presynth {
namespace {

constexpr std::uint32_t kVersion = 1;

template <class Real>
std::vector<char> serialize(const Model<Real>& model) {
  const ModelConfig& c = model.config();
  io::ByteWriter w;
  w.magic("PVC1");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(c.kind));
  w.u32(static_cast<std::uint32_t>(c.output));
  w.u32(static_cast<std::uint32_t>(c.hidden_layers));
  w.u32(static_cast<std::uint32_t>(c.hidden_width));
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.output_dim));
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    w.str(p.name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    for (Real v : p.value.storage()) w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

}  // namespace

std::vector<char> checkpoint_bytes(const Model<float>& model) { return serialize(model); }

template <class Real>
void save_checkpoint(const Model<Real>& model, const std::filesystem::path& path) {
  io::write_file(path, serialize(model));
}

template <class Real>
Model<Real> load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  r.expect_magic("PVC1");
  const std::uint32_t version = r.u32();
  require(version == kVersion, ErrorKind::corruption,
          path.string() + ": unsupported checkpoint version " + std::to_string(version));
  ModelConfig c;
  const std::uint32_t kind = r.u32();
  const std::uint32_t output = r.u32();
  require(kind <= 1 && output <= 1, ErrorKind::corruption, path.string() + ": bad model config");
  c.kind = static_cast<ModelKind>(kind);
  c.output = static_cast<OutputActivation>(output);
  c.hidden_layers = r.u32();
  c.hidden_width = r.u32();
  c.input_dim = r.u32();
  c.output_dim = r.u32();
  c.seed = r.u64();
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::corruption, path.string() + ": " + e.what());
  }

  // The architecture fixes every name and shape; the file has to agree.
  Model<Real> model(c);
  const std::uint32_t count = r.u32();
  require(count == model.parameters().size(), ErrorKind::corruption,
          path.string() + ": tensor count does not match the model config");
  for (auto& p : model.parameters()) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    require(name == p.name && rank == 2, ErrorKind::corruption,
            path.string() + ": unexpected tensor '" + name + "'");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    require(rows == p.value.rows() && cols == p.value.cols(), ErrorKind::corruption,
            path.string() + ": tensor '" + name + "' has the wrong shape");
    r.need(std::size_t{4} * rows * cols);
    for (Real& v : p.value.storage()) v = static_cast<Real>(r.f32());
  }
  require(r.remaining() == 0, ErrorKind::corruption, path.string() + ": trailing bytes");
  return model;
}

template <class Real>
Model<Real> load_checkpoint(const std::filesystem::path& path, ModelKind expected) {
  Model<Real> m = load_checkpoint<Real>(path);
  require(m.config().kind == expected, ErrorKind::config_mismatch,
          path.string() + " holds a " + to_string(m.config().kind) + " model, expected " +
              to_string(expected));
  return m;
}

template void save_checkpoint(const Model<float>&, const std::filesystem::path&);
template void save_checkpoint(const Model<double>&, const std::filesystem::path&);
template Model<float> load_checkpoint(const std::filesystem::path&);
template Model<double> load_checkpoint(const std::filesystem::path&);
template Model<float> load_checkpoint(const std::filesystem::path&, ModelKind);
template Model<double> load_checkpoint(const std::filesystem::path&, ModelKind);

}  // namespace presynth
