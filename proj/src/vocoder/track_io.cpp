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

#include <cmath>

#include "presynth/binary_io.hpp"
#include "presynth/vocoder.hpp"

namespace presynth {

// "PVT1", u32 T, u32 x4 column counts (60, 5, 1, 1), then T rows of f32:
// mcep, bap, lf0, vuv (0.0 / 1.0).
void save_track(const std::filesystem::path& path, const AcousticTrack& track) {
  track.validate();
  io::ByteWriter w;
  w.magic("PVT1");
  w.u32(static_cast<std::uint32_t>(track.num_frames()));
  for (std::uint32_t c : {std::uint32_t{kMcepOrder}, std::uint32_t{kBapBands}, 1u, 1u}) w.u32(c);
  for (std::size_t t = 0; t < track.num_frames(); ++t) {
    for (double v : track.mcep.row(t)) w.f32(static_cast<float>(v));
    for (double v : track.bap.row(t)) w.f32(static_cast<float>(v));
    w.f32(static_cast<float>(track.lf0[t]));
    w.f32(track.vuv[t] ? 1.0f : 0.0f);
  }
  io::write_file(path, w.bytes());
}

AcousticTrack load_track(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  r.expect_magic("PVT1");
  const std::uint32_t frames = r.u32();
  const std::uint32_t cols[4] = {r.u32(), r.u32(), r.u32(), r.u32()};
  require(cols[0] == kMcepOrder && cols[1] == kBapBands && cols[2] == 1 && cols[3] == 1,
          ErrorKind::corruption, path.string() + ": unexpected PVT1 column layout");
  r.need(static_cast<std::size_t>(frames) * (kMcepOrder + kBapBands + 2) * 4);

  AcousticTrack track;
  track.mcep.resize(frames, kMcepOrder);
  track.bap.resize(frames, kBapBands);
  track.lf0.resize(frames);
  track.vuv.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (double& v : track.mcep.row(t)) v = r.f32();
    for (double& v : track.bap.row(t)) v = r.f32();
    track.lf0[t] = r.f32();
    track.vuv[t] = r.f32() > 0.5f ? 1 : 0;
  }
  track.validate();
  return track;
}

}  // namespace presynth
