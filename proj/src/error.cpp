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

#include "presynth/error.hpp"

namespace presynth {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::wav_format: return "wav format error";
    case ErrorKind::sample_rate: return "sample rate error";
    case ErrorKind::channel_count: return "channel count error";
    case ErrorKind::sample_encoding: return "sample encoding error";
    case ErrorKind::degenerate_mixture: return "degenerate mixture";
    case ErrorKind::shape_mismatch: return "shape mismatch";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::config_mismatch: return "config mismatch";
    case ErrorKind::corruption: return "corrupt file";
    case ErrorKind::insufficient_data: return "insufficient data";
    case ErrorKind::undefined_metric: return "undefined metric";
  }
  return "error";
}

}  // namespace presynth
