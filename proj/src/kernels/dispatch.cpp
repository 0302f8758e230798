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

#include <atomic>

#include "presynth/error.hpp"
#include "presynth/kernels.hpp"

namespace presynth::kernels {
namespace {

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect()};
  return slot;
}

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(PRESYNTH_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detect() { return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active() { return active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  require(supported(isa), ErrorKind::invalid_argument,
          "kernel variant '" + std::string(name(isa)) + "' is not available on this CPU");
  active_slot().store(isa, std::memory_order_relaxed);
}

template <class T>
const Ops<T>& ops(Isa isa) {
#if defined(PRESYNTH_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_ops<T>();
#endif
  (void)isa;
  return detail::scalar_ops<T>();
}

template const Ops<float>& ops<float>(Isa);
template const Ops<double>& ops<double>(Isa);

}  // namespace presynth::kernels
