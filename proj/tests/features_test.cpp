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
#include <filesystem>

#include "doctest.h"
#include "presynth/binary_io.hpp"
#include "presynth/error.hpp"
#include "presynth/features.hpp"
#include "presynth/random.hpp"
#include "test_util.hpp"

using namespace presynth;
using namespace presynth::testing;

namespace {

Matrix<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (double& v : m.storage()) v = scale * rng.normal();
  return m;
}

AcousticTrack random_track(Rng& rng, std::size_t frames) {
  AcousticTrack t;
  t.mcep = random_matrix(rng, frames, kMcepOrder);
  t.bap.resize(frames, kBapBands);
  for (double& v : t.bap.storage()) v = -rng.uniform(0.0, 40.0);
  t.lf0.resize(frames);
  t.vuv.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    t.lf0[i] = std::log(rng.uniform(80.0, 300.0));
    t.vuv[i] = rng.uniform() < 0.6 ? 1 : 0;
  }
  return t;
}

// Dense window matrix for one dimension: rows [static T | delta T | delta2 T],
// written straight from the delta definitions with clamped neighbours.
std::vector<double> dense_windows(std::size_t frames) {
  std::vector<double> w(3 * frames * frames, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return w[r * frames + c]; };
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t p = t == 0 ? 0 : t - 1;
    const std::size_t n = std::min(t + 1, frames - 1);
    at(t, t) += 1.0;
    at(frames + t, n) += 0.5;
    at(frames + t, p) -= 0.5;
    at(2 * frames + t, n) += 1.0;
    at(2 * frames + t, t) -= 2.0;
    at(2 * frames + t, p) += 1.0;
  }
  return w;
}

// Reference MLPG for a single dimension by dense normal equations.
std::vector<double> dense_mlpg(const std::vector<double>& mu, const double var[3], std::size_t frames) {
  const auto w = dense_windows(frames);
  std::vector<double> a(frames * frames, 0.0), b(frames, 0.0);
  for (std::size_t r = 0; r < 3 * frames; ++r) {
    const double prec = 1.0 / var[r / frames];
    for (std::size_t i = 0; i < frames; ++i) {
      b[i] += w[r * frames + i] * prec * mu[r];
      for (std::size_t j = 0; j < frames; ++j) a[i * frames + j] += w[r * frames + i] * prec * w[r * frames + j];
    }
  }
  return solve_dense(a, b);
}

double delta_distance(const Matrix<double>& statics, const Matrix<double>& means) {
  const Deltas d = compute_deltas(statics);
  const std::size_t dim = statics.cols();
  double e = 0.0;
  for (std::size_t t = 0; t < statics.rows(); ++t)
    for (std::size_t j = 0; j < dim; ++j) {
      e += std::pow(d.delta(t, j) - means(t, dim + j), 2);
      e += std::pow(d.delta2(t, j) - means(t, 2 * dim + j), 2);
    }
  return e;
}

}  // namespace

TEST_CASE("compute_deltas follows the window formulas") {
  Matrix<double> flat(6, 3, 2.5);
  auto d = compute_deltas(flat);
  for (double v : d.delta.storage()) CHECK(v == 0.0);
  for (double v : d.delta2.storage()) CHECK(v == 0.0);

  Matrix<double> ramp(8, 1);
  for (std::size_t t = 0; t < 8; ++t) ramp(t, 0) = static_cast<double>(t);
  d = compute_deltas(ramp);
  for (std::size_t t = 1; t + 1 < 8; ++t) {
    CHECK(d.delta(t, 0) == doctest::Approx(1.0));
    CHECK(d.delta2(t, 0) == doctest::Approx(0.0));
  }
  // Replicated edges.
  CHECK(d.delta(0, 0) == doctest::Approx(0.5));
  CHECK(d.delta2(0, 0) == doctest::Approx(1.0));
  CHECK(d.delta(7, 0) == doctest::Approx(0.5));

  Matrix<double> bump(3, 1, std::vector<double>{0.0, 1.0, 0.0});
  CHECK(compute_deltas(bump).delta2(1, 0) == doctest::Approx(-2.0));

  Matrix<double> single(1, 4, 3.0);
  d = compute_deltas(single);
  for (double v : d.delta.storage()) CHECK(v == 0.0);
  for (double v : d.delta2.storage()) CHECK(v == 0.0);
}

TEST_CASE("compute_deltas is linear") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_matrix(rng, 30, 4), y = random_matrix(rng, 30, 4);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    Matrix<double> mix(30, 4);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = a * x.data()[i] + b * y.data()[i];
    const auto dx = compute_deltas(x), dy = compute_deltas(y), dm = compute_deltas(mix);
    for (std::size_t i = 0; i < mix.size(); ++i) {
      CHECK(std::abs(dm.delta.data()[i] - (a * dx.delta.data()[i] + b * dy.delta.data()[i])) < 1e-12);
      CHECK(std::abs(dm.delta2.data()[i] - (a * dx.delta2.data()[i] + b * dy.delta2.data()[i])) < 1e-12);
    }
  }
}

TEST_CASE("target layout") {
  static_assert(kLf0Block == 180 && kBapBlock == 183 && kVuvColumn == 198 && kTargetDim == 199);
  Rng rng(9);
  const auto track = random_track(rng, 25);
  const auto tgt = assemble_targets(track);
  REQUIRE(tgt.rows() == 25);
  REQUIRE(tgt.cols() == 199);
  for (std::size_t t = 0; t < 25; ++t) {
    CHECK(tgt(t, 0) == track.mcep(t, 0));
    CHECK(tgt(t, 59) == track.mcep(t, 59));
    CHECK(tgt(t, 180) == track.lf0[t]);
    CHECK(tgt(t, 183) == track.bap(t, 0));
    CHECK(tgt(t, 198) == (track.vuv[t] ? 1.0 : 0.0));
  }
  const auto d = compute_deltas(track.mcep);
  CHECK(tgt(10, 60 + 7) == d.delta(10, 7));
  CHECK(tgt(10, 120 + 7) == d.delta2(10, 7));

  AcousticTrack flat;
  flat.mcep.resize(12, kMcepOrder, -3.0);
  flat.bap.resize(12, kBapBands, -10.0);
  flat.lf0.assign(12, std::log(120.0));
  flat.vuv.assign(12, 1);
  const auto ft = assemble_targets(flat);
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t j = 60; j < 180; ++j) CHECK(ft(t, j) == 0.0);
    CHECK(ft(t, 181) == 0.0);
    CHECK(ft(t, 182) == 0.0);
    for (std::size_t j = 188; j < 198; ++j) CHECK(ft(t, j) == 0.0);
  }

  AcousticTrack bad = track;
  bad.mcep(3, 3) = std::nan("");
  CHECK_THROWS_AS(assemble_targets(bad), Error);
}

TEST_CASE("statics round trip is exact") {
  Rng rng(10);
  const auto track = random_track(rng, 40);
  const auto back = disassemble_targets(assemble_targets(track),
                                        Normalizer::identity(kTargetDim, NormalizerKind::target),
                                        GenerationMode::statics);
  CHECK(back.mcep == track.mcep);
  CHECK(back.bap == track.bap);
  CHECK(back.lf0 == track.lf0);
  CHECK(back.vuv == track.vuv);
}

TEST_CASE("disassemble thresholds and clamps") {
  Matrix<double> pred(3, kTargetDim, 0.0);
  pred(0, kVuvColumn) = 0.49;
  pred(1, kVuvColumn) = 0.51;
  pred(0, kLf0Block) = std::log(1000.0);
  pred(1, kLf0Block) = std::log(10.0);
  pred(2, kLf0Block) = std::log(200.0);
  const auto id = Normalizer::identity(kTargetDim, NormalizerKind::target);
  const auto track = disassemble_targets(pred, id, GenerationMode::statics);
  CHECK(track.vuv[0] == 0);
  CHECK(track.vuv[1] == 1);
  CHECK(track.lf0[0] == doctest::Approx(std::log(550.0)));
  CHECK(track.lf0[1] == doctest::Approx(std::log(50.0)));
  CHECK(track.lf0[2] == doctest::Approx(std::log(200.0)));

  CHECK_THROWS_AS(disassemble_targets(Matrix<double>(3, 198), id, GenerationMode::statics), Error);
}

TEST_CASE("disassemble in mlpg mode keeps consistent trajectories") {
  Rng rng(13);
  auto track = random_track(rng, 30);
  // Smooth statics so that clamps and the bap ceiling stay inactive.
  for (std::size_t t = 0; t < 30; ++t) {
    track.lf0[t] = std::log(150.0) + 0.1 * std::sin(0.3 * static_cast<double>(t));
    for (std::size_t b = 0; b < kBapBands; ++b) track.bap(t, b) = -20.0 + 5.0 * std::cos(0.2 * static_cast<double>(t + b));
  }
  const auto tgt = assemble_targets(track);
  const auto norm = Normalizer::fit(tgt, NormalizerKind::target, {kVuvColumn});
  const auto back = disassemble_targets(norm.applied(tgt), norm, GenerationMode::mlpg);
  for (std::size_t i = 0; i < track.mcep.size(); ++i)
    CHECK(std::abs(back.mcep.data()[i] - track.mcep.data()[i]) < 1e-8);
  for (std::size_t i = 0; i < track.bap.size(); ++i)
    CHECK(std::abs(back.bap.data()[i] - track.bap.data()[i]) < 1e-8);
  for (std::size_t t = 0; t < 30; ++t) CHECK(std::abs(back.lf0[t] - track.lf0[t]) < 1e-8);
  CHECK(back.vuv == track.vuv);
}

TEST_CASE("stack_context") {
  Matrix<double> one(1, 3, std::vector<double>{1.0, 2.0, 3.0});
  const auto s1 = stack_context(one);
  REQUIRE(s1.cols() == 27);
  for (std::size_t w = 0; w < 9; ++w)
    for (std::size_t j = 0; j < 3; ++j) CHECK(s1(0, w * 3 + j) == one(0, j));

  Rng rng(2);
  const auto x = random_matrix(rng, 20, 80);
  const auto s = stack_context(x, 4);
  REQUIRE(s.rows() == 20);
  REQUIRE(s.cols() == 720);
  for (std::size_t t = 4; t < 16; ++t)
    for (std::size_t w = 0; w < 9; ++w)
      for (std::size_t j = 0; j < 80; ++j) CHECK(s(t, w * 80 + j) == x(t + w - 4, j));
  // Edge replication.
  CHECK(s(0, 0) == x(0, 0));
  CHECK(s(1, 0) == x(0, 0));
  CHECK(s(1, 2 * 80) == x(0, 0));
  CHECK(s(1, 3 * 80) == x(0, 0));
  CHECK(s(1, 4 * 80) == x(1, 0));
  CHECK(s(19, 8 * 80 + 5) == x(19, 5));
  CHECK(s(17, 8 * 80 + 5) == x(19, 5));
}

TEST_CASE("normalizer statistics and inversion") {
  Rng rng(21);
  auto a = random_matrix(rng, 50, 6, 3.0), b = random_matrix(rng, 30, 6, 3.0);
  for (std::size_t t = 0; t < 50; ++t) {
    a(t, 2) = 7.0;
    a(t, 4) = t % 2;
  }
  for (std::size_t t = 0; t < 30; ++t) {
    b(t, 2) = 7.0;
    b(t, 4) = 1.0;
  }
  const Matrix<double>* parts[] = {&a, &b};
  const auto norm = Normalizer::fit(parts, NormalizerKind::target, {4});
  CHECK(norm.stdev()[2] == Normalizer::kStdFloor);
  CHECK(norm.is_excluded(4));

  const auto na = norm.applied(a), nb = norm.applied(b);
  for (std::size_t j = 0; j < 6; ++j) {
    if (j == 4) continue;
    double mean = 0.0, sq = 0.0;
    for (const auto* m : {&na, &nb})
      for (std::size_t t = 0; t < m->rows(); ++t) mean += (*m)(t, j);
    mean /= 80.0;
    for (const auto* m : {&na, &nb})
      for (std::size_t t = 0; t < m->rows(); ++t) sq += std::pow((*m)(t, j) - mean, 2);
    CHECK(std::abs(mean) < 1e-9);
    if (j == 2) {
      for (std::size_t t = 0; t < 50; ++t) CHECK(na(t, 2) == 0.0);
    } else {
      CHECK(std::abs(std::sqrt(sq / 80.0) - 1.0) < 1e-6);
    }
  }
  for (std::size_t t = 0; t < 50; ++t) CHECK(na(t, 4) == a(t, 4));

  const auto back = norm.inverted(na);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(back.data()[i] - a.data()[i]) < 1e-9);

  CHECK_THROWS_AS(Normalizer::fit(Matrix<double>(1, 6), NormalizerKind::input), Error);
  CHECK_THROWS_AS(Normalizer::fit(std::span<const Matrix<double>* const>{}, NormalizerKind::input), Error);
  Matrix<double> wrong(4, 5);
  CHECK_THROWS_AS(norm.apply(wrong), Error);
}

TEST_CASE("normalizer file round trip") {
  Rng rng(4);
  const auto norm = Normalizer::fit(random_matrix(rng, 40, 10, 2.0), NormalizerKind::target, {9, 3});
  const auto dir = std::filesystem::temp_directory_path() / "presynth_features_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "target.pvn";
  norm.save(path);
  const auto back = Normalizer::load(path, NormalizerKind::target);
  REQUIRE(back.dim() == 10);
  CHECK(back.excluded() == std::vector<std::uint32_t>{3, 9});
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(back.mean()[j] == doctest::Approx(norm.mean()[j]).epsilon(1e-6));
    CHECK(back.stdev()[j] == doctest::Approx(norm.stdev()[j]).epsilon(1e-6));
  }
  auto bytes = io::read_file(path);
  bytes.resize(bytes.size() - 3);
  io::write_file(path, bytes);
  CHECK_THROWS_AS(Normalizer::load(path, NormalizerKind::target), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mlpg matches dense normal equations") {
  Rng rng(31);
  for (std::size_t frames : {1u, 2u, 3u, 7u, 25u}) {
    const auto means = random_matrix(rng, frames, 6);
    const double var[6] = {0.5, 2.0, 1.5, 0.2, 3.0, 0.7};
    const auto got = mlpg_smooth(means, var);
    REQUIRE(got.rows() == frames);
    REQUIRE(got.cols() == 2);
    for (std::size_t d = 0; d < 2; ++d) {
      std::vector<double> mu(3 * frames);
      for (std::size_t w = 0; w < 3; ++w)
        for (std::size_t t = 0; t < frames; ++t) mu[w * frames + t] = means(t, w * 2 + d);
      const double v[3] = {var[d], var[2 + d], var[4 + d]};
      const auto ref = dense_mlpg(mu, v, frames);
      for (std::size_t t = 0; t < frames; ++t) CHECK(std::abs(got(t, d) - ref[t]) < 1e-9);
    }
  }
}

TEST_CASE("mlpg fixed point and limits") {
  Rng rng(32);
  const auto c = random_matrix(rng, 40, 3);
  const auto d = compute_deltas(c);
  Matrix<double> means(40, 9);
  for (std::size_t t = 0; t < 40; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      means(t, j) = c(t, j);
      means(t, 3 + j) = d.delta(t, j);
      means(t, 6 + j) = d.delta2(t, j);
    }
  std::vector<double> var(9);
  for (double& v : var) v = rng.uniform(0.1, 2.0);
  const auto got = mlpg_smooth(means, var);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(got.data()[i] - c.data()[i]) < 1e-8);

  const auto zero = mlpg_smooth(Matrix<double>(10, 9), var);
  for (double v : zero.storage()) CHECK(v == 0.0);

  // Tiny static variance pins the output to the static means.
  auto noisy = means;
  for (std::size_t t = 0; t < 40; ++t)
    for (std::size_t j = 3; j < 9; ++j) noisy(t, j) += rng.normal();
  std::vector<double> pinned = {1e-8, 1e-8, 1e-8, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  const auto stat = mlpg_smooth(noisy, pinned);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(stat.data()[i] - c.data()[i]) < 1e-3);

  CHECK_THROWS_AS(mlpg_smooth(Matrix<double>(5, 8), std::vector<double>(8, 1.0)), Error);
  CHECK_THROWS_AS(mlpg_smooth(Matrix<double>(5, 9), std::vector<double>(9, 0.0)), Error);
}

TEST_CASE("mlpg deltas track the predicted deltas more closely than raw statics") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t frames = 20 + rng.below(30);
    const auto means = random_matrix(rng, frames, 12);
    const std::vector<double> var(12, 1.0);
    const auto smooth = mlpg_smooth(means, var);
    Matrix<double> raw(frames, 4);
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t j = 0; j < 4; ++j) raw(t, j) = means(t, j);
    CHECK(delta_distance(smooth, means) < delta_distance(raw, means));
  }
}
