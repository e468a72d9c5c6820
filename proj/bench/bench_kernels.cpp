// Copyright 2026 The sliceaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels. Args: rows, dims, components.

#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "sliceaudit/kernels.hpp"
#include "sliceaudit/random.hpp"

using namespace sliceaudit;
using namespace sliceaudit::kernels;

namespace {

struct Problem {
  Matrix u;
  BinaryVector y, yhat;
  ComponentTable table;
  Matrix resp;
  Matrix means;
};

Problem make_problem(std::size_t n, std::size_t d, std::size_t k) {
  Rng rng(n * 31 + d * 7 + k);
  Problem p;
  const auto N = static_cast<Eigen::Index>(n), D = static_cast<Eigen::Index>(d), K = static_cast<Eigen::Index>(k);
  p.u.resize(N, D);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index c = 0; c < D; ++c) p.u(i, c) = rng.normal();
  }
  p.y.resize(n);
  p.yhat.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.y[i] = rng.bernoulli(0.5) ? 1 : 0;
    p.yhat[i] = rng.bernoulli(0.8) ? p.y[i] : 1 - p.y[i];
  }
  ComponentTable& t = p.table;
  t.means.resize(K, D);
  t.inv_var = Matrix::Ones(K, D);
  t.log_norm.resize(K);
  t.log_cat = Matrix::Constant(K, 4, std::log(0.25));
  for (Eigen::Index j = 0; j < K; ++j) {
    for (Eigen::Index c = 0; c < D; ++c) t.means(j, c) = rng.normal();
    t.log_norm(j) = -std::log(static_cast<double>(k)) - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  }
  Vector lse;
  estep_serial(p.u, p.y, p.yhat, t, p.resp, lse);
  p.means = t.means;
  return p;
}

void args(benchmark::internal::Benchmark* b) {
  b->Args({1000, 32, 5})->Args({10000, 64, 5})->Args({50000, 128, 8})->Unit(benchmark::kMicrosecond);
}

template <Exec E>
void BM_estep(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                                 static_cast<std::size_t>(state.range(2)));
  Matrix resp;
  Vector lse;
  for (auto _ : state) {
    estep(E, p.u, p.y, p.yhat, p.table, resp, lse);
    benchmark::DoNotOptimize(resp.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Exec E>
void BM_first_moments(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                                 static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) {
    Moments m = first_moments(E, p.u, p.resp, p.y, p.yhat);
    benchmark::DoNotOptimize(m.mass.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Exec E>
void BM_second_moments(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                                 static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) {
    Matrix m = centered_second_moments(E, p.u, p.resp, p.means);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Exec E>
void BM_min_sq_dist(benchmark::State& state) {
  const Problem p = make_problem(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                                 static_cast<std::size_t>(state.range(2)));
  const Vector center = p.u.row(0).transpose();
  Vector d2(p.u.rows());
  for (auto _ : state) {
    d2.setConstant(std::numeric_limits<double>::infinity());
    update_min_sq_dist(E, p.u, center, d2);
    benchmark::DoNotOptimize(d2.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_estep<Exec::serial>)->Apply(args);
BENCHMARK(BM_estep<Exec::parallel>)->Apply(args);
BENCHMARK(BM_first_moments<Exec::serial>)->Apply(args);
BENCHMARK(BM_first_moments<Exec::parallel>)->Apply(args);
BENCHMARK(BM_second_moments<Exec::serial>)->Apply(args);
BENCHMARK(BM_second_moments<Exec::parallel>)->Apply(args);
BENCHMARK(BM_min_sq_dist<Exec::serial>)->Apply(args);
BENCHMARK(BM_min_sq_dist<Exec::parallel>)->Apply(args);

BENCHMARK_MAIN();
