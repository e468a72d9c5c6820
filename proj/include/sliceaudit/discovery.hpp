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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sliceaudit/common.hpp"
#include "sliceaudit/kernels.hpp"

namespace sliceaudit {

struct FitOptions {
  int max_iters = 200;
  // Relative objective change below which EM stops.
  double tol = 1e-5;
  int n_init = 3;
  // Pseudo-count added to each cell of label_dist and pred_dist.
  double smoothing = 1e-2;
  double variance_floor = 1e-6;
  kernels::Exec exec = kernels::Exec::parallel;
};

/// Label-aware diagonal Gaussian mixture. Component j scores a sample as
///
///   weight_j * Normal(u; mean_j, diag variance_j) * [p_j(y) * q_j(yhat)]^gamma
///
/// where p_j = label_dist row j and q_j = pred_dist row j.
struct SliceModel {
  Vector weights;      // K
  Matrix means;        // K x d
  Matrix variances;    // K x d
  Matrix label_dist;   // K x 2
  Matrix pred_dist;    // K x 2
  double gamma = 0.0;
  // Pseudo-count the categorical rows were estimated with; enters the
  // objective as a Dirichlet prior term.
  double smoothing = 0.0;
  // Objective after initialization and after every EM step.
  std::vector<double> log_likelihood_trace;

  std::size_t num_slices() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
};

struct SliceAssignment {
  Matrix memberships;                            // N x K posterior probabilities
  Matrix log_memberships;                        // N x K, resolves posteriors that round to 1
  std::vector<std::vector<std::size_t>> slices;  // row indices with membership > beta
  double beta = 0.5;
};

// Precomputed constants for the E-step kernel.
kernels::ComponentTable component_table(const SliceModel& model);

// Sum over samples of the log mixture density (the quantity EM maximizes,
// without the smoothing prior).
double log_likelihood(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                      const BinaryVector& yhat, kernels::Exec exec = kernels::Exec::serial);

// log_likelihood plus gamma * smoothing * sum_j sum_c [log p_j(c) + log q_j(c)].
// Monotone under the EM updates below; this is what the trace records.
double penalized_objective(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                           const BinaryVector& yhat, kernels::Exec exec = kernels::Exec::serial);

/// k-means++ seeding on u (seeded), hard nearest-center assignment, then one
/// M-step. Throws Error("insufficient diversity") when fewer than K
/// distinct rows exist and K > 1.
SliceModel initialize_slice_model(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                                  std::size_t k, double gamma, std::uint64_t seed,
                                  const FitOptions& opts);

// Runs EM from `init` until the relative objective change drops below
// opts.tol or opts.max_iters steps have been taken.
SliceModel run_em(SliceModel init, const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                  const FitOptions& opts);

/// Best of opts.n_init seeded restarts (seeds seed, seed+1, ...); ties go
/// to the lowest seed.
SliceModel fit_slice_model(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                           std::size_t k, double gamma, std::uint64_t seed, const FitOptions& opts);

/// Plain GMM per class on that class's misclassified samples only, merged
/// into one model. Components fitted for class c carry label_dist one-hot
/// on c and pred_dist one-hot on 1 - c; weights are scaled by each class's
/// share of the misclassified samples. gamma is 0, so memberships come from
/// the Gaussian part alone. Classes with fewer than K misclassified samples
/// are skipped; if both are, throws Error.
SliceModel fit_error_only(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                          std::size_t k, std::uint64_t seed, const FitOptions& opts);

SliceAssignment assign_slices(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                              const BinaryVector& yhat, double beta,
                              kernels::Exec exec = kernels::Exec::parallel);

// Error rate among the beta-assigned members of each slice (0 for empty slices).
std::vector<double> slice_error_rates(const SliceAssignment& assignment, const BinaryVector& y,
                                      const BinaryVector& yhat);

// Slices by descending error rate, then larger size, then lower index.
// Empty slices go last.
std::vector<std::size_t> rank_slices(const SliceAssignment& assignment, const BinaryVector& y,
                                     const BinaryVector& yhat);

}  // namespace sliceaudit
