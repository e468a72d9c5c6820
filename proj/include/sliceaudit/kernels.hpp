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

// Data-parallel inner loops of the mixture fit. Each kernel has a serial
// reference and an OpenMP version; both produce bitwise-identical output
// because every output element is reduced in the same order regardless of
// thread count.

#include <cstddef>

#include "sliceaudit/common.hpp"

namespace sliceaudit::kernels {

enum class Exec { serial, parallel };

// Per-component constants of a diagonal Gaussian mixture with a tempered
// categorical factor over (label, prediction).
struct ComponentTable {
  Matrix means;        // K x d
  Matrix inv_var;      // K x d
  Vector log_norm;     // log weight - 0.5 * sum log(2 pi var); -inf for dead components
  Matrix log_cat;      // K x 4, column 2*y + yhat
};

// Writes normalized responsibilities into `resp` (N x K), the per-row log
// normalizer into `row_lse` and, when given, log-responsibilities into
// `log_resp`. Throws Error if a row has no finite term.
void estep_serial(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                  const ComponentTable& table, Matrix& resp, Vector& row_lse,
                  Matrix* log_resp = nullptr);
void estep_parallel(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                    const ComponentTable& table, Matrix& resp, Vector& row_lse,
                    Matrix* log_resp = nullptr);
void estep(Exec exec, const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
           const ComponentTable& table, Matrix& resp, Vector& row_lse, Matrix* log_resp = nullptr);

// d2[i] = min(d2[i], |u_i - center|^2). Used by k-means++ seeding.
void update_min_sq_dist_serial(const Matrix& u, const Vector& center, Vector& d2);
void update_min_sq_dist_parallel(const Matrix& u, const Vector& center, Vector& d2);
void update_min_sq_dist(Exec exec, const Matrix& u, const Vector& center, Vector& d2);

// Responsibility-weighted sufficient statistics per component.
struct Moments {
  Vector mass;         // K: sum_i r_ij
  Matrix weighted_sum; // K x d: sum_i r_ij u_i
  Matrix label_mass;   // K x 2: sum over samples with y_i = c
  Matrix pred_mass;    // K x 2: sum over samples with yhat_i = c
};

Moments first_moments_serial(const Matrix& u, const Matrix& resp, const BinaryVector& y,
                             const BinaryVector& yhat);
Moments first_moments_parallel(const Matrix& u, const Matrix& resp, const BinaryVector& y,
                               const BinaryVector& yhat);
Moments first_moments(Exec exec, const Matrix& u, const Matrix& resp, const BinaryVector& y,
                      const BinaryVector& yhat);

// K x d: sum_i r_ij (u_i - means_j)^2.
Matrix centered_second_moments_serial(const Matrix& u, const Matrix& resp, const Matrix& means);
Matrix centered_second_moments_parallel(const Matrix& u, const Matrix& resp, const Matrix& means);
Matrix centered_second_moments(Exec exec, const Matrix& u, const Matrix& resp, const Matrix& means);

}  // namespace sliceaudit::kernels
