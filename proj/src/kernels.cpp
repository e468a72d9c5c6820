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

#include "sliceaudit/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sliceaudit::kernels {

namespace {

// Shared row body so serial and parallel paths run the same arithmetic.
// Log-responsibilities are formed as (v_j - max) - log1p(sum of the other
// terms), which keeps resolution when a posterior rounds to 1.0.
// Returns false when every term of the row is -inf.
inline bool estep_row(const ComponentTable& t, const double* x, int cell, double* out, double* log_out,
                      double& lse) {
  const Eigen::Index k = t.means.rows();
  const Eigen::Index d = t.means.cols();
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index arg = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double* mu = t.means.row(j).data();
    const double* iv = t.inv_var.row(j).data();
    double acc = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double diff = x[c] - mu[c];
      acc += diff * diff * iv[c];
    }
    const double v = t.log_norm(j) - 0.5 * acc + t.log_cat(j, cell);
    out[j] = v;
    if (v > best) {
      best = v;
      arg = j;
    }
  }
  if (!std::isfinite(best)) return false;
  double rest = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j != arg) rest += std::exp(out[j] - best);
  }
  const double tail = std::log1p(rest);
  lse = best + tail;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double log_r = (out[j] - best) - tail;
    if (log_out != nullptr) log_out[j] = log_r;
    out[j] = std::exp(log_r);
  }
  return true;
}

void prepare(const Matrix& u, const ComponentTable& table, Matrix& resp, Vector& row_lse, Matrix* log_resp) {
  if (u.cols() != table.means.cols()) {
    throw Error("estep: dimension mismatch: data has " + std::to_string(u.cols()) +
                " columns, model " + std::to_string(table.means.cols()));
  }
  resp.resize(u.rows(), table.means.rows());
  row_lse.resize(u.rows());
  if (log_resp != nullptr) log_resp->resize(u.rows(), table.means.rows());
}

[[noreturn]] void degenerate_row(Eigen::Index i) {
  throw Error("estep: sample " + std::to_string(i) + " has zero likelihood under every component");
}

inline double sq_dist(const double* a, const double* b, Eigen::Index d) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    acc += diff * diff;
  }
  return acc;
}

void moments_component(const Matrix& u, const Matrix& resp, const BinaryVector& y,
                       const BinaryVector& yhat, Eigen::Index j, Moments& m) {
  double mass = 0.0;
  double lab[2] = {0.0, 0.0};
  double pred[2] = {0.0, 0.0};
  auto sum = m.weighted_sum.row(j);
  sum.setZero();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double r = resp(i, j);
    mass += r;
    lab[y[static_cast<std::size_t>(i)]] += r;
    pred[yhat[static_cast<std::size_t>(i)]] += r;
    sum += r * u.row(i);
  }
  m.mass(j) = mass;
  m.label_mass(j, 0) = lab[0];
  m.label_mass(j, 1) = lab[1];
  m.pred_mass(j, 0) = pred[0];
  m.pred_mass(j, 1) = pred[1];
}

Moments allocate_moments(const Matrix& u, const Matrix& resp) {
  Moments m;
  m.mass.resize(resp.cols());
  m.weighted_sum.resize(resp.cols(), u.cols());
  m.label_mass.resize(resp.cols(), 2);
  m.pred_mass.resize(resp.cols(), 2);
  return m;
}

void second_component(const Matrix& u, const Matrix& resp, const Matrix& means, Eigen::Index j,
                      Matrix& out) {
  auto acc = out.row(j);
  acc.setZero();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    acc += resp(i, j) * (u.row(i) - means.row(j)).array().square().matrix();
  }
}

}  // namespace

void estep_serial(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                  const ComponentTable& table, Matrix& resp, Vector& row_lse, Matrix* log_resp) {
  prepare(u, table, resp, row_lse, log_resp);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (!estep_row(table, u.row(i).data(), 2 * y[si] + yhat[si], resp.row(i).data(),
                   log_resp != nullptr ? log_resp->row(i).data() : nullptr, row_lse(i))) {
      degenerate_row(i);
    }
  }
}

void estep_parallel(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                    const ComponentTable& table, Matrix& resp, Vector& row_lse, Matrix* log_resp) {
  prepare(u, table, resp, row_lse, log_resp);
  const Eigen::Index n = u.rows();
  Eigen::Index bad = n;
#pragma omp parallel for schedule(static) reduction(min : bad)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (!estep_row(table, u.row(i).data(), 2 * y[si] + yhat[si], resp.row(i).data(),
                   log_resp != nullptr ? log_resp->row(i).data() : nullptr, row_lse(i))) {
      bad = std::min(bad, i);
    }
  }
  if (bad < n) degenerate_row(bad);
}

void estep(Exec exec, const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
           const ComponentTable& table, Matrix& resp, Vector& row_lse, Matrix* log_resp) {
  if (exec == Exec::parallel) {
    estep_parallel(u, y, yhat, table, resp, row_lse, log_resp);
  } else {
    estep_serial(u, y, yhat, table, resp, row_lse, log_resp);
  }
}

void update_min_sq_dist_serial(const Matrix& u, const Vector& center, Vector& d2) {
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    d2(i) = std::min(d2(i), sq_dist(u.row(i).data(), center.data(), u.cols()));
  }
}

void update_min_sq_dist_parallel(const Matrix& u, const Vector& center, Vector& d2) {
  const Eigen::Index n = u.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i) = std::min(d2(i), sq_dist(u.row(i).data(), center.data(), u.cols()));
  }
}

void update_min_sq_dist(Exec exec, const Matrix& u, const Vector& center, Vector& d2) {
  if (exec == Exec::parallel) {
    update_min_sq_dist_parallel(u, center, d2);
  } else {
    update_min_sq_dist_serial(u, center, d2);
  }
}

Moments first_moments_serial(const Matrix& u, const Matrix& resp, const BinaryVector& y,
                             const BinaryVector& yhat) {
  Moments m = allocate_moments(u, resp);
  for (Eigen::Index j = 0; j < resp.cols(); ++j) moments_component(u, resp, y, yhat, j, m);
  return m;
}

Moments first_moments_parallel(const Matrix& u, const Matrix& resp, const BinaryVector& y,
                               const BinaryVector& yhat) {
  Moments m = allocate_moments(u, resp);
  const Eigen::Index k = resp.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < k; ++j) moments_component(u, resp, y, yhat, j, m);
  return m;
}

Moments first_moments(Exec exec, const Matrix& u, const Matrix& resp, const BinaryVector& y,
                      const BinaryVector& yhat) {
  return exec == Exec::parallel ? first_moments_parallel(u, resp, y, yhat)
                                : first_moments_serial(u, resp, y, yhat);
}

Matrix centered_second_moments_serial(const Matrix& u, const Matrix& resp, const Matrix& means) {
  Matrix out(resp.cols(), u.cols());
  for (Eigen::Index j = 0; j < resp.cols(); ++j) second_component(u, resp, means, j, out);
  return out;
}

Matrix centered_second_moments_parallel(const Matrix& u, const Matrix& resp, const Matrix& means) {
  Matrix out(resp.cols(), u.cols());
  const Eigen::Index k = resp.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < k; ++j) second_component(u, resp, means, j, out);
  return out;
}

Matrix centered_second_moments(Exec exec, const Matrix& u, const Matrix& resp, const Matrix& means) {
  return exec == Exec::parallel ? centered_second_moments_parallel(u, resp, means)
                                : centered_second_moments_serial(u, resp, means);
}

}  // namespace sliceaudit::kernels
