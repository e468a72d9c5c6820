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

#include "sliceaudit/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "sliceaudit/random.hpp"

namespace sliceaudit {

namespace {

// Components whose total responsibility falls below this are frozen with
// weight 0; their mean would otherwise be a ratio of denormals.
constexpr double kDeadMass = 1e-100;

void check_inputs(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat) {
  const auto n = static_cast<std::size_t>(u.rows());
  if (y.size() != n || yhat.size() != n) {
    throw Error("slice model: u has " + std::to_string(n) + " rows but y/yhat have " +
                std::to_string(y.size()) + "/" + std::to_string(yhat.size()));
  }
  require_binary(y, "y");
  require_binary(yhat, "yhat");
  if (!u.allFinite()) throw Error("slice model: non-finite input");
}

double sum_rows(const Vector& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v(i);
  return s;
}

double prior_term(const SliceModel& m) {
  if (m.gamma == 0.0 || m.smoothing == 0.0) return 0.0;
  return m.gamma * m.smoothing *
         (m.label_dist.array().log().sum() + m.pred_dist.array().log().sum());
}

// Responsibility-weighted MLE with smoothed categorical rows and a floored
// variance. `previous` supplies parameters for components that lost all mass.
SliceModel m_step(const Matrix& u, const Matrix& resp, const BinaryVector& y, const BinaryVector& yhat,
                  double gamma, const FitOptions& opts, const SliceModel* previous) {
  const auto k = resp.cols();
  const auto d = u.cols();
  const double n = static_cast<double>(u.rows());
  const double alpha = opts.smoothing;
  const kernels::Moments mom = kernels::first_moments(opts.exec, u, resp, y, yhat);

  SliceModel m;
  m.gamma = gamma;
  m.smoothing = alpha;
  m.weights.resize(k);
  m.means.resize(k, d);
  m.variances.resize(k, d);
  m.label_dist.resize(k, 2);
  m.pred_dist.resize(k, 2);
  std::vector<char> dead(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mass = mom.mass(j);
    if (mass < kDeadMass) {
      if (previous == nullptr) throw Error("insufficient diversity: empty initial cluster");
      dead[static_cast<std::size_t>(j)] = 1;
      m.weights(j) = 0.0;
      m.means.row(j) = previous->means.row(j);
      continue;
    }
    m.weights(j) = mass / n;
    m.means.row(j) = mom.weighted_sum.row(j) / mass;
    for (int c = 0; c < 2; ++c) {
      m.label_dist(j, c) = (mom.label_mass(j, c) + alpha) / (mass + 2.0 * alpha);
      m.pred_dist(j, c) = (mom.pred_mass(j, c) + alpha) / (mass + 2.0 * alpha);
    }
  }
  const Matrix second = kernels::centered_second_moments(opts.exec, u, resp, m.means);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (dead[static_cast<std::size_t>(j)]) {
      m.variances.row(j) = previous->variances.row(j);
      m.label_dist.row(j) = previous->label_dist.row(j);
      m.pred_dist.row(j) = previous->pred_dist.row(j);
      continue;
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      m.variances(j, c) = std::max(second(j, c) / mom.mass(j), opts.variance_floor);
    }
  }
  return m;
}

void validate_options(const FitOptions& opts) {
  if (opts.max_iters < 0) throw Error("max_iters must be >= 0");
  if (!(opts.tol >= 0.0)) throw Error("tol must be >= 0");
  if (opts.n_init < 1) throw Error("n_init must be >= 1");
  if (!(opts.smoothing >= 0.0)) throw Error("smoothing must be >= 0");
  if (!(opts.variance_floor > 0.0)) throw Error("variance_floor must be > 0");
}

// Restarts without the N > K precondition (error-only mode allows N == K).
SliceModel fit_restarts(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat, std::size_t k,
                        double gamma, std::uint64_t seed, const FitOptions& opts) {
  SliceModel best;
  double best_objective = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int r = 0; r < opts.n_init; ++r) {
    SliceModel fit = run_em(initialize_slice_model(u, y, yhat, k, gamma, seed + static_cast<std::uint64_t>(r), opts),
                            u, y, yhat, opts);
    const double objective = fit.log_likelihood_trace.back();
    if (!have_best || objective > best_objective) {
      best = std::move(fit);
      best_objective = objective;
      have_best = true;
    }
  }
  return best;
}

}  // namespace

kernels::ComponentTable component_table(const SliceModel& model) {
  const auto k = model.means.rows();
  kernels::ComponentTable t;
  t.means = model.means;
  t.inv_var = model.variances.cwiseInverse();
  t.log_norm.resize(k);
  t.log_cat.resize(k, 4);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (model.weights(j) > 0.0) {
      const double log_det = (model.variances.row(j).array().log() + log_two_pi).sum();
      t.log_norm(j) = std::log(model.weights(j)) - 0.5 * log_det;
    } else {
      t.log_norm(j) = -std::numeric_limits<double>::infinity();
    }
    for (int yv = 0; yv < 2; ++yv) {
      for (int pv = 0; pv < 2; ++pv) {
        t.log_cat(j, 2 * yv + pv) =
            model.gamma == 0.0
                ? 0.0
                : model.gamma * (std::log(model.label_dist(j, yv)) + std::log(model.pred_dist(j, pv)));
      }
    }
  }
  return t;
}

double log_likelihood(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                      const BinaryVector& yhat, kernels::Exec exec) {
  check_inputs(u, y, yhat);
  Matrix resp;
  Vector lse;
  kernels::estep(exec, u, y, yhat, component_table(model), resp, lse);
  return sum_rows(lse);
}

double penalized_objective(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                           const BinaryVector& yhat, kernels::Exec exec) {
  return log_likelihood(model, u, y, yhat, exec) + prior_term(model);
}

SliceModel initialize_slice_model(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                                  std::size_t k, double gamma, std::uint64_t seed,
                                  const FitOptions& opts) {
  check_inputs(u, y, yhat);
  validate_options(opts);
  const auto n = static_cast<std::size_t>(u.rows());
  if (k < 1 || k > n) throw Error("slice model: need 1 <= K <= N");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("slice model: gamma must be finite and >= 0");

  Rng rng(seed);
  std::vector<std::size_t> centers{rng.below(n)};
  Vector d2 = Vector::Constant(u.rows(), std::numeric_limits<double>::infinity());
  kernels::update_min_sq_dist(opts.exec, u, u.row(static_cast<Eigen::Index>(centers[0])).transpose(), d2);
  while (centers.size() < k) {
    const double total = sum_rows(d2);
    if (!(total > 0.0)) throw Error("insufficient diversity: fewer distinct rows than slices");
    const double target = rng.uniform() * total;
    std::size_t pick = n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = d2(static_cast<Eigen::Index>(i));
      if (w <= 0.0) continue;
      pick = i;
      acc += w;
      if (acc > target) break;
    }
    centers.push_back(pick);
    kernels::update_min_sq_dist(opts.exec, u, u.row(static_cast<Eigen::Index>(pick)).transpose(), d2);
  }

  Matrix resp = Matrix::Zero(u.rows(), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    std::size_t nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double dist = (u.row(i) - u.row(static_cast<Eigen::Index>(centers[j]))).squaredNorm();
      if (dist < nearest_d) {
        nearest_d = dist;
        nearest = j;
      }
    }
    resp(i, static_cast<Eigen::Index>(nearest)) = 1.0;
  }
  SliceModel m = m_step(u, resp, y, yhat, gamma, opts, nullptr);
  m.log_likelihood_trace.clear();
  return m;
}

SliceModel run_em(SliceModel model, const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                  const FitOptions& opts) {
  check_inputs(u, y, yhat);
  validate_options(opts);
  if (static_cast<std::size_t>(u.cols()) != model.dim()) throw Error("run_em: dimension mismatch");

  Matrix resp;
  Vector lse;
  kernels::estep(opts.exec, u, y, yhat, component_table(model), resp, lse);
  double objective = sum_rows(lse) + prior_term(model);
  std::vector<double> trace{objective};
  for (int it = 0; it < opts.max_iters; ++it) {
    model = m_step(u, resp, y, yhat, model.gamma, opts, &model);
    kernels::estep(opts.exec, u, y, yhat, component_table(model), resp, lse);
    const double next = sum_rows(lse) + prior_term(model);
    trace.push_back(next);
    const bool converged = std::abs(next - objective) <= opts.tol * std::max(1.0, std::abs(objective));
    objective = next;
    if (converged) break;
  }
  model.log_likelihood_trace = std::move(trace);
  return model;
}

SliceModel fit_slice_model(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                           std::size_t k, double gamma, std::uint64_t seed, const FitOptions& opts) {
  const auto n = static_cast<std::size_t>(u.rows());
  if (k < 1 || n <= k) {
    throw Error("fit_slice_model: need N > K >= 1 (N=" + std::to_string(n) + ", K=" + std::to_string(k) + ")");
  }
  return fit_restarts(u, y, yhat, k, gamma, seed, opts);
}

SliceModel fit_error_only(const Matrix& u, const BinaryVector& y, const BinaryVector& yhat,
                          std::size_t k, std::uint64_t seed, const FitOptions& opts) {
  check_inputs(u, y, yhat);
  if (k < 1) throw Error("fit_error_only: K must be >= 1");

  struct ClassFit {
    int cls;
    std::size_t count;
    SliceModel model;
  };
  std::vector<ClassFit> fits;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (y[si] == cls && yhat[si] != y[si]) rows.push_back(i);
    }
    if (rows.size() < k) continue;
    Matrix sub(static_cast<Eigen::Index>(rows.size()), u.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = u.row(rows[r]);
    const BinaryVector sub_y(rows.size(), cls);
    const BinaryVector sub_yhat(rows.size(), 1 - cls);
    fits.push_back({cls, rows.size(), fit_restarts(sub, sub_y, sub_yhat, k, 0.0, seed, opts)});
  }
  if (fits.empty()) {
    throw Error("fit_error_only: fewer than K=" + std::to_string(k) +
                " misclassified samples in both classes");
  }

  std::size_t total = 0;
  std::size_t trace_len = 0;
  for (const auto& f : fits) {
    total += f.count;
    trace_len = std::max(trace_len, f.model.log_likelihood_trace.size());
  }
  const auto kk = static_cast<Eigen::Index>(k);
  const auto kt = static_cast<Eigen::Index>(k * fits.size());
  SliceModel merged;
  merged.gamma = 0.0;
  merged.smoothing = 0.0;
  merged.weights.resize(kt);
  merged.means.resize(kt, u.cols());
  merged.variances.resize(kt, u.cols());
  merged.label_dist = Matrix::Zero(kt, 2);
  merged.pred_dist = Matrix::Zero(kt, 2);
  // Per-class fits are independent, so the merged objective is their sum;
  // shorter traces are held at their final value.
  merged.log_likelihood_trace.assign(trace_len, 0.0);
  for (std::size_t f = 0; f < fits.size(); ++f) {
    const auto& fit = fits[f];
    const Eigen::Index off = static_cast<Eigen::Index>(f) * kk;
    const double share = static_cast<double>(fit.count) / static_cast<double>(total);
    merged.weights.segment(off, kk) = fit.model.weights * share;
    merged.means.middleRows(off, kk) = fit.model.means;
    merged.variances.middleRows(off, kk) = fit.model.variances;
    merged.label_dist.block(off, fit.cls, kk, 1).setOnes();
    merged.pred_dist.block(off, 1 - fit.cls, kk, 1).setOnes();
    const auto& tr = fit.model.log_likelihood_trace;
    for (std::size_t t = 0; t < trace_len; ++t) {
      merged.log_likelihood_trace[t] += tr[std::min(t, tr.size() - 1)];
    }
  }
  return merged;
}

SliceAssignment assign_slices(const SliceModel& model, const Matrix& u, const BinaryVector& y,
                              const BinaryVector& yhat, double beta, kernels::Exec exec) {
  check_inputs(u, y, yhat);
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("assign_slices: beta must lie in [0, 1)");
  if (static_cast<std::size_t>(u.cols()) != model.dim()) {
    throw Error("assign_slices: dimension mismatch: data has " + std::to_string(u.cols()) +
                " columns, model " + std::to_string(model.dim()));
  }
  SliceAssignment out;
  out.beta = beta;
  Vector lse;
  kernels::estep(exec, u, y, yhat, component_table(model), out.memberships, lse,
                 &out.log_memberships);
  out.slices.resize(model.num_slices());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.memberships.cols(); ++j) {
      if (out.memberships(i, j) > beta) out.slices[static_cast<std::size_t>(j)].push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

std::vector<double> slice_error_rates(const SliceAssignment& assignment, const BinaryVector& y,
                                      const BinaryVector& yhat) {
  std::vector<double> rates;
  rates.reserve(assignment.slices.size());
  for (const auto& members : assignment.slices) {
    if (members.empty()) {
      rates.push_back(0.0);
      continue;
    }
    std::size_t wrong = 0;
    for (std::size_t i : members) wrong += (y.at(i) != yhat.at(i)) ? 1 : 0;
    rates.push_back(static_cast<double>(wrong) / static_cast<double>(members.size()));
  }
  return rates;
}

std::vector<std::size_t> rank_slices(const SliceAssignment& assignment, const BinaryVector& y,
                                     const BinaryVector& yhat) {
  const std::vector<double> rates = slice_error_rates(assignment, y, yhat);
  std::vector<std::size_t> order(rates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = assignment.slices[a];
    const auto& sb = assignment.slices[b];
    if (sa.empty() != sb.empty()) return sb.empty();
    if (rates[a] != rates[b]) return rates[a] > rates[b];
    if (sa.size() != sb.size()) return sa.size() > sb.size();
    return a < b;
  });
  return order;
}

}  // namespace sliceaudit
