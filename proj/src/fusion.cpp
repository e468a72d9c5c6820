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

#include "sliceaudit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sliceaudit {

Standardized standardize(const Matrix& matrix) {
  const auto n = matrix.rows();
  if (n < 2) throw Error("standardize: need at least 2 rows, got " + std::to_string(n));
  Standardized out;
  out.values.resize(n, matrix.cols());
  out.mean.resize(matrix.cols());
  out.stddev.resize(matrix.cols());
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    const auto col = matrix.col(c);
    const double mean = col.sum() / static_cast<double>(n);
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    double sd = std::sqrt(var);
    // Values that differ only by rounding of the mean count as constant.
    if (sd <= 1e-12 * (1.0 + std::abs(mean))) sd = 0.0;
    out.mean(c) = mean;
    out.stddev(c) = sd;
    if (sd == 0.0) {
      out.values.col(c).setZero();
    } else {
      out.values.col(c) = (col.array() - mean) / sd;
    }
  }
  return out;
}

FusedMatrix fuse(const Dataset& dataset, const std::vector<std::string>& modalities,
                 bool standardize_blocks) {
  if (modalities.empty()) throw Error("fuse: no modalities requested");
  std::set<std::string> requested;
  std::size_t total = 0;
  for (const auto& m : modalities) {
    auto it = dataset.modality_dims.find(m);
    if (it == dataset.modality_dims.end()) throw Error("fuse: unknown modality '" + m + "'");
    if (!requested.insert(m).second) throw Error("fuse: modality '" + m + "' listed twice");
    total += it->second;
  }

  const auto n = static_cast<Eigen::Index>(dataset.size());
  FusedMatrix out;
  out.rows.resize(n, static_cast<Eigen::Index>(total));
  out.sample_ids = dataset.ids();
  Eigen::Index offset = 0;
  for (const auto& m : modalities) {
    const auto dim = static_cast<Eigen::Index>(dataset.modality_dims.at(m));
    Matrix block(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& v = dataset.samples[static_cast<std::size_t>(i)].views.at(m);
      for (Eigen::Index c = 0; c < dim; ++c) block(i, c) = v[static_cast<std::size_t>(c)];
    }
    if (!block.allFinite()) throw Error("fuse: non-finite value in modality '" + m + "'");
    out.rows.middleCols(offset, dim) = standardize_blocks ? standardize(block).values : block;
    offset += dim;
  }
  return out;
}

PcaModel fit_pca(const Matrix& matrix, std::size_t k) {
  const auto n = static_cast<std::size_t>(matrix.rows());
  const auto d = static_cast<std::size_t>(matrix.cols());
  if (k < 1 || k > std::min(n, d)) {
    throw Error("fit_pca: k=" + std::to_string(k) + " outside [1, " + std::to_string(std::min(n, d)) + "]");
  }
  if (!matrix.allFinite()) throw Error("fit_pca: non-finite input");

  PcaModel model;
  model.mean = matrix.colwise().mean().transpose();
  const Matrix centered = matrix.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("fit_pca: eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const auto dd = static_cast<Eigen::Index>(d);
  const auto kk = static_cast<Eigen::Index>(k);
  model.components.resize(kk, dd);
  model.explained_variance.resize(kk);
  for (Eigen::Index r = 0; r < kk; ++r) {
    const Eigen::Index src = dd - 1 - r;
    Vector comp = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index c = 1; c < dd; ++c) {
      if (std::abs(comp(c)) > std::abs(comp(pivot))) pivot = c;
    }
    if (comp(pivot) < 0) comp = -comp;
    model.components.row(r) = comp.transpose();
    model.explained_variance(r) = std::max(0.0, solver.eigenvalues()(src));
  }
  return model;
}

Matrix transform_pca(const PcaModel& model, const Matrix& matrix) {
  if (static_cast<std::size_t>(matrix.cols()) != model.input_dim()) {
    throw Error("transform_pca: dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                " columns, got " + std::to_string(matrix.cols()));
  }
  return (matrix.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace sliceaudit
