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
#include <string>
#include <vector>

#include "sliceaudit/common.hpp"
#include "sliceaudit/ingest.hpp"

namespace sliceaudit {

struct Standardized {
  Matrix values;
  Vector mean;
  // Population standard deviation; 0 marks a constant column.
  Vector stddev;
};

// Column-wise z-scores with the population (divide by N) convention.
// Constant columns map to zeros. Requires at least two rows.
Standardized standardize(const Matrix& matrix);

// Unified embedding: one row per sample.
struct FusedMatrix {
  Matrix rows;
  IdSet sample_ids;
};

// Concatenates the requested modality blocks in the given order, each block
// standardized on its own first when `standardize_blocks` is set.
FusedMatrix fuse(const Dataset& dataset, const std::vector<std::string>& modalities,
                 bool standardize_blocks = true);

struct PcaModel {
  Vector mean;
  // k x D, orthonormal rows ordered by decreasing explained variance.
  Matrix components;
  Vector explained_variance;

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }
};

/// Top-k eigenvectors of the population covariance of `matrix`. The sign of
/// each component is fixed so its largest-magnitude entry is positive
/// (first such entry on ties). Requires 1 <= k <= min(N, D) and finite
/// input.
PcaModel fit_pca(const Matrix& matrix, std::size_t k);

// (row - mean) projected onto the components; N x k.
Matrix transform_pca(const PcaModel& model, const Matrix& matrix);

}  // namespace sliceaudit
