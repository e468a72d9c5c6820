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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sliceaudit {

// Row-major so that per-sample kernels walk contiguous memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Binary 0/1 vectors (labels, predictions, attribute indicators).
using BinaryVector = std::vector<int>;

// Ordered list of sample ids. Order is meaningful only for reproducibility.
using IdSet = std::vector<std::string>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws Error unless every entry is 0 or 1.
void require_binary(const BinaryVector& v, const char* name);

}  // namespace sliceaudit
