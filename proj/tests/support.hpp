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

// Fixtures shared by the unit tests and the acceptance runner.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "sliceaudit/common.hpp"
#include "sliceaudit/random.hpp"

namespace support {

using sliceaudit::BinaryVector;
using sliceaudit::Matrix;

inline std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)].assign(m.row(i).data(), m.row(i).data() + m.cols());
  }
  return out;
}

inline Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  sliceaudit::Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = rng.normal();
  return m;
}

// Random mixture data: `k` Gaussian clusters in `d` dims, random binary y
// and yhat.
struct LabeledData {
  Matrix u;
  BinaryVector y;
  BinaryVector yhat;
};

inline LabeledData random_clusters(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed) {
  sliceaudit::Rng rng(seed);
  Matrix centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < centers.rows(); ++j)
    for (Eigen::Index c = 0; c < centers.cols(); ++c) centers(j, c) = 4.0 * rng.normal();
  LabeledData out;
  out.u.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(rng.below(k));
    for (Eigen::Index c = 0; c < out.u.cols(); ++c) {
      out.u(static_cast<Eigen::Index>(i), c) = centers(j, c) + (0.5 + 0.5 * static_cast<double>(c % 3)) * rng.normal();
    }
    out.y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    out.yhat.push_back(rng.bernoulli(0.3) ? 1 - out.y.back() : out.y.back());
  }
  return out;
}

// Two well-separated blobs: A (rows [0, n_a)) all misclassified with
// y=1, yhat=0; B all correct with y=yhat=1.
inline LabeledData blob_fixture(std::size_t n_a, std::size_t n_b, std::uint64_t seed, double gap = 10.0) {
  sliceaudit::Rng rng(seed);
  LabeledData out;
  out.u.resize(static_cast<Eigen::Index>(n_a + n_b), 2);
  for (std::size_t i = 0; i < n_a + n_b; ++i) {
    const double shift = i < n_a ? 0.0 : gap;
    out.u(static_cast<Eigen::Index>(i), 0) = shift + rng.normal();
    out.u(static_cast<Eigen::Index>(i), 1) = rng.normal();
    out.y.push_back(1);
    out.yhat.push_back(i < n_a ? 0 : 1);
  }
  return out;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sliceaudit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace support
