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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sliceaudit/config.hpp"
#include "sliceaudit/discovery.hpp"
#include "sliceaudit/explain.hpp"
#include "sliceaudit/fusion.hpp"

namespace sliceaudit {

/// Fraction of the k highest-membership samples (ties to the lower index)
/// that belong to the planted group. Throws if k is 0 or exceeds N.
double precision_at_k(const std::vector<double>& memberships, const BinaryVector& truth, std::size_t k);

struct BestSlice {
  std::size_t index = 0;
  double precision = 0.0;
};

// Slice column with the highest precision_at_k; ties go to the lower index.
BestSlice best_slice(const SliceAssignment& assignment, const BinaryVector& truth, std::size_t k);

// fuse -> PCA -> slice model -> assignment -> ranking, for one dataset.
struct Discovery {
  Matrix embedding;
  PcaModel pca;
  SliceModel model;
  SliceAssignment assignment;
  std::vector<std::size_t> ranking;
};

Discovery discover(const Dataset& dataset, const AuditConfig& config, std::uint64_t seed);

// Modalities the config selects for this dataset (all, sorted, when unset).
std::vector<std::string> resolve_modalities(const Dataset& dataset, const AuditConfig& config);

/// Token report for one error slice against its reference slice. r_attr is
/// filled when `tokens` is given and the dataset has the image modality.
TokenReport explain_slice(const Dataset& dataset, const TfidfModel& tfidf, const IdSet& error_ids, int slice_id,
                          const AuditConfig& config, const TokenEmbeddingTable* tokens);

struct IterationResult {
  std::uint64_t seed = 0;
  bool valid = false;
  double accuracy_gap = 0.0;
  double realized_bias = 0.0;
  double baseline_precision = 0.0;
  std::size_t best_slice = 0;
  double precision_at_k = 0.0;
  std::size_t em_steps = 0;
  // Largest single-step decrease of the EM objective (0 when monotone).
  double max_objective_drop = 0.0;
  TokenReport token_report;

  friend bool operator==(const IterationResult&, const IterationResult&) = default;
};

struct TokenStats {
  std::size_t frequency = 0;
  double mean_ds = 0.0;
  std::optional<double> mean_r_attr;

  friend bool operator==(const TokenStats&, const TokenStats&) = default;
};

struct AuditReport {
  std::vector<IterationResult> per_iteration;  // sorted by seed
  double mean_precision_at_k = 0.0;            // over valid iterations
  double mean_baseline_precision = 0.0;        // over valid iterations
  std::size_t valid_count = 0;
  std::size_t invalid_count = 0;
  std::map<std::string, std::size_t> token_frequency;
  std::map<std::string, TokenStats> token_stats;
  nlohmann::json config_echo;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// One bootstrap iteration on the synthetic world generated from `seed`.
IterationResult run_iteration(const AuditConfig& config, std::uint64_t seed);

// Averages and token tallies over the valid iterations.
AuditReport aggregate(std::vector<IterationResult> iterations, const AuditConfig& config);

/// Runs config.iterations iterations with seeds base_seed + t, in parallel,
/// and aggregates them. Throws Error if no iteration passes the validity
/// check.
AuditReport bootstrap_audit(const AuditConfig& config);

nlohmann::json to_json(const AuditReport& report);
AuditReport audit_report_from_json(const nlohmann::json& j);

// Writes report.json, summary.csv and tokens.csv into out_dir.
void emit_report(const AuditReport& report, const std::filesystem::path& out_dir);

}  // namespace sliceaudit
