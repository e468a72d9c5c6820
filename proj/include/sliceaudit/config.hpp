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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sliceaudit/biaslab.hpp"
#include "sliceaudit/discovery.hpp"
#include "sliceaudit/ingest.hpp"

namespace sliceaudit {

enum class DiscoveryMode { domino, error_only };

DiscoveryMode parse_mode(const std::string& name);
std::string to_string(DiscoveryMode mode);

// Every tunable of the audit pipeline. JSON keys match the field names;
// unknown keys are rejected.
struct AuditConfig {
  // fusion
  std::vector<std::string> modalities;  // empty: all dataset modalities, sorted
  std::size_t pca_components = 128;
  bool standardize = true;

  // discovery
  std::size_t k_slices = 5;
  double gamma = 10.0;
  double beta = 0.5;
  int max_iters = 200;
  double tol = 1e-5;
  int n_init = 3;
  DiscoveryMode mode = DiscoveryMode::domino;

  // explanation
  std::size_t top_n = 5;
  DocSource doc_source = DocSource::both;
  std::vector<std::string> stopwords;  // added to the built-in list
  std::string image_modality = "img";
  std::optional<std::string> token_embeddings;

  // evaluation / bootstrap
  std::size_t precision_k = 10;
  std::size_t iterations = 100;
  std::uint64_t base_seed = 0;
  int threads = 0;  // 0: OpenMP default
  BiasSpec bias;
  SynthWorldSpec world;

  FitOptions fit_options() const;
  std::set<std::string> stopword_set() const;
  void validate() const;
};

nlohmann::json to_json(const AuditConfig& config);
AuditConfig config_from_json(const nlohmann::json& j);
// Relative token_embeddings paths resolve against the config's directory.
AuditConfig load_config(const std::filesystem::path& path);

// Bootstrap defaults for one failure mode of the synthetic lab.
AuditConfig fixture_config(BiasKind kind);

}  // namespace sliceaudit
