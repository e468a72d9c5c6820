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
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sliceaudit/common.hpp"
#include "sliceaudit/ingest.hpp"

namespace sliceaudit {

// TF-IDF over a fixed corpus. tf(t, d) = count / |d|,
// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
struct TfidfModel {
  std::vector<std::string> vocabulary;  // sorted
  std::vector<double> idf;
  // Sparse rows: (vocabulary index, weight), sorted by index.
  std::vector<std::vector<std::pair<std::size_t, double>>> doc_vectors;
  std::unordered_map<std::string, std::size_t> doc_index;  // sample id -> row

  std::size_t num_docs() const { return doc_vectors.size(); }
  // Dense mean tf-idf vector over the given documents.
  std::vector<double> mean_vector(const IdSet& ids) const;
};

TfidfModel fit_tfidf(const std::vector<TokenDoc>& docs);

struct TokenEntry {
  std::string token;
  double ds = 0.0;
  std::optional<double> r_attr;

  friend bool operator==(const TokenEntry&, const TokenEntry&) = default;
};

struct TokenReport {
  std::vector<TokenEntry> entries;  // by ds descending, ties alphabetical
  int error_slice_id = -1;
  std::size_t reference_size = 0;

  friend bool operator==(const TokenReport&, const TokenReport&) = default;
};

nlohmann::json to_json(const TokenReport& report);
TokenReport token_report_from_json(const nlohmann::json& j);

/// Correctly predicted samples whose label equals the error slice's
/// majority label (ties go to 1), excluding the error slice itself.
/// Throws Error("no reference samples") when that set is empty.
IdSet build_reference_slice(const Dataset& dataset, const IdSet& error_slice);

/// DS(t) = mean tf-idf over `err_ids` - mean tf-idf over `ref_ids` for every
/// vocabulary token; returns the top_n largest.
TokenReport distinctiveness(const TfidfModel& model, const IdSet& err_ids, const IdSet& ref_ids,
                            std::size_t top_n);

using VectorTable = std::unordered_map<std::string, std::vector<double>>;

/// r_attr = mean cosine(token, image) over `err_ids` minus the same over
/// `ref_ids`. Throws on a missing image vector, zero-norm vector, or
/// dimension mismatch.
double validate_attribute(const std::string& token, const std::vector<double>& token_vec,
                          const VectorTable& img_vecs, const IdSet& err_ids, const IdSet& ref_ids);

// Text-side embeddings for tokens: CSV with header token,v0,...,v{d-1}.
struct TokenEmbeddingTable {
  std::size_t dim = 0;
  VectorTable vectors;
};

TokenEmbeddingTable load_token_embeddings(const std::filesystem::path& path);
void write_token_embeddings(const TokenEmbeddingTable& table, const std::filesystem::path& path);

// Fills r_attr for every report entry whose token has an embedding.
void annotate_r_attr(TokenReport& report, const TokenEmbeddingTable& tokens, const VectorTable& img_vecs,
                     const IdSet& err_ids, const IdSet& ref_ids);

// Misclassified vs correctly classified samples, no slicing or class split.
TokenReport global_baseline(const Dataset& dataset, const std::vector<TokenDoc>& docs, std::size_t top_n);

// Share of misclassified samples tagged with `attr`.
double global_attr_precision(const Dataset& dataset, const std::string& attr);

}  // namespace sliceaudit
