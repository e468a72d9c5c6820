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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sliceaudit/common.hpp"

namespace sliceaudit {

// One audited example: embedding views, ground truth, the classifier's
// prediction, and optional report text, metadata and audit tags.
struct Sample {
  std::string id;
  std::map<std::string, std::vector<double>> views;
  int label = 0;
  int prediction = 0;
  std::optional<std::string> report_text;
  std::map<std::string, std::string> metadata;
  // Ground-truth attributes for evaluation only; never read by discovery.
  std::map<std::string, int> group_tags;

  bool misclassified() const { return label != prediction; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::map<std::string, std::size_t> modality_dims;

  std::size_t size() const { return samples.size(); }
  BinaryVector labels() const;
  BinaryVector predictions() const;
  IdSet ids() const;
  // Row index of every sample id.
  std::unordered_map<std::string, std::size_t> index() const;
  // Embedding vectors of one modality keyed by sample id.
  std::unordered_map<std::string, std::vector<double>> view_by_id(const std::string& modality) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws Error naming the first violated dataset invariant.
void validate(const Dataset& dataset);

struct TokenDoc {
  std::string sample_id;
  std::vector<std::string> tokens;
};

enum class DocSource { report, metadata, both };

DocSource parse_doc_source(const std::string& name);
std::string to_string(DocSource source);

/// Loads a dataset described by a JSON manifest. Relative paths inside the
/// manifest resolve against the manifest's directory.
///
/// Errors (Error) carry the offending file and line: missing files,
/// duplicate ids, non-binary labels, and "dimension mismatch" when an
/// embedding file's rows or columns disagree with the sample list.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes `dataset` as manifest.json plus CSV files under `dir` and returns
/// the manifest path. load_dataset on the result reproduces `dataset`.
std::filesystem::path emit_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Built-in English stopword list.
const std::set<std::string>& default_stopwords();

// Lowercases, splits on characters outside [a-z0-9-], trims surrounding
// hyphens, drops tokens shorter than 2 and stopwords. Order and duplicates
// are preserved.
std::vector<std::string> tokenize(std::string_view text, const std::set<std::string>& stopwords);

// "ViewPosition" -> "view position".
std::string decamel(std::string_view key);

// "key is value" phrases in key order joined by "; ", all lowercase.
std::string metadata_to_text(const std::map<std::string, std::string>& record);

// One TokenDoc per sample, in dataset order. Missing text gives an empty doc.
std::vector<TokenDoc> build_docs(const Dataset& dataset, DocSource source,
                                 const std::set<std::string>& stopwords);

}  // namespace sliceaudit
