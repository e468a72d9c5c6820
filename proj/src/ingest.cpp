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

#include "sliceaudit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "sliceaudit/csv.hpp"

namespace sliceaudit {

namespace fs = std::filesystem;
using nlohmann::json;

void require_binary(const BinaryVector& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0 && v[i] != 1) {
      throw Error(std::string(name) + "[" + std::to_string(i) + "] is not binary");
    }
  }
}

BinaryVector Dataset::labels() const {
  BinaryVector out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].label;
  return out;
}

BinaryVector Dataset::predictions() const {
  BinaryVector out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].prediction;
  return out;
}

IdSet Dataset::ids() const {
  IdSet out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

std::unordered_map<std::string, std::size_t> Dataset::index() const {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.emplace(samples[i].id, i);
  return out;
}

std::unordered_map<std::string, std::vector<double>> Dataset::view_by_id(
    const std::string& modality) const {
  if (!modality_dims.contains(modality)) throw Error("unknown modality '" + modality + "'");
  std::unordered_map<std::string, std::vector<double>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.emplace(s.id, s.views.at(modality));
  return out;
}

void validate(const Dataset& dataset) {
  if (dataset.samples.empty()) throw Error("dataset is empty");
  std::unordered_set<std::string> seen;
  for (const auto& s : dataset.samples) {
    if (!seen.insert(s.id).second) throw Error("duplicate sample id '" + s.id + "'");
    if (s.label != 0 && s.label != 1) throw Error("sample '" + s.id + "': label is not binary");
    if (s.prediction != 0 && s.prediction != 1) {
      throw Error("sample '" + s.id + "': prediction is not binary");
    }
    if (s.views.size() != dataset.modality_dims.size()) {
      throw Error("sample '" + s.id + "': modality set differs from dataset");
    }
    for (const auto& [name, dim] : dataset.modality_dims) {
      auto it = s.views.find(name);
      if (it == s.views.end()) throw Error("sample '" + s.id + "': missing view '" + name + "'");
      if (it->second.size() != dim) {
        throw Error("sample '" + s.id + "': dimension mismatch in view '" + name + "'");
      }
    }
  }
}

DocSource parse_doc_source(const std::string& name) {
  if (name == "report") return DocSource::report;
  if (name == "metadata") return DocSource::metadata;
  if (name == "both") return DocSource::both;
  throw Error("unknown doc_source '" + name + "' (expected report, metadata or both)");
}

std::string to_string(DocSource source) {
  switch (source) {
    case DocSource::report:
      return "report";
    case DocSource::metadata:
      return "metadata";
    case DocSource::both:
      return "both";
  }
  return "both";
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<fs::path> optional_path(const json& manifest, const char* key, const fs::path& base) {
  if (!manifest.contains(key) || manifest[key].is_null()) return std::nullopt;
  if (!manifest[key].is_string()) throw Error(std::string("manifest: '") + key + "' must be a string or null");
  return resolve(base, manifest[key].get<std::string>());
}

int parse_binary(const std::string& field, const csv::Table& t, std::size_t r, const char* what) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw Error(t.where(r) + ": " + what + " must be 0 or 1, got '" + field + "'");
}

// Maps each row of an id-keyed side file to its sample index.
std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index, const csv::Table& t,
                   std::size_t r, std::vector<char>& seen) {
  const std::string& id = t.rows[r].at(0);
  auto it = index.find(id);
  if (it == index.end()) throw Error(t.where(r) + ": unknown sample id '" + id + "'");
  if (seen[it->second]) throw Error(t.where(r) + ": duplicate id '" + id + "'");
  seen[it->second] = 1;
  return it->second;
}

void require_width(const csv::Table& t, std::size_t r) {
  if (t.rows[r].size() != t.header.size()) {
    throw Error(t.where(r) + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                std::to_string(t.rows[r].size()));
  }
}

}  // namespace

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  if (!manifest.is_object()) throw Error(manifest_path.string() + ": manifest must be a JSON object");
  const fs::path base = manifest_path.parent_path();

  if (!manifest.contains("samples") || !manifest["samples"].is_string()) {
    throw Error(manifest_path.string() + ": 'samples' path is required");
  }
  if (!manifest.contains("embeddings") || !manifest["embeddings"].is_object() ||
      manifest["embeddings"].empty()) {
    throw Error(manifest_path.string() + ": 'embeddings' must map at least one modality to a path");
  }

  Dataset dataset;
  const csv::Table ids = csv::read(resolve(base, manifest["samples"].get<std::string>()));
  const std::size_t id_col = ids.column("id");
  const std::size_t label_col = ids.column("label");
  const std::size_t pred_col = ids.column("prediction");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < ids.rows.size(); ++r) {
    require_width(ids, r);
    Sample s;
    s.id = ids.rows[r][id_col];
    if (s.id.empty()) throw Error(ids.where(r) + ": empty id");
    if (!index.emplace(s.id, dataset.samples.size()).second) {
      throw Error(ids.where(r) + ": duplicate id '" + s.id + "'");
    }
    s.label = parse_binary(ids.rows[r][label_col], ids, r, "label");
    s.prediction = parse_binary(ids.rows[r][pred_col], ids, r, "prediction");
    dataset.samples.push_back(std::move(s));
  }
  if (dataset.samples.empty()) throw Error(ids.source + ": no samples");

  for (const auto& [modality, path] : manifest["embeddings"].items()) {
    if (!path.is_string()) throw Error("manifest: embedding path for '" + modality + "' must be a string");
    const csv::Table t = csv::read(resolve(base, path.get<std::string>()));
    if (t.header.size() < 2 || t.header[0] != "id") {
      throw Error(t.source + ": header must be id,v0,...");
    }
    const std::size_t dim = t.header.size() - 1;
    if (t.rows.size() != dataset.samples.size()) {
      throw Error(t.source + ": dimension mismatch: " + std::to_string(t.rows.size()) +
                  " embedding rows for " + std::to_string(dataset.samples.size()) + " samples");
    }
    std::vector<char> seen(dataset.samples.size(), 0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.rows[r].size() != t.header.size()) {
        throw Error(t.where(r) + ": dimension mismatch: expected " + std::to_string(dim) +
                    " values, got " + std::to_string(t.rows[r].size() - 1));
      }
      const std::size_t i = lookup(index, t, r, seen);
      std::vector<double> v(dim);
      for (std::size_t c = 0; c < dim; ++c) v[c] = csv::parse_double(t.rows[r][c + 1], t.where(r));
      dataset.samples[i].views.emplace(modality, std::move(v));
    }
    dataset.modality_dims.emplace(modality, dim);
  }

  if (auto path = optional_path(manifest, "reports", base)) {
    const csv::Table t = csv::read(*path);
    const std::size_t text_col = t.column("text");
    if (t.column("id") != 0) throw Error(t.source + ": first column must be id");
    std::vector<char> seen(dataset.samples.size(), 0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      require_width(t, r);
      dataset.samples[lookup(index, t, r, seen)].report_text = t.rows[r][text_col];
    }
  }

  if (auto path = optional_path(manifest, "metadata", base)) {
    const csv::Table t = csv::read(*path);
    if (t.column("id") != 0) throw Error(t.source + ": first column must be id");
    std::vector<char> seen(dataset.samples.size(), 0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      require_width(t, r);
      Sample& s = dataset.samples[lookup(index, t, r, seen)];
      for (std::size_t c = 1; c < t.header.size(); ++c) {
        if (!t.rows[r][c].empty()) s.metadata[t.header[c]] = t.rows[r][c];
      }
    }
  }

  if (auto path = optional_path(manifest, "groups", base)) {
    const csv::Table t = csv::read(*path);
    if (t.column("id") != 0) throw Error(t.source + ": first column must be id");
    std::vector<char> seen(dataset.samples.size(), 0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      require_width(t, r);
      Sample& s = dataset.samples[lookup(index, t, r, seen)];
      for (std::size_t c = 1; c < t.header.size(); ++c) {
        if (!t.rows[r][c].empty()) {
          s.group_tags[t.header[c]] = parse_binary(t.rows[r][c], t, r, t.header[c].c_str());
        }
      }
    }
  }

  validate(dataset);
  return dataset;
}

fs::path emit_dataset(const Dataset& dataset, const fs::path& dir) {
  validate(dataset);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());

  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
    return out;
  };

  json manifest;
  {
    auto out = open("samples.csv");
    csv::write_row(out, {"id", "label", "prediction"});
    for (const auto& s : dataset.samples) {
      csv::write_row(out, {s.id, std::to_string(s.label), std::to_string(s.prediction)});
    }
    manifest["samples"] = "samples.csv";
  }

  manifest["embeddings"] = json::object();
  for (const auto& [modality, dim] : dataset.modality_dims) {
    const std::string name = "embeddings_" + modality + ".csv";
    auto out = open(name);
    std::vector<std::string> row{"id"};
    for (std::size_t c = 0; c < dim; ++c) row.push_back("v" + std::to_string(c));
    csv::write_row(out, row);
    for (const auto& s : dataset.samples) {
      row.assign(1, s.id);
      for (double v : s.views.at(modality)) row.push_back(csv::format_double(v));
      csv::write_row(out, row);
    }
    manifest["embeddings"][modality] = name;
  }

  const bool any_report = std::any_of(dataset.samples.begin(), dataset.samples.end(),
                                      [](const Sample& s) { return s.report_text.has_value(); });
  manifest["reports"] = nullptr;
  if (any_report) {
    auto out = open("reports.csv");
    csv::write_row(out, {"id", "text"});
    for (const auto& s : dataset.samples) {
      if (s.report_text) csv::write_row(out, {s.id, *s.report_text});
    }
    manifest["reports"] = "reports.csv";
  }

  // Metadata and group tags are sparse per sample; empty cells mean absent.
  auto write_sparse = [&](const std::string& name, auto field_of) {
    std::set<std::string> keys;
    for (const auto& s : dataset.samples) {
      for (const auto& [k, v] : field_of(s)) keys.insert(k);
    }
    if (keys.empty()) return false;
    auto out = open(name);
    std::vector<std::string> row{"id"};
    row.insert(row.end(), keys.begin(), keys.end());
    csv::write_row(out, row);
    for (const auto& s : dataset.samples) {
      const auto& fields = field_of(s);
      row.assign(1, s.id);
      for (const auto& k : keys) {
        auto it = fields.find(k);
        if (it == fields.end()) {
          row.emplace_back();
        } else if constexpr (std::is_same_v<std::decay_t<decltype(it->second)>, int>) {
          row.push_back(std::to_string(it->second));
        } else {
          row.push_back(it->second);
        }
      }
      csv::write_row(out, row);
    }
    return true;
  };

  manifest["metadata"] = nullptr;
  if (write_sparse("metadata.csv", [](const Sample& s) -> const auto& { return s.metadata; })) {
    manifest["metadata"] = "metadata.csv";
  }
  manifest["groups"] = nullptr;
  if (write_sparse("groups.csv", [](const Sample& s) -> const auto& { return s.group_tags; })) {
    manifest["groups"] = "groups.csv";
  }

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw Error("cannot write '" + manifest_path.string() + "'");
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",     "about", "above", "after", "again", "all",   "also",  "am",    "an",
      "and",   "any",   "are",   "as",    "at",    "be",    "been",  "before", "being",
      "below", "between", "both", "but",  "by",    "can",   "could", "did",   "do",
      "does",  "doing", "down",  "during", "each", "few",   "for",   "from",  "further",
      "had",   "has",   "have",  "having", "he",   "her",   "here",  "hers",  "him",
      "his",   "how",   "if",    "in",    "into",  "is",    "it",    "its",   "itself",
      "just",  "may",   "me",    "more",  "most",  "my",    "no",    "nor",   "not",
      "now",   "of",    "off",   "on",    "once",  "only",  "or",    "other", "our",
      "out",   "over",  "own",   "same",  "she",   "should", "so",   "some",  "such",
      "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
      "this",  "those", "through", "to",  "too",   "under", "until", "up",    "very",
      "was",   "we",    "were",  "what",  "when",  "where", "which", "while", "who",
      "whom",  "why",   "will",  "with",  "would", "you",   "your",
  };
  return words;
}

std::vector<std::string> tokenize(std::string_view text, const std::set<std::string>& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    const auto first = current.find_first_not_of('-');
    if (first != std::string::npos) {
      const auto last = current.find_last_not_of('-');
      std::string token = current.substr(first, last - first + 1);
      if (token.size() >= 2 && !stopwords.contains(token)) tokens.push_back(std::move(token));
    }
    current.clear();
  };
  for (unsigned char ch : text) {
    const char lower = static_cast<char>(std::tolower(ch));
    if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '-') {
      current.push_back(lower);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string decamel(std::string_view key) {
  std::string out;
  auto is_upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  auto is_lower = [](char c) { return c >= 'a' && c <= 'z'; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i < key.size(); ++i) {
    const char c = key[i];
    if (c == '_' || c == ' ' || c == '\t') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
      continue;
    }
    if (is_upper(c) && i > 0 && !out.empty() && out.back() != ' ') {
      const char prev = key[i - 1];
      const bool next_lower = i + 1 < key.size() && is_lower(key[i + 1]);
      if (is_lower(prev) || is_digit(prev) || (is_upper(prev) && next_lower)) out.push_back(' ');
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string metadata_to_text(const std::map<std::string, std::string>& record) {
  std::string out;
  for (const auto& [key, value] : record) {
    if (!out.empty()) out += "; ";
    out += decamel(key);
    out += " is ";
    for (unsigned char ch : value) out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

std::vector<TokenDoc> build_docs(const Dataset& dataset, DocSource source,
                                 const std::set<std::string>& stopwords) {
  std::vector<TokenDoc> docs;
  docs.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    std::string text;
    if (source != DocSource::metadata && s.report_text) text = *s.report_text;
    if (source != DocSource::report && !s.metadata.empty()) {
      if (!text.empty()) text += ' ';
      text += metadata_to_text(s.metadata);
    }
    docs.push_back({s.id, tokenize(text, stopwords)});
  }
  return docs;
}

}  // namespace sliceaudit
