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

#include "sliceaudit/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

#include "sliceaudit/csv.hpp"

namespace sliceaudit {

using nlohmann::json;

std::vector<double> TfidfModel::mean_vector(const IdSet& ids) const {
  if (ids.empty()) throw Error("distinctiveness: empty slice");
  std::vector<double> mean(vocabulary.size(), 0.0);
  for (const auto& id : ids) {
    auto it = doc_index.find(id);
    if (it == doc_index.end()) throw Error("distinctiveness: no document for sample '" + id + "'");
    for (const auto& [t, w] : doc_vectors[it->second]) mean[t] += w;
  }
  const double n = static_cast<double>(ids.size());
  for (double& v : mean) v /= n;
  return mean;
}

TfidfModel fit_tfidf(const std::vector<TokenDoc>& docs) {
  TfidfModel model;
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::unordered_set<std::string> seen(doc.tokens.begin(), doc.tokens.end());
    for (const auto& t : seen) ++df[t];
  }
  std::unordered_map<std::string, std::size_t> vocab_index;
  const double n = static_cast<double>(docs.size());
  for (const auto& [token, count] : df) {
    vocab_index.emplace(token, model.vocabulary.size());
    model.vocabulary.push_back(token);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }

  model.doc_vectors.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!model.doc_index.emplace(docs[d].sample_id, d).second) {
      throw Error("fit_tfidf: duplicate document id '" + docs[d].sample_id + "'");
    }
    std::map<std::size_t, std::size_t> counts;
    for (const auto& t : docs[d].tokens) ++counts[vocab_index.at(t)];
    const double len = static_cast<double>(docs[d].tokens.size());
    std::vector<std::pair<std::size_t, double>> row;
    row.reserve(counts.size());
    for (const auto& [t, c] : counts) row.emplace_back(t, static_cast<double>(c) / len * model.idf[t]);
    model.doc_vectors.push_back(std::move(row));
  }
  return model;
}

json to_json(const TokenReport& report) {
  json tokens = json::array();
  for (const auto& e : report.entries) {
    tokens.push_back({{"token", e.token}, {"ds", e.ds}, {"r_attr", e.r_attr ? json(*e.r_attr) : json(nullptr)}});
  }
  return {{"slice_id", report.error_slice_id}, {"tokens", tokens}, {"reference_size", report.reference_size}};
}

TokenReport token_report_from_json(const json& j) {
  TokenReport report;
  report.error_slice_id = j.at("slice_id").get<int>();
  report.reference_size = j.at("reference_size").get<std::size_t>();
  for (const auto& t : j.at("tokens")) {
    TokenEntry e;
    e.token = t.at("token").get<std::string>();
    e.ds = t.at("ds").get<double>();
    if (!t.at("r_attr").is_null()) e.r_attr = t.at("r_attr").get<double>();
    report.entries.push_back(std::move(e));
  }
  return report;
}

IdSet build_reference_slice(const Dataset& dataset, const IdSet& error_slice) {
  if (error_slice.empty()) throw Error("build_reference_slice: empty error slice");
  const auto index = dataset.index();
  std::unordered_set<std::string> excluded;
  std::size_t positives = 0;
  for (const auto& id : error_slice) {
    auto it = index.find(id);
    if (it == index.end()) throw Error("build_reference_slice: unknown sample id '" + id + "'");
    excluded.insert(id);
    positives += static_cast<std::size_t>(dataset.samples[it->second].label);
  }
  const int majority = 2 * positives >= error_slice.size() ? 1 : 0;
  IdSet ref;
  for (const auto& s : dataset.samples) {
    if (s.label == majority && s.prediction == s.label && !excluded.contains(s.id)) ref.push_back(s.id);
  }
  if (ref.empty()) throw Error("no reference samples");
  return ref;
}

TokenReport distinctiveness(const TfidfModel& model, const IdSet& err_ids, const IdSet& ref_ids,
                            std::size_t top_n) {
  if (err_ids.empty() || ref_ids.empty()) throw Error("distinctiveness: empty slice");
  const std::vector<double> err = model.mean_vector(err_ids);
  const std::vector<double> ref = model.mean_vector(ref_ids);
  std::vector<double> ds(err.size());
  for (std::size_t t = 0; t < ds.size(); ++t) ds[t] = err[t] - ref[t];

  // Vocabulary is sorted, so a stable sort leaves ties alphabetical.
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ds[a] > ds[b]; });

  TokenReport report;
  report.reference_size = ref_ids.size();
  const std::size_t n = std::min(top_n, order.size());
  for (std::size_t r = 0; r < n; ++r) report.entries.push_back({model.vocabulary[order[r]], ds[order[r]], std::nullopt});
  return report;
}

namespace {

double mean_cosine(const std::vector<double>& unit_token, const VectorTable& img_vecs, const IdSet& ids) {
  if (ids.empty()) throw Error("validate_attribute: empty slice");
  double total = 0.0;
  for (const auto& id : ids) {
    auto it = img_vecs.find(id);
    if (it == img_vecs.end()) throw Error("validate_attribute: missing image vector for '" + id + "'");
    const auto& v = it->second;
    if (v.size() != unit_token.size()) throw Error("validate_attribute: dimension mismatch for '" + id + "'");
    double dot = 0.0;
    double norm2 = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
      dot += v[c] * unit_token[c];
      norm2 += v[c] * v[c];
    }
    if (norm2 == 0.0) throw Error("validate_attribute: zero-norm image vector for '" + id + "'");
    total += dot / std::sqrt(norm2);
  }
  return total / static_cast<double>(ids.size());
}

}  // namespace

double validate_attribute(const std::string& token, const std::vector<double>& token_vec,
                          const VectorTable& img_vecs, const IdSet& err_ids, const IdSet& ref_ids) {
  double norm2 = 0.0;
  for (double v : token_vec) norm2 += v * v;
  if (token_vec.empty() || norm2 == 0.0) throw Error("validate_attribute: zero-norm vector for token '" + token + "'");
  std::vector<double> unit(token_vec);
  const double norm = std::sqrt(norm2);
  for (double& v : unit) v /= norm;
  return mean_cosine(unit, img_vecs, err_ids) - mean_cosine(unit, img_vecs, ref_ids);
}

TokenEmbeddingTable load_token_embeddings(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  if (t.header.size() < 2 || t.header[0] != "token") throw Error(t.source + ": header must be token,v0,...");
  TokenEmbeddingTable table;
  table.dim = t.header.size() - 1;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) throw Error(t.where(r) + ": dimension mismatch");
    std::vector<double> v(table.dim);
    for (std::size_t c = 0; c < table.dim; ++c) v[c] = csv::parse_double(t.rows[r][c + 1], t.where(r));
    if (!table.vectors.emplace(t.rows[r][0], std::move(v)).second) {
      throw Error(t.where(r) + ": duplicate token '" + t.rows[r][0] + "'");
    }
  }
  return table;
}

void write_token_embeddings(const TokenEmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  std::vector<std::string> row{"token"};
  for (std::size_t c = 0; c < table.dim; ++c) row.push_back("v" + std::to_string(c));
  csv::write_row(out, row);
  std::vector<std::string> tokens;
  for (const auto& [token, v] : table.vectors) tokens.push_back(token);
  std::sort(tokens.begin(), tokens.end());
  for (const auto& token : tokens) {
    row.assign(1, token);
    for (double v : table.vectors.at(token)) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
}

void annotate_r_attr(TokenReport& report, const TokenEmbeddingTable& tokens, const VectorTable& img_vecs,
                     const IdSet& err_ids, const IdSet& ref_ids) {
  for (auto& e : report.entries) {
    auto it = tokens.vectors.find(e.token);
    if (it == tokens.vectors.end()) continue;
    e.r_attr = validate_attribute(e.token, it->second, img_vecs, err_ids, ref_ids);
  }
}

TokenReport global_baseline(const Dataset& dataset, const std::vector<TokenDoc>& docs, std::size_t top_n) {
  IdSet err;
  IdSet ref;
  for (const auto& s : dataset.samples) (s.misclassified() ? err : ref).push_back(s.id);
  if (err.empty()) throw Error("global_baseline: no misclassified samples");
  if (ref.empty()) throw Error("global_baseline: no correctly classified samples");
  return distinctiveness(fit_tfidf(docs), err, ref, top_n);
}

double global_attr_precision(const Dataset& dataset, const std::string& attr) {
  std::size_t wrong = 0;
  std::size_t tagged = 0;
  for (const auto& s : dataset.samples) {
    if (!s.misclassified()) continue;
    auto it = s.group_tags.find(attr);
    if (it == s.group_tags.end()) throw Error("global_attr_precision: sample '" + s.id + "' lacks tag '" + attr + "'");
    ++wrong;
    tagged += static_cast<std::size_t>(it->second);
  }
  if (wrong == 0) throw Error("global_attr_precision: no misclassified samples");
  return static_cast<double>(tagged) / static_cast<double>(wrong);
}

}  // namespace sliceaudit
