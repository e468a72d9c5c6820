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

#include "sliceaudit/eval.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "sliceaudit/biaslab.hpp"
#include "sliceaudit/csv.hpp"

namespace sliceaudit {

using nlohmann::json;

double precision_at_k(const std::vector<double>& memberships, const BinaryVector& truth, std::size_t k) {
  if (memberships.size() != truth.size()) throw Error("precision_at_k: length mismatch");
  if (k == 0 || k > memberships.size()) {
    throw Error("precision_at_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(memberships.size()) + "]");
  }
  std::vector<std::size_t> order(memberships.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (memberships[a] != memberships[b]) return memberships[a] > memberships[b];
                      return a < b;
                    });
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) hits += truth[order[r]] == 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

BestSlice best_slice(const SliceAssignment& assignment, const BinaryVector& truth, std::size_t k) {
  const bool have_log = assignment.log_memberships.rows() == assignment.memberships.rows() &&
                        assignment.log_memberships.cols() == assignment.memberships.cols();
  const auto& m = have_log ? assignment.log_memberships : assignment.memberships;
  if (m.cols() == 0) throw Error("best_slice: no slices");
  BestSlice best;
  std::vector<double> column(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) column[static_cast<std::size_t>(i)] = m(i, j);
    const double p = precision_at_k(column, truth, k);
    if (j == 0 || p > best.precision) best = {static_cast<std::size_t>(j), p};
  }
  return best;
}

std::vector<std::string> resolve_modalities(const Dataset& dataset, const AuditConfig& config) {
  if (!config.modalities.empty()) return config.modalities;
  std::vector<std::string> all;
  for (const auto& [m, d] : dataset.modality_dims) all.push_back(m);
  return all;
}

Discovery discover(const Dataset& dataset, const AuditConfig& config, std::uint64_t seed) {
  Discovery out;
  const FusedMatrix fused = fuse(dataset, resolve_modalities(dataset, config), config.standardize);
  const std::size_t k = std::min({config.pca_components, static_cast<std::size_t>(fused.rows.rows()),
                                  static_cast<std::size_t>(fused.rows.cols())});
  out.pca = fit_pca(fused.rows, k);
  out.embedding = transform_pca(out.pca, fused.rows);

  const BinaryVector y = dataset.labels();
  const BinaryVector yhat = dataset.predictions();
  const FitOptions opts = config.fit_options();
  out.model = config.mode == DiscoveryMode::domino
                  ? fit_slice_model(out.embedding, y, yhat, config.k_slices, config.gamma, seed, opts)
                  : fit_error_only(out.embedding, y, yhat, config.k_slices, seed, opts);
  out.assignment = assign_slices(out.model, out.embedding, y, yhat, config.beta);
  out.ranking = rank_slices(out.assignment, y, yhat);
  return out;
}

TokenReport explain_slice(const Dataset& dataset, const TfidfModel& tfidf, const IdSet& error_ids, int slice_id,
                          const AuditConfig& config, const TokenEmbeddingTable* tokens) {
  const IdSet ref = build_reference_slice(dataset, error_ids);
  TokenReport report = distinctiveness(tfidf, error_ids, ref, config.top_n);
  report.error_slice_id = slice_id;
  if (tokens != nullptr && dataset.modality_dims.contains(config.image_modality)) {
    const auto it = dataset.modality_dims.find(config.image_modality);
    if (it->second != tokens->dim) {
      throw Error("token embeddings have dimension " + std::to_string(tokens->dim) + " but modality '" +
                  config.image_modality + "' has " + std::to_string(it->second));
    }
    annotate_r_attr(report, *tokens, dataset.view_by_id(config.image_modality), error_ids, ref);
  }
  return report;
}

namespace {

double largest_drop(const std::vector<double>& trace) {
  double drop = 0.0;
  for (std::size_t t = 1; t < trace.size(); ++t) drop = std::max(drop, trace[t - 1] - trace[t]);
  return drop;
}

}  // namespace

IterationResult run_iteration(const AuditConfig& config, std::uint64_t seed) {
  IterationResult r;
  r.seed = seed;
  const SynthWorld world = synth_world(config.world, config.bias, seed);
  const Dataset& test = world.test;
  r.realized_bias = world.realized_bias;
  r.accuracy_gap = accuracy_gap(test, config.bias.attr);
  r.valid = validity_check(test, config.bias.attr);
  if (!r.valid) return r;
  r.baseline_precision = global_attr_precision(test, config.bias.attr);

  AuditConfig local = config;
  local.image_modality = config.world.image_modality;
  const Discovery d = discover(test, local, seed);
  r.em_steps = d.model.log_likelihood_trace.size() - 1;
  r.max_objective_drop = largest_drop(d.model.log_likelihood_trace);
  const BestSlice best = best_slice(d.assignment, tag_vector(test, "planted"), config.precision_k);
  r.best_slice = best.index;
  r.precision_at_k = best.precision;

  IdSet error_ids;
  for (std::size_t i : d.assignment.slices[best.index]) error_ids.push_back(test.samples[i].id);
  if (error_ids.empty()) return r;
  const TfidfModel tfidf = fit_tfidf(build_docs(test, config.doc_source, config.stopword_set()));
  try {
    r.token_report = explain_slice(test, tfidf, error_ids, static_cast<int>(best.index), local, &world.token_table);
  } catch (const Error&) {
    // No reference samples for this slice: the iteration keeps its
    // precision but contributes no tokens.
    r.token_report = TokenReport{};
    r.token_report.error_slice_id = static_cast<int>(best.index);
  }
  return r;
}

AuditReport aggregate(std::vector<IterationResult> iterations, const AuditConfig& config) {
  std::sort(iterations.begin(), iterations.end(),
            [](const IterationResult& a, const IterationResult& b) { return a.seed < b.seed; });
  AuditReport report;
  report.config_echo = to_json(config);
  double precision_sum = 0.0;
  double baseline_sum = 0.0;
  std::map<std::string, double> ds_sum;
  std::map<std::string, std::pair<double, std::size_t>> r_sum;
  for (const auto& it : iterations) {
    if (!it.valid) {
      ++report.invalid_count;
      continue;
    }
    ++report.valid_count;
    precision_sum += it.precision_at_k;
    baseline_sum += it.baseline_precision;
    for (const auto& e : it.token_report.entries) {
      ++report.token_frequency[e.token];
      ds_sum[e.token] += e.ds;
      if (e.r_attr) {
        r_sum[e.token].first += *e.r_attr;
        ++r_sum[e.token].second;
      }
    }
  }
  if (report.valid_count > 0) {
    report.mean_precision_at_k = precision_sum / static_cast<double>(report.valid_count);
    report.mean_baseline_precision = baseline_sum / static_cast<double>(report.valid_count);
  }
  for (const auto& [token, count] : report.token_frequency) {
    TokenStats s;
    s.frequency = count;
    s.mean_ds = ds_sum[token] / static_cast<double>(count);
    auto r = r_sum.find(token);
    if (r != r_sum.end() && r->second.second > 0) s.mean_r_attr = r->second.first / static_cast<double>(r->second.second);
    report.token_stats.emplace(token, s);
  }
  report.per_iteration = std::move(iterations);
  return report;
}

AuditReport bootstrap_audit(const AuditConfig& config) {
  config.validate();
  config.bias.validate();
  config.world.validate();
  const auto n = static_cast<std::ptrdiff_t>(config.iterations);
  std::vector<IterationResult> results(config.iterations);
  std::vector<std::exception_ptr> errors(config.iterations);
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto idx = static_cast<std::size_t>(t);
    try {
      results[idx] = run_iteration(config, config.base_seed + idx);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const std::exception& e) {
      throw Error("bootstrap iteration with seed " + std::to_string(config.base_seed + t) + " failed: " + e.what());
    }
  }

  AuditReport report = aggregate(std::move(results), config);
  if (report.valid_count == 0) {
    double gap = 0.0;
    for (const auto& it : report.per_iteration) gap += it.accuracy_gap;
    gap /= static_cast<double>(report.per_iteration.size());
    std::ostringstream msg;
    msg << "bootstrap_audit: no valid iterations: all " << report.per_iteration.size()
        << " failed the 0.10 accuracy-gap check (mean gap " << gap << ")";
    throw Error(msg.str());
  }
  return report;
}

json to_json(const AuditReport& report) {
  json iterations = json::array();
  for (const auto& it : report.per_iteration) {
    iterations.push_back({
        {"seed", it.seed},
        {"valid", it.valid},
        {"accuracy_gap", it.accuracy_gap},
        {"realized_bias", it.realized_bias},
        {"baseline_precision", it.baseline_precision},
        {"best_slice", it.best_slice},
        {"precision_at_k", it.precision_at_k},
        {"em_steps", it.em_steps},
        {"max_objective_drop", it.max_objective_drop},
        {"token_report", to_json(it.token_report)},
    });
  }
  json stats = json::object();
  for (const auto& [token, s] : report.token_stats) {
    stats[token] = {{"frequency", s.frequency},
                    {"mean_ds", s.mean_ds},
                    {"mean_r_attr", s.mean_r_attr ? json(*s.mean_r_attr) : json(nullptr)}};
  }
  return {
      {"config", report.config_echo},
      {"iterations", iterations},
      {"mean_precision_at_k", report.mean_precision_at_k},
      {"mean_baseline_precision", report.mean_baseline_precision},
      {"valid_iterations", report.valid_count},
      {"invalid_iterations", report.invalid_count},
      {"token_frequency", report.token_frequency},
      {"token_stats", stats},
  };
}

AuditReport audit_report_from_json(const json& j) {
  AuditReport report;
  try {
    report.config_echo = j.at("config");
    for (const auto& it : j.at("iterations")) {
      IterationResult r;
      r.seed = it.at("seed").get<std::uint64_t>();
      r.valid = it.at("valid").get<bool>();
      r.accuracy_gap = it.at("accuracy_gap").get<double>();
      r.realized_bias = it.at("realized_bias").get<double>();
      r.baseline_precision = it.at("baseline_precision").get<double>();
      r.best_slice = it.at("best_slice").get<std::size_t>();
      r.precision_at_k = it.at("precision_at_k").get<double>();
      r.em_steps = it.at("em_steps").get<std::size_t>();
      r.max_objective_drop = it.at("max_objective_drop").get<double>();
      r.token_report = token_report_from_json(it.at("token_report"));
      report.per_iteration.push_back(std::move(r));
    }
    report.mean_precision_at_k = j.at("mean_precision_at_k").get<double>();
    report.mean_baseline_precision = j.at("mean_baseline_precision").get<double>();
    report.valid_count = j.at("valid_iterations").get<std::size_t>();
    report.invalid_count = j.at("invalid_iterations").get<std::size_t>();
    report.token_frequency = j.at("token_frequency").get<std::map<std::string, std::size_t>>();
    for (const auto& [token, s] : j.at("token_stats").items()) {
      TokenStats stats;
      stats.frequency = s.at("frequency").get<std::size_t>();
      stats.mean_ds = s.at("mean_ds").get<double>();
      if (!s.at("mean_r_attr").is_null()) stats.mean_r_attr = s.at("mean_r_attr").get<double>();
      report.token_stats.emplace(token, stats);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid audit report: ") + e.what());
  }
  return report;
}

void emit_report(const AuditReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create directory '" + out_dir.string() + "': " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (out_dir / name).string() + "'");
    return out;
  };

  {
    auto out = open("report.json");
    out << to_json(report).dump(2) << '\n';
  }
  {
    auto out = open("summary.csv");
    csv::write_row(out, {"seed", "valid", "precision", "baseline_precision"});
    for (const auto& it : report.per_iteration) {
      csv::write_row(out, {std::to_string(it.seed), it.valid ? "1" : "0",
                           it.valid ? csv::format_double(it.precision_at_k) : "",
                           it.valid ? csv::format_double(it.baseline_precision) : ""});
    }
  }
  {
    auto out = open("tokens.csv");
    csv::write_row(out, {"token", "frequency", "mean_ds", "mean_r_attr"});
    std::vector<std::pair<std::string, TokenStats>> rows(report.token_stats.begin(), report.token_stats.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second.frequency > b.second.frequency; });
    for (const auto& [token, s] : rows) {
      csv::write_row(out, {token, std::to_string(s.frequency), csv::format_double(s.mean_ds),
                           s.mean_r_attr ? csv::format_double(*s.mean_r_attr) : ""});
    }
  }
}

}  // namespace sliceaudit
