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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/eigen_oracle.hpp"
#include "oracles/gmm_oracle.hpp"
#include "oracles/text_oracle.hpp"
#include "sliceaudit/biaslab.hpp"
#include "sliceaudit/config.hpp"
#include "sliceaudit/discovery.hpp"
#include "sliceaudit/eval.hpp"
#include "sliceaudit/explain.hpp"
#include "sliceaudit/fusion.hpp"
#include "sliceaudit/random.hpp"
#include "support.hpp"

using namespace sliceaudit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Largest single-step objective decrease seen by any run.
double g_worst_drop = 0.0;
std::size_t g_traces = 0;

void record_trace(const std::vector<double>& trace) {
  for (std::size_t t = 1; t < trace.size(); ++t) g_worst_drop = std::max(g_worst_drop, trace[t - 1] - trace[t]);
  ++g_traces;
}

void record_report(const AuditReport& r) {
  for (const auto& it : r.per_iteration) {
    if (!it.valid) continue;
    g_worst_drop = std::max(g_worst_drop, it.max_objective_drop);
    ++g_traces;
  }
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

const std::vector<BiasKind> kKinds = {BiasKind::spurious_correlation, BiasKind::rare_slice, BiasKind::noisy_label};

AuditConfig fixture(BiasKind kind, std::size_t iterations) {
  AuditConfig c = fixture_config(kind);
  c.iterations = iterations;
  return c;
}

Outcome gamma_zero_oracle() {
  const auto t0 = Clock::now();
  FitOptions opts;
  opts.n_init = 1;
  double worst_param = 0.0, worst_obj = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = support::random_clusters(200, 4, 8, 500 + seed);
    const SliceModel init = initialize_slice_model(data.u, data.y, data.yhat, 8, 0.0, seed, opts);
    const SliceModel fit = fit_slice_model(data.u, data.y, data.yhat, 8, 0.0, seed, opts);
    record_trace(fit.log_likelihood_trace);
    const int steps = static_cast<int>(fit.log_likelihood_trace.size()) - 1;
    oracle::Gmm g;
    g.weights.assign(init.weights.data(), init.weights.data() + init.weights.size());
    g.means = support::to_rows(init.means);
    g.variances = support::to_rows(init.variances);
    const auto ref = oracle::gmm_em(g, support::to_rows(data.u), steps, opts.variance_floor);
    for (Eigen::Index j = 0; j < 8; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      worst_param = std::max(worst_param, std::abs(fit.weights(j) - ref.model.weights[sj]));
      for (Eigen::Index c = 0; c < 4; ++c) {
        const auto sc = static_cast<std::size_t>(c);
        worst_param = std::max(worst_param, std::abs(fit.means(j, c) - ref.model.means[sj][sc]));
        worst_param = std::max(worst_param, std::abs(fit.variances(j, c) - ref.model.variances[sj][sc]));
      }
    }
    const double scale = std::max(1.0, std::abs(ref.trace.back()));
    worst_obj = std::max(worst_obj, std::abs(fit.log_likelihood_trace.back() - ref.trace.back()) / scale);
  }
  const double secs = seconds_since(t0);
  return {worst_param <= 1e-8 && worst_obj <= 1e-8 && secs < 10.0,
          "max param diff " + fmt(worst_param) + ", max relative objective diff " + fmt(worst_obj) + ", " + fmt(secs, 3) +
              " s"};
}

Outcome pca_oracle() {
  double worst_val = 0.0, worst_vec = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix m = support::random_matrix(100, 20, 900 + seed);
    for (Eigen::Index c = 0; c < 20; ++c) m.col(c) *= 1.0 + 0.25 * static_cast<double>(c);
    const PcaModel p = fit_pca(m, 20);
    const auto ref = oracle::jacobi_eigen(oracle::covariance(support::to_rows(m)));
    for (std::size_t j = 0; j < 20; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      worst_val = std::max(worst_val, std::abs(p.explained_variance(jj) - ref.values[j]));
      for (std::size_t c = 0; c < 20; ++c) {
        worst_vec = std::max(worst_vec, std::abs(p.components(jj, static_cast<Eigen::Index>(c)) - ref.vectors[j][c]));
      }
    }
  }
  return {worst_val <= 1e-6 && worst_vec <= 1e-6,
          "max eigenvalue diff " + fmt(worst_val) + ", max component diff " + fmt(worst_vec)};
}

Outcome ds_oracle() {
  const std::vector<std::string> words = {"tube", "opacity", "effusion", "normal", "portable", "lateral", "clear",
                                          "lungs", "stable", "line", "cardiac", "edema", "nodule", "small"};
  Rng rng(2024);
  oracle::Corpus corpus(50);
  std::vector<TokenDoc> docs;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::size_t len = 1 + rng.below(10);
    for (std::size_t w = 0; w < len; ++w) corpus[i].push_back(words[rng.below(words.size())]);
    docs.push_back({"d" + std::to_string(i), corpus[i]});
  }
  std::vector<std::size_t> err, ref;
  IdSet err_ids, ref_ids;
  for (std::size_t i = 0; i < 50; ++i) {
    if (i % 5 == 0) {
      err.push_back(i);
      err_ids.push_back("d" + std::to_string(i));
    } else if (i % 5 == 1 || i % 5 == 3) {
      ref.push_back(i);
      ref_ids.push_back("d" + std::to_string(i));
    }
  }
  const TfidfModel m = fit_tfidf(docs);
  const TokenReport r = distinctiveness(m, err_ids, ref_ids, m.vocabulary.size());
  const auto expected = oracle::brute_ds(corpus, err, ref);
  double worst = 0.0;
  std::size_t matched = 0;
  for (const auto& e : r.entries) {
    const auto it = expected.find(e.token);
    if (it == expected.end()) {
      worst = INFINITY;
      continue;
    }
    worst = std::max(worst, std::abs(e.ds - it->second));
    ++matched;
  }
  return {worst <= 1e-12 && matched == expected.size(),
          "max |DS - brute force| " + fmt(worst) + " over " + std::to_string(matched) + " tokens"};
}

Outcome bias_round_trip() {
  int failures = 0;
  double worst_phi = 0.0;
  for (BiasKind kind : kKinds) {
    const AuditConfig c = fixture_config(kind);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SynthWorld w = synth_world(c.world, c.bias, seed);
      const Dataset& train = w.train;
      std::size_t planted = 0;
      for (const auto& s : w.test.samples) planted += static_cast<std::size_t>(s.group_tags.at("planted"));
      if (planted != round_half_up(c.bias.test_underperforming_fraction * static_cast<double>(c.bias.test_size))) {
        ++failures;
      }
      if (kind == BiasKind::spurious_correlation) {
        BinaryVector other, attr;
        for (const auto& s : train.samples) {
          other.push_back(s.label != c.bias.target_class ? 1 : 0);
          attr.push_back(s.group_tags.at(c.bias.attr));
        }
        const double phi = phi_correlation(other, attr);
        worst_phi = std::max(worst_phi, std::abs(phi - c.bias.strength));
        if (std::abs(phi - c.bias.strength) > 0.05) ++failures;
      } else if (kind == BiasKind::rare_slice) {
        std::size_t cls = 0, cell = 0;
        for (const auto& s : train.samples) {
          if (s.label != c.bias.target_class) continue;
          ++cls;
          cell += static_cast<std::size_t>(s.group_tags.at(c.bias.attr));
        }
        if (cell != round_half_up(c.bias.strength * static_cast<double>(cls))) ++failures;
        if (cls != c.bias.train_size / 2) ++failures;
      } else {
        std::size_t group = 0, flipped = 0;
        for (const auto& s : train.samples) {
          const bool f = s.group_tags.count("flipped") == 1;
          const int original = f ? 1 - s.label : s.label;
          if (original == c.bias.target_class && s.group_tags.at(c.bias.attr) == 1) {
            ++group;
            flipped += f ? 1 : 0;
          } else if (f) {
            ++failures;
          }
        }
        if (flipped != round_half_up(c.bias.strength * static_cast<double>(group))) ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(failures) + " mismatches over 60 worlds; max |phi - 0.7| " + fmt(worst_phi)};
}

struct FixtureRuns {
  std::vector<AuditReport> reports;  // per kind, 20 iterations, fraction 0.2
  double seconds = 0.0;
};

Outcome slice_recovery(const FixtureRuns& runs) {
  bool ok = runs.seconds < 120.0;
  std::string detail;
  for (std::size_t k = 0; k < kKinds.size(); ++k) {
    const AuditReport& r = runs.reports[k];
    ok = ok && r.valid_count > 0 && r.mean_precision_at_k >= 0.8 &&
         r.mean_precision_at_k >= r.mean_baseline_precision + 0.05;
    detail += to_string(kKinds[k]) + " " + fmt(r.mean_precision_at_k, 3) + " vs baseline " +
              fmt(r.mean_baseline_precision, 3) + " (" + std::to_string(r.valid_count) + " valid); ";
  }
  return {ok, detail + fmt(runs.seconds, 3) + " s"};
}

Outcome marker_recovery(const FixtureRuns& runs) {
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < kKinds.size(); ++k) {
    const AuditReport& r = runs.reports[k];
    const AuditConfig c = fixture_config(kKinds[k]);
    const std::string marker = c.world.marker_tokens.at(c.bias.attr);
    std::size_t hits = 0;
    double r_sum = 0.0;
    std::size_t r_n = 0;
    for (const auto& it : r.per_iteration) {
      if (!it.valid) continue;
      const auto& e = it.token_report.entries;
      for (std::size_t i = 0; i < std::min<std::size_t>(5, e.size()); ++i) {
        if (e[i].token != marker) continue;
        ++hits;
        if (e[i].r_attr) {
          r_sum += *e[i].r_attr;
          ++r_n;
        }
      }
    }
    const double rate = r.valid_count ? static_cast<double>(hits) / static_cast<double>(r.valid_count) : 0.0;
    const double mean_r = r_n ? r_sum / static_cast<double>(r_n) : -INFINITY;
    ok = ok && rate >= 0.8 && mean_r > 0.0;
    detail += "'" + marker + "' top-5 in " + fmt(100.0 * rate, 3) + "%, mean r_attr " + fmt(mean_r, 3) + "; ";
  }
  return {ok, detail};
}

Outcome fraction_pattern(const FixtureRuns& runs) {
  AuditConfig c = fixture(BiasKind::noisy_label, 20);
  c.bias.test_underperforming_fraction = 0.3;
  const AuditReport hi = bootstrap_audit(c);
  record_report(hi);
  const double lo = runs.reports[2].mean_precision_at_k;
  return {hi.mean_precision_at_k > lo,
          "P@10 " + fmt(lo, 4) + " at 0.2 -> " + fmt(hi.mean_precision_at_k, 4) + " at 0.3"};
}

Outcome error_only_mode() {
  int wins = 0, valid = 0;
  AuditConfig domino = fixture_config(BiasKind::noisy_label);
  domino.precision_k = 5;
  AuditConfig err = domino;
  err.mode = DiscoveryMode::error_only;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const IterationResult a = run_iteration(domino, seed);
    const IterationResult b = run_iteration(err, seed);
    if (!a.valid) continue;
    g_worst_drop = std::max({g_worst_drop, a.max_objective_drop, b.max_objective_drop});
    g_traces += 2;
    ++valid;
    wins += b.precision_at_k >= a.precision_at_k ? 1 : 0;
  }
  const double rate = valid ? static_cast<double>(wins) / static_cast<double>(valid) : 0.0;
  return {valid > 0 && rate >= 0.6,
          "error-only >= domino P@5 in " + std::to_string(wins) + "/" + std::to_string(valid) + " valid seeds"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome bench_determinism() {
  support::TempDir dir("acceptance_bench");
  const fs::path config = dir.path() / "bench.json";
  {
    AuditConfig c = fixture(BiasKind::spurious_correlation, 6);
    std::ofstream out(config);
    out << to_json(c).dump(2);
  }
  std::string outputs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir.path() / ("run" + std::to_string(run));
    const std::string cmd = std::string(AUDIT_BINARY) + " bench --config \"" + config.string() + "\" --seed 11 --out \"" +
                            out.string() + "\" > \"" + (dir.path() / "log.txt").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "audit bench exited nonzero"};
    outputs[run] = slurp(out / "report.json");
  }
  const AuditReport r = audit_report_from_json(nlohmann::json::parse(outputs[0]));
  record_report(r);
  return {!outputs[0].empty() && outputs[0] == outputs[1],
          "report.json " + std::to_string(outputs[0].size()) + " bytes, " +
              (outputs[0] == outputs[1] ? "identical" : "different")};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << id << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "gamma=0 GMM oracle", gamma_zero_oracle);
  report(2, "PCA oracle", pca_oracle);
  report(3, "TF-IDF/DS oracle", ds_oracle);
  report(4, "bias-metric round trip", bias_round_trip);

  FixtureRuns runs;
  {
    const auto t0 = Clock::now();
    try {
      for (BiasKind kind : kKinds) {
        runs.reports.push_back(bootstrap_audit(fixture(kind, 20)));
        record_report(runs.reports.back());
      }
    } catch (const std::exception& e) {
      std::cout << "fixture runs failed: " << e.what() << std::endl;
      runs.reports.resize(kKinds.size());
    }
    runs.seconds = seconds_since(t0);
  }
  report(5, "planted-slice recovery", [&] { return slice_recovery(runs); });
  report(6, "marker-token recovery", [&] { return marker_recovery(runs); });
  report(7, "underperforming fraction 0.2 -> 0.3", [&] { return fraction_pattern(runs); });
  report(8, "error-only mode", error_only_mode);
  report(9, "bench determinism", bench_determinism);
  report(10, "EM monotonicity", [] {
    return Outcome{g_traces > 0 && g_worst_drop <= 1e-6,
                   "largest step decrease " + fmt(g_worst_drop) + " over " + std::to_string(g_traces) + " fits"};
  });

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
