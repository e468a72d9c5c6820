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

// audit: command-line front end.
//
//   audit run     --manifest M [--config C] --out DIR [--seed S] [--token-embeddings T]
//   audit bench   [--config C] --out DIR [--seed S] [--fixture KIND]
//   audit explain --manifest M --slice-file S --out DIR [--config C] [--token-embeddings T]
//   audit synth   [--config C] --out DIR [--seed S] [--fixture KIND]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sliceaudit/biaslab.hpp"
#include "sliceaudit/config.hpp"
#include "sliceaudit/csv.hpp"
#include "sliceaudit/eval.hpp"
#include "sliceaudit/explain.hpp"
#include "sliceaudit/ingest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sliceaudit;

namespace {

struct Options {
  std::string manifest;
  std::string config;
  std::string out;
  std::string slice_file;
  std::string token_embeddings;
  std::string fixture;
  std::optional<std::uint64_t> seed;
};

AuditConfig resolve_config(const Options& o) {
  AuditConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else if (!o.fixture.empty()) {
    c = fixture_config(parse_bias_kind(o.fixture));
  }
  if (!o.config.empty() && !o.fixture.empty()) throw Error("--config and --fixture are mutually exclusive");
  if (o.seed) c.base_seed = *o.seed;
  if (!o.token_embeddings.empty()) c.token_embeddings = o.token_embeddings;
  return c;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::optional<TokenEmbeddingTable> token_table(const AuditConfig& c) {
  if (!c.token_embeddings) return std::nullopt;
  return load_token_embeddings(*c.token_embeddings);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
}

int cmd_run(const Options& o) {
  const AuditConfig config = resolve_config(o);
  const Dataset dataset = load_dataset(o.manifest);
  const Discovery d = discover(dataset, config, config.base_seed);
  const BinaryVector y = dataset.labels();
  const BinaryVector yhat = dataset.predictions();
  const std::vector<double> rates = slice_error_rates(d.assignment, y, yhat);
  make_dir(o.out);

  json slices = json::array();
  for (std::size_t rank = 0; rank < d.ranking.size(); ++rank) {
    const std::size_t j = d.ranking[rank];
    const auto jj = static_cast<Eigen::Index>(j);
    json members = json::array();
    for (std::size_t i : d.assignment.slices[j]) members.push_back(dataset.samples[i].id);
    slices.push_back({{"slice_id", j},
                      {"rank", rank},
                      {"size", d.assignment.slices[j].size()},
                      {"error_rate", rates[j]},
                      {"weight", d.model.weights(jj)},
                      {"label_dist", {d.model.label_dist(jj, 0), d.model.label_dist(jj, 1)}},
                      {"pred_dist", {d.model.pred_dist(jj, 0), d.model.pred_dist(jj, 1)}},
                      {"members", members}});
  }
  write_json(fs::path(o.out) / "slices.json",
             {{"mode", to_string(config.mode)},
              {"k_slices", d.model.num_slices()},
              {"gamma", d.model.gamma},
              {"beta", config.beta},
              {"pca_components", d.pca.output_dim()},
              {"log_likelihood_trace", d.model.log_likelihood_trace},
              {"slices", slices}});

  {
    std::ofstream out(fs::path(o.out) / "memberships.csv", std::ios::binary);
    std::vector<std::string> row{"id"};
    for (std::size_t j = 0; j < d.model.num_slices(); ++j) row.push_back("s" + std::to_string(j));
    csv::write_row(out, row);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      row.assign(1, dataset.samples[i].id);
      for (Eigen::Index j = 0; j < d.assignment.memberships.cols(); ++j) {
        row.push_back(csv::format_double(d.assignment.memberships(static_cast<Eigen::Index>(i), j)));
      }
      csv::write_row(out, row);
    }
  }

  const auto tokens = token_table(config);
  const auto docs = build_docs(dataset, config.doc_source, config.stopword_set());
  const TfidfModel tfidf = fit_tfidf(docs);
  json explanations = json::array();
  for (std::size_t j : d.ranking) {
    if (d.assignment.slices[j].empty()) continue;
    IdSet ids;
    for (std::size_t i : d.assignment.slices[j]) ids.push_back(dataset.samples[i].id);
    try {
      explanations.push_back(
          to_json(explain_slice(dataset, tfidf, ids, static_cast<int>(j), config, tokens ? &*tokens : nullptr)));
    } catch (const Error& e) {
      std::cerr << "slice " << j << ": no explanation: " << e.what() << '\n';
    }
  }
  write_json(fs::path(o.out) / "explanations.json", explanations);

  try {
    write_json(fs::path(o.out) / "baseline.json", to_json(global_baseline(dataset, docs, config.top_n)));
  } catch (const Error& e) {
    std::cerr << "baseline skipped: " << e.what() << '\n';
  }
  std::cout << "audited " << dataset.size() << " samples into " << d.model.num_slices() << " slices; top slice "
            << d.ranking.front() << " error rate " << rates[d.ranking.front()] << '\n';
  return 0;
}

int cmd_bench(const Options& o) {
  const AuditConfig config = resolve_config(o);
  const AuditReport report = bootstrap_audit(config);
  emit_report(report, o.out);
  std::cout << "valid iterations " << report.valid_count << "/" << report.per_iteration.size()
            << "; mean precision@" << config.precision_k << " " << report.mean_precision_at_k
            << "; baseline " << report.mean_baseline_precision << '\n';
  return 0;
}

IdSet read_slice_file(const fs::path& path, int& slice_id) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open slice file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("ids") || !j["ids"].is_array()) {
    throw Error(path.string() + ": expected {\"slice_id\": int, \"ids\": [...]}");
  }
  slice_id = j.value("slice_id", 0);
  return j["ids"].get<IdSet>();
}

int cmd_explain(const Options& o) {
  const AuditConfig config = resolve_config(o);
  const Dataset dataset = load_dataset(o.manifest);
  int slice_id = 0;
  const IdSet ids = read_slice_file(o.slice_file, slice_id);
  if (ids.empty()) throw Error("slice file lists no ids");
  const auto tokens = token_table(config);
  const TfidfModel tfidf = fit_tfidf(build_docs(dataset, config.doc_source, config.stopword_set()));
  const TokenReport report = explain_slice(dataset, tfidf, ids, slice_id, config, tokens ? &*tokens : nullptr);
  make_dir(o.out);
  write_json(fs::path(o.out) / "explanation.json", to_json(report));
  for (const auto& e : report.entries) {
    std::cout << e.token << '\t' << e.ds;
    if (e.r_attr) std::cout << '\t' << *e.r_attr;
    std::cout << '\n';
  }
  return 0;
}

int cmd_synth(const Options& o) {
  const AuditConfig config = resolve_config(o);
  const SynthWorld world = synth_world(config.world, config.bias, config.base_seed);
  emit_dataset(world.test, fs::path(o.out) / "test");
  emit_dataset(world.train, fs::path(o.out) / "train");
  write_token_embeddings(world.token_table, fs::path(o.out) / "token_embeddings.csv");
  std::cout << "wrote " << world.test.size() << " test and " << world.train.size() << " train samples to " << o.out
            << " (realized " << to_string(config.bias.kind) << " = " << world.realized_bias << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-slice discovery and explanation for black-box classifiers"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Audit a dataset: discover, rank and explain error slices");
  run->add_option("--manifest", o.manifest, "Dataset manifest (JSON)")->required();
  run->add_option("--config", o.config, "Audit config (JSON)");
  run->add_option("--out", o.out, "Output directory")->required();
  run->add_option("--seed", o.seed, "Override base_seed");
  run->add_option("--token-embeddings", o.token_embeddings, "Token embedding table (CSV)");

  auto* bench = app.add_subcommand("bench", "Bootstrap protocol on the synthetic bias lab");
  bench->add_option("--config", o.config, "Audit config (JSON)");
  bench->add_option("--fixture", o.fixture, "Built-in fixture: spurious_correlation, rare_slice or noisy_label");
  bench->add_option("--out", o.out, "Output directory")->required();
  bench->add_option("--seed", o.seed, "Override base_seed");

  auto* explain = app.add_subcommand("explain", "Explain a given slice against its reference slice");
  explain->add_option("--manifest", o.manifest, "Dataset manifest (JSON)")->required();
  explain->add_option("--slice-file", o.slice_file, "JSON {\"slice_id\": int, \"ids\": [...]}")->required();
  explain->add_option("--out", o.out, "Output directory")->required();
  explain->add_option("--config", o.config, "Audit config (JSON)");
  explain->add_option("--token-embeddings", o.token_embeddings, "Token embedding table (CSV)");

  auto* synth = app.add_subcommand("synth", "Write one synthetic world as datasets on disk");
  synth->add_option("--config", o.config, "Audit config (JSON)");
  synth->add_option("--fixture", o.fixture, "Built-in fixture: spurious_correlation, rare_slice or noisy_label");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "World seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o);
    if (bench->parsed()) return cmd_bench(o);
    if (explain->parsed()) return cmd_explain(o);
    if (synth->parsed()) return cmd_synth(o);
  } catch (const std::exception& e) {
    std::cerr << "audit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
