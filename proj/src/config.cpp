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

#include "sliceaudit/config.hpp"

#include <algorithm>
#include <fstream>

namespace sliceaudit {

using nlohmann::json;

DiscoveryMode parse_mode(const std::string& name) {
  if (name == "domino") return DiscoveryMode::domino;
  if (name == "error_only") return DiscoveryMode::error_only;
  throw Error("unknown mode '" + name + "' (expected domino or error_only)");
}

std::string to_string(DiscoveryMode mode) { return mode == DiscoveryMode::domino ? "domino" : "error_only"; }

FitOptions AuditConfig::fit_options() const {
  FitOptions opts;
  opts.max_iters = max_iters;
  opts.tol = tol;
  opts.n_init = n_init;
  return opts;
}

std::set<std::string> AuditConfig::stopword_set() const {
  std::set<std::string> words = default_stopwords();
  for (const auto& w : stopwords) {
    for (auto& t : tokenize(w, {})) words.insert(std::move(t));
  }
  return words;
}

void AuditConfig::validate() const {
  if (pca_components < 1) throw Error("pca_components must be >= 1");
  if (k_slices < 1) throw Error("k_slices must be >= 1");
  if (!(gamma >= 0.0)) throw Error("gamma must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("beta must lie in [0, 1)");
  if (max_iters < 0) throw Error("max_iters must be >= 0");
  if (!(tol >= 0.0)) throw Error("tol must be >= 0");
  if (n_init < 1) throw Error("n_init must be >= 1");
  if (top_n < 1) throw Error("top_n must be >= 1");
  if (precision_k < 1) throw Error("precision_k must be >= 1");
  if (iterations < 1) throw Error("iterations must be >= 1");
  if (threads < 0) throw Error("threads must be >= 0");
  std::set<std::string> seen;
  for (const auto& m : modalities) {
    if (!seen.insert(m).second) throw Error("modality '" + m + "' listed twice");
  }
}

json to_json(const AuditConfig& c) {
  return {
      {"modalities", c.modalities},
      {"pca_components", c.pca_components},
      {"standardize", c.standardize},
      {"k_slices", c.k_slices},
      {"gamma", c.gamma},
      {"beta", c.beta},
      {"max_iters", c.max_iters},
      {"tol", c.tol},
      {"n_init", c.n_init},
      {"mode", to_string(c.mode)},
      {"top_n", c.top_n},
      {"doc_source", to_string(c.doc_source)},
      {"stopwords", c.stopwords},
      {"image_modality", c.image_modality},
      {"token_embeddings", c.token_embeddings ? json(*c.token_embeddings) : json(nullptr)},
      {"precision_k", c.precision_k},
      {"iterations", c.iterations},
      {"base_seed", c.base_seed},
      {"threads", c.threads},
      {"bias", to_json(c.bias)},
      {"world", to_json(c.world)},
  };
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("config.") + key + ": " + e.what());
  }
}

}  // namespace

AuditConfig config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "modalities", "pca_components", "standardize", "k_slices",      "gamma",          "beta",
      "max_iters",  "tol",            "n_init",      "mode",          "top_n",          "doc_source",
      "stopwords",  "image_modality", "token_embeddings", "precision_k", "iterations",  "base_seed",
      "threads",    "bias",           "world",
  };
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error("unknown config key '" + key + "'");
  }

  AuditConfig c;
  read(j, "modalities", c.modalities);
  read(j, "pca_components", c.pca_components);
  read(j, "standardize", c.standardize);
  read(j, "k_slices", c.k_slices);
  read(j, "gamma", c.gamma);
  read(j, "beta", c.beta);
  read(j, "max_iters", c.max_iters);
  read(j, "tol", c.tol);
  read(j, "n_init", c.n_init);
  std::string mode = to_string(c.mode);
  read(j, "mode", mode);
  c.mode = parse_mode(mode);
  read(j, "top_n", c.top_n);
  std::string doc_source = to_string(c.doc_source);
  read(j, "doc_source", doc_source);
  c.doc_source = parse_doc_source(doc_source);
  read(j, "stopwords", c.stopwords);
  read(j, "image_modality", c.image_modality);
  if (j.contains("token_embeddings") && !j["token_embeddings"].is_null()) {
    c.token_embeddings = j["token_embeddings"].get<std::string>();
  }
  read(j, "precision_k", c.precision_k);
  read(j, "iterations", c.iterations);
  read(j, "base_seed", c.base_seed);
  read(j, "threads", c.threads);
  if (j.contains("bias")) c.bias = bias_spec_from_json(j["bias"]);
  if (j.contains("world")) c.world = world_spec_from_json(j["world"]);
  c.validate();
  return c;
}

AuditConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  AuditConfig c = config_from_json(j);
  if (c.token_embeddings) {
    std::filesystem::path p(*c.token_embeddings);
    if (p.is_relative()) c.token_embeddings = (path.parent_path() / p).string();
  }
  return c;
}

AuditConfig fixture_config(BiasKind kind) {
  AuditConfig c;
  c.world.marker_tokens = {{"device", "tube"}, {"frontal", "portable"}, {"lateral", "lateral"}};
  c.world.n_attrs = 3;
  c.world.positive_rate = 0.2;
  c.bias.kind = kind;
  c.bias.target_class = 1;
  switch (kind) {
    case BiasKind::spurious_correlation:
      c.bias.attr = "device";
      c.bias.strength = 0.7;
      break;
    case BiasKind::rare_slice:
      c.bias.attr = "lateral";
      c.bias.strength = 0.02;
      break;
    case BiasKind::noisy_label:
      c.bias.attr = "frontal";
      c.bias.strength = 0.3;
      break;
  }
  c.validate();
  return c;
}

}  // namespace sliceaudit
