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

#include "sliceaudit/biaslab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

#include "sliceaudit/random.hpp"

namespace sliceaudit {

using nlohmann::json;

BiasKind parse_bias_kind(const std::string& name) {
  if (name == "spurious_correlation") return BiasKind::spurious_correlation;
  if (name == "rare_slice") return BiasKind::rare_slice;
  if (name == "noisy_label") return BiasKind::noisy_label;
  throw Error("unknown bias kind '" + name + "'");
}

std::string to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::spurious_correlation:
      return "spurious_correlation";
    case BiasKind::rare_slice:
      return "rare_slice";
    case BiasKind::noisy_label:
      return "noisy_label";
  }
  return "noisy_label";
}

void BiasSpec::validate() const {
  if (target_class != 0 && target_class != 1) throw Error("bias.target_class must be 0 or 1");
  if (attr.empty()) throw Error("bias.attr must be set");
  switch (kind) {
    case BiasKind::spurious_correlation:
      if (!(strength > -1.0 && strength < 1.0)) throw Error("bias.strength (rho) must lie in (-1, 1)");
      break;
    case BiasKind::noisy_label:
      if (!(strength >= 0.0 && strength <= 1.0)) throw Error("bias.strength (noise rate) must lie in [0, 1]");
      break;
    case BiasKind::rare_slice:
      if (!(strength > 0.0 && strength <= 1.0)) throw Error("bias.strength (R) must lie in (0, 1]");
      break;
  }
  if (train_size < 2) throw Error("bias.train_size must be >= 2");
  if (test_size < 2) throw Error("bias.test_size must be >= 2");
  if (!(test_underperforming_fraction > 0.0 && test_underperforming_fraction < 1.0)) {
    throw Error("bias.test_underperforming_fraction must lie in (0, 1)");
  }
}

std::vector<std::string> SynthWorldSpec::attribute_names() const {
  std::vector<std::string> names;
  for (const auto& [name, token] : marker_tokens) names.push_back(name);
  for (std::size_t i = names.size(); i < n_attrs; ++i) names.push_back("attr" + std::to_string(i));
  return names;
}

void SynthWorldSpec::validate() const {
  if (n_attrs < marker_tokens.size()) throw Error("world.n_attrs is smaller than the number of marker tokens");
  if (n_attrs < 1) throw Error("world.n_attrs must be >= 1");
  if (dims.empty()) throw Error("world.dims must name at least one modality");
  for (const auto& [m, d] : dims) {
    if (d < 1) throw Error("world.dims['" + m + "'] must be >= 1");
  }
  if (!dims.contains(image_modality)) throw Error("world.image_modality '" + image_modality + "' not in dims");
  if (!(cluster_separation >= 0.0)) throw Error("world.cluster_separation must be >= 0");
  for (double e : {base_error, group_error}) {
    if (!(e >= 0.0 && e <= 1.0)) throw Error("world error rates must lie in [0, 1]");
  }
  if (!(group_error > base_error)) throw Error("world.group_error must exceed world.base_error");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw Error("world.positive_rate must lie in (0, 1)");
  for (const auto& [attr, token] : marker_tokens) {
    if (tokenize(token, {}) != std::vector<std::string>{token}) {
      throw Error("world.marker_tokens['" + attr + "'] is not a single normalized token");
    }
  }
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* block) {
  if (!j.is_object()) throw Error(std::string(block) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
      throw Error(std::string("unknown key '") + key + "' in " + block);
    }
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out, const char* block) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string(block) + "." + key + ": " + e.what());
  }
}

}  // namespace

json to_json(const BiasSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"target_class", s.target_class},
          {"attr", s.attr},
          {"strength", s.strength},
          {"train_size", s.train_size},
          {"test_size", s.test_size},
          {"test_underperforming_fraction", s.test_underperforming_fraction}};
}

BiasSpec bias_spec_from_json(const json& j) {
  reject_unknown(j, {"kind", "target_class", "attr", "strength", "train_size", "test_size",
                     "test_underperforming_fraction"}, "bias");
  BiasSpec s;
  std::string kind = to_string(s.kind);
  read_key(j, "kind", kind, "bias");
  s.kind = parse_bias_kind(kind);
  read_key(j, "target_class", s.target_class, "bias");
  read_key(j, "attr", s.attr, "bias");
  read_key(j, "strength", s.strength, "bias");
  read_key(j, "train_size", s.train_size, "bias");
  read_key(j, "test_size", s.test_size, "bias");
  read_key(j, "test_underperforming_fraction", s.test_underperforming_fraction, "bias");
  s.validate();
  return s;
}

json to_json(const SynthWorldSpec& s) {
  return {{"n_attrs", s.n_attrs},
          {"dims", s.dims},
          {"cluster_separation", s.cluster_separation},
          {"marker_tokens", s.marker_tokens},
          {"base_error", s.base_error},
          {"group_error", s.group_error},
          {"positive_rate", s.positive_rate},
          {"image_modality", s.image_modality}};
}

SynthWorldSpec world_spec_from_json(const json& j) {
  reject_unknown(j, {"n_attrs", "dims", "cluster_separation", "marker_tokens", "base_error", "group_error",
                     "positive_rate", "image_modality"}, "world");
  SynthWorldSpec s;
  read_key(j, "n_attrs", s.n_attrs, "world");
  read_key(j, "dims", s.dims, "world");
  read_key(j, "cluster_separation", s.cluster_separation, "world");
  read_key(j, "marker_tokens", s.marker_tokens, "world");
  read_key(j, "base_error", s.base_error, "world");
  read_key(j, "group_error", s.group_error, "world");
  read_key(j, "positive_rate", s.positive_rate, "world");
  read_key(j, "image_modality", s.image_modality, "world");
  s.validate();
  return s;
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

double phi_correlation(const BinaryVector& y, const BinaryVector& attr) {
  if (y.size() != attr.size()) throw Error("phi_correlation: length mismatch");
  require_binary(y, "y");
  require_binary(attr, "attr");
  double n[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < y.size(); ++i) n[y[i]][attr[i]] += 1.0;
  const double y1 = n[1][0] + n[1][1];
  const double y0 = n[0][0] + n[0][1];
  const double a1 = n[0][1] + n[1][1];
  const double a0 = n[0][0] + n[1][0];
  if (y1 == 0 || y0 == 0 || a1 == 0 || a0 == 0) throw Error("phi_correlation: zero variance");
  return (n[1][1] * n[0][0] - n[1][0] * n[0][1]) / std::sqrt(y1 * y0 * a1 * a0);
}

BinaryVector tag_vector(const Dataset& dataset, const std::string& tag) {
  BinaryVector out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    auto it = s.group_tags.find(tag);
    if (it == s.group_tags.end()) throw Error("sample '" + s.id + "' has no group tag '" + tag + "'");
    out.push_back(it->second);
  }
  return out;
}

namespace {

Dataset subset(const Dataset& pool, std::vector<std::size_t> rows, Rng& rng) {
  rng.shuffle(rows);
  Dataset out;
  out.modality_dims = pool.modality_dims;
  out.samples.reserve(rows.size());
  for (std::size_t r : rows) out.samples.push_back(pool.samples[r]);
  return out;
}

// Pool rows bucketed by (label != target_class, attr) or (label, attr).
using Cells = std::array<std::array<std::vector<std::size_t>, 2>, 2>;

Cells cells_by(const Dataset& pool, const BinaryVector& first, const BinaryVector& attr) {
  Cells cells;
  for (std::size_t i = 0; i < pool.size(); ++i) cells[first[i]][attr[i]].push_back(i);
  return cells;
}

void take(const std::vector<std::size_t>& from, std::size_t count, Rng& rng, std::vector<std::size_t>& into) {
  for (std::size_t k : rng.sample_indices(from.size(), count)) into.push_back(from[k]);
}

std::string infeasible(const char* what, const std::string& detail) {
  return std::string(what) + ": infeasible: " + detail;
}

}  // namespace

Dataset inject_spurious_correlation(const Dataset& pool, const BiasSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.kind != BiasKind::spurious_correlation) throw Error("inject_spurious_correlation: wrong bias kind");
  BinaryVector other_class(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) other_class[i] = pool.samples[i].label != spec.target_class;
  const Cells cells = cells_by(pool, other_class, tag_vector(pool, spec.attr));

  const std::size_t n = spec.train_size;
  const std::size_t n1 = n / 2;  // rows with label != target_class
  const std::size_t n0 = n - n1;
  const double rho = spec.strength;

  // Exhaustive search over the two free cells; tables within tolerance are
  // preferred, then balanced attribute marginals, then the closest phi.
  using Key = std::tuple<int, std::size_t, double, std::size_t, std::size_t>;
  std::optional<Key> best;
  for (std::size_t n11 = 0; n11 <= n1; ++n11) {
    const std::size_t n10 = n1 - n11;
    if (n11 > cells[1][1].size() || n10 > cells[1][0].size()) continue;
    for (std::size_t n01 = 0; n01 <= n0; ++n01) {
      const std::size_t n00 = n0 - n01;
      if (n01 > cells[0][1].size() || n00 > cells[0][0].size()) continue;
      const std::size_t a1 = n11 + n01;
      if (a1 == 0 || a1 == n) continue;
      const double phi = (static_cast<double>(n11) * static_cast<double>(n00) -
                          static_cast<double>(n10) * static_cast<double>(n01)) /
                         std::sqrt(static_cast<double>(n1) * static_cast<double>(n0) * static_cast<double>(a1) *
                                   static_cast<double>(n - a1));
      const double miss = std::abs(phi - rho);
      const std::size_t imbalance = a1 > n / 2 ? a1 - n / 2 : n / 2 - a1;
      const Key key{miss > 0.05 ? 1 : 0, imbalance, miss, n11, n01};
      if (!best || key < *best) best = key;
    }
  }
  if (!best || std::get<0>(*best) != 0) {
    throw Error(infeasible("inject_spurious_correlation", "pool cannot realize phi within 0.05 of target"));
  }
  const std::size_t n11 = std::get<3>(*best);
  const std::size_t n01 = std::get<4>(*best);

  Rng rng(seed);
  std::vector<std::size_t> rows;
  take(cells[1][1], n11, rng, rows);
  take(cells[1][0], n1 - n11, rng, rows);
  take(cells[0][1], n01, rng, rows);
  take(cells[0][0], n0 - n01, rng, rows);
  return subset(pool, std::move(rows), rng);
}

Dataset inject_rare_slice(const Dataset& pool, const BiasSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.kind != BiasKind::rare_slice) throw Error("inject_rare_slice: wrong bias kind");
  const Cells cells = cells_by(pool, pool.labels(), tag_vector(pool, spec.attr));
  const int y = spec.target_class;
  if (cells[y][1].empty()) throw Error(infeasible("inject_rare_slice", "pool has no samples in the target cell"));

  const std::size_t class_size = spec.train_size / 2;
  const std::size_t rare = round_half_up(spec.strength * static_cast<double>(class_size));
  if (rare == 0) throw Error(infeasible("inject_rare_slice", "R rounds to zero samples"));
  const std::size_t common = class_size - rare;
  const std::size_t other = spec.train_size - class_size;
  const std::size_t other_available = cells[1 - y][0].size() + cells[1 - y][1].size();
  if (rare > cells[y][1].size() || common > cells[y][0].size() || other > other_available) {
    throw Error(infeasible("inject_rare_slice", "pool too small for the requested table"));
  }

  Rng rng(seed);
  std::vector<std::size_t> rows;
  take(cells[y][1], rare, rng, rows);
  take(cells[y][0], common, rng, rows);
  std::vector<std::size_t> other_rows = cells[1 - y][0];
  other_rows.insert(other_rows.end(), cells[1 - y][1].begin(), cells[1 - y][1].end());
  std::sort(other_rows.begin(), other_rows.end());
  take(other_rows, other, rng, rows);
  return subset(pool, std::move(rows), rng);
}

Dataset inject_label_noise(const Dataset& dataset, const BiasSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.kind != BiasKind::noisy_label) throw Error("inject_label_noise: wrong bias kind");
  const BinaryVector attr = tag_vector(dataset, spec.attr);
  std::vector<std::size_t> group;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].label == spec.target_class && attr[i] == 1) group.push_back(i);
  }
  if (group.empty()) throw Error("inject_label_noise: target group is empty");

  Dataset out = dataset;
  const std::size_t flips = round_half_up(spec.strength * static_cast<double>(group.size()));
  Rng rng(seed);
  for (std::size_t k : rng.sample_indices(group.size(), flips)) {
    Sample& s = out.samples[group[k]];
    s.label = 1 - s.label;
    s.group_tags["flipped"] = 1;
  }
  return out;
}

double realized_correlation(const Dataset& dataset, const BiasSpec& spec) {
  BinaryVector other_class(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) other_class[i] = dataset.samples[i].label != spec.target_class;
  return phi_correlation(other_class, tag_vector(dataset, spec.attr));
}

double realized_noise_rate(const Dataset& dataset, const BiasSpec& spec) {
  const BinaryVector attr = tag_vector(dataset, spec.attr);
  std::size_t group = 0;
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sample& s = dataset.samples[i];
    auto it = s.group_tags.find("flipped");
    const bool was_flipped = it != s.group_tags.end() && it->second == 1;
    const int original = was_flipped ? 1 - s.label : s.label;
    if (original == spec.target_class && attr[i] == 1) {
      ++group;
      flipped += was_flipped ? 1 : 0;
    }
  }
  if (group == 0) throw Error("realized_noise_rate: target group is empty");
  return static_cast<double>(flipped) / static_cast<double>(group);
}

double realized_rarity(const Dataset& dataset, const BiasSpec& spec) {
  const BinaryVector attr = tag_vector(dataset, spec.attr);
  std::size_t cls = 0;
  std::size_t cell = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].label != spec.target_class) continue;
    ++cls;
    cell += static_cast<std::size_t>(attr[i]);
  }
  if (cls == 0) throw Error("realized_rarity: target class is empty");
  return static_cast<double>(cell) / static_cast<double>(cls);
}

double realized_bias(const Dataset& dataset, const BiasSpec& spec) {
  switch (spec.kind) {
    case BiasKind::spurious_correlation:
      return realized_correlation(dataset, spec);
    case BiasKind::rare_slice:
      return realized_rarity(dataset, spec);
    case BiasKind::noisy_label:
      return realized_noise_rate(dataset, spec);
  }
  return 0.0;
}

namespace {

const std::vector<std::string>& filler_tokens() {
  static const std::vector<std::string> words = {
      "normal",  "lung",      "heart",   "size",   "chest",       "stable",   "mild",
      "volume",  "silhouette", "contour", "pleural", "mediastinal", "basilar", "atelectasis",
      "hilar",   "unchanged",
  };
  return words;
}

constexpr const char* kPositiveToken = "opacity";
constexpr const char* kNegativeToken = "unremarkable";

std::vector<double> unit_gaussian(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
  return v;
}

class WorldGenerator {
 public:
  WorldGenerator(const SynthWorldSpec& world, const BiasSpec& bias, std::uint64_t seed)
      : world_(world), bias_(bias), attrs_(world.attribute_names()), rng_(mix_seed(seed, 1)) {
    auto it = std::find(attrs_.begin(), attrs_.end(), bias.attr);
    if (it == attrs_.end()) throw Error("synth_world: bias.attr '" + bias.attr + "' is not a world attribute");
    bias_attr_ = static_cast<std::size_t>(it - attrs_.begin());

    Rng dirs(mix_seed(seed, 0));
    for (const auto& [m, d] : world.dims) {
      class_dir_[m] = unit_gaussian(d, dirs);
      for (std::size_t a = 0; a < attrs_.size(); ++a) attr_dir_[m].push_back(unit_gaussian(d, dirs));
    }
    build_token_table(dirs);
  }

  const TokenEmbeddingTable& token_table() const { return tokens_; }

  Sample make(const std::string& id, int label, std::vector<int> attrs) {
    Sample s;
    s.id = id;
    s.label = label;
    const double sep = world_.cluster_separation;
    for (const auto& [m, d] : world_.dims) {
      std::vector<double> v(d);
      for (std::size_t c = 0; c < d; ++c) {
        double center = sep * (label - 0.5) * class_dir_[m][c];
        for (std::size_t a = 0; a < attrs.size(); ++a) center += sep * (attrs[a] - 0.5) * attr_dir_[m][a][c];
        v[c] = center + rng_.normal();
      }
      s.views.emplace(m, std::move(v));
    }

    std::vector<std::string> words;
    const std::size_t n_filler = 4 + rng_.below(5);
    for (std::size_t k = 0; k < n_filler; ++k) words.push_back(filler_tokens()[rng_.below(filler_tokens().size())]);
    if (rng_.bernoulli(0.6)) words.emplace_back(label == 1 ? kPositiveToken : kNegativeToken);
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      auto marker = world_.marker_tokens.find(attrs_[a]);
      if (attrs[a] == 1 && marker != world_.marker_tokens.end()) words.push_back(marker->second);
    }
    rng_.shuffle(words);
    std::string text = "There is";
    for (const auto& w : words) text += " " + w;
    s.report_text = text + ".";

    for (std::size_t a = 0; a < attrs.size(); ++a) s.group_tags[attrs_[a]] = attrs[a];
    const bool planted = label == bias_.target_class && attrs[bias_attr_] == 1;
    s.group_tags["planted"] = planted ? 1 : 0;
    const double error = planted ? world_.group_error : world_.base_error;
    s.prediction = rng_.bernoulli(error) ? 1 - label : label;
    return s;
  }

  std::vector<int> random_attrs() {
    std::vector<int> a(attrs_.size());
    for (int& v : a) v = rng_.bernoulli(0.5) ? 1 : 0;
    return a;
  }

  std::size_t bias_attr() const { return bias_attr_; }
  Rng& rng() { return rng_; }

 private:
  void build_token_table(Rng& dirs) {
    const auto dim = world_.dims.at(world_.image_modality);
    tokens_.dim = dim;
    // Attribute and class tokens point along the directions that encode
    // them in image space; filler tokens are unrelated.
    auto aligned = [&](const std::vector<double>& dir) {
      std::vector<double> noise = unit_gaussian(dim, dirs);
      std::vector<double> v(dim);
      for (std::size_t c = 0; c < dim; ++c) v[c] = dir[c] + 0.25 * noise[c];
      return v;
    };
    const auto& img = world_.image_modality;
    for (std::size_t a = 0; a < attrs_.size(); ++a) {
      auto marker = world_.marker_tokens.find(attrs_[a]);
      if (marker != world_.marker_tokens.end()) tokens_.vectors[marker->second] = aligned(attr_dir_[img][a]);
    }
    tokens_.vectors[kPositiveToken] = aligned(class_dir_[img]);
    std::vector<double> neg = class_dir_[img];
    for (double& x : neg) x = -x;
    tokens_.vectors[kNegativeToken] = aligned(neg);
    for (const auto& w : filler_tokens()) {
      if (!tokens_.vectors.contains(w)) tokens_.vectors[w] = unit_gaussian(dim, dirs);
    }
  }

  const SynthWorldSpec& world_;
  const BiasSpec& bias_;
  std::vector<std::string> attrs_;
  std::size_t bias_attr_ = 0;
  Rng rng_;
  std::map<std::string, std::vector<double>> class_dir_;
  std::map<std::string, std::vector<std::vector<double>>> attr_dir_;
  TokenEmbeddingTable tokens_;
};

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05zu", prefix, i);
  return buf;
}

}  // namespace

SynthWorld synth_world(const SynthWorldSpec& world, const BiasSpec& bias, std::uint64_t seed) {
  world.validate();
  bias.validate();
  WorldGenerator gen(world, bias, seed);

  const std::size_t planted = round_half_up(bias.test_underperforming_fraction * static_cast<double>(bias.test_size));
  if (planted == 0 || planted >= bias.test_size) {
    throw Error("synth_world: infeasible sizes: " + std::to_string(planted) + " planted samples in a test set of " +
                std::to_string(bias.test_size));
  }

  SynthWorld out;
  out.token_table = gen.token_table();

  // Test set: exact planted count; everything else avoids the planted cell.
  std::vector<Sample> test;
  for (std::size_t i = 0; i < bias.test_size; ++i) {
    std::vector<int> attrs = gen.random_attrs();
    int label;
    if (i < planted) {
      label = bias.target_class;
      attrs[gen.bias_attr()] = 1;
    } else {
      label = gen.rng().bernoulli(world.positive_rate) ? 1 : 0;
      if (label == bias.target_class) attrs[gen.bias_attr()] = 0;
    }
    test.push_back(gen.make("", label, std::move(attrs)));
  }
  gen.rng().shuffle(test);
  for (std::size_t i = 0; i < test.size(); ++i) test[i].id = numbered("test", i);
  out.test.samples = std::move(test);
  out.test.modality_dims = world.dims;

  // Training pool with independent attributes; the injector shapes it.
  Dataset pool;
  pool.modality_dims = world.dims;
  const std::size_t pool_size = 4 * bias.train_size;
  for (std::size_t i = 0; i < pool_size; ++i) {
    const int label = static_cast<int>(i % 2);
    pool.samples.push_back(gen.make(numbered("train", i), label, gen.random_attrs()));
  }
  const std::uint64_t inject_seed = mix_seed(seed, 2);
  switch (bias.kind) {
    case BiasKind::spurious_correlation:
      out.train = inject_spurious_correlation(pool, bias, inject_seed);
      break;
    case BiasKind::rare_slice:
      out.train = inject_rare_slice(pool, bias, inject_seed);
      break;
    case BiasKind::noisy_label: {
      Rng pick(inject_seed);
      std::vector<std::size_t> rows = pick.sample_indices(pool.size(), bias.train_size);
      std::sort(rows.begin(), rows.end());
      Dataset sampled;
      sampled.modality_dims = pool.modality_dims;
      for (std::size_t r : rows) sampled.samples.push_back(pool.samples[r]);
      out.train = inject_label_noise(sampled, bias, mix_seed(inject_seed, 1));
      break;
    }
  }
  out.realized_bias = realized_bias(out.train, bias);
  return out;
}

double accuracy_gap(const Dataset& dataset, const std::string& attr) {
  const BinaryVector tags = tag_vector(dataset, attr);
  std::size_t total[2] = {0, 0};
  std::size_t correct[2] = {0, 0};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    ++total[tags[i]];
    correct[tags[i]] += dataset.samples[i].misclassified() ? 0 : 1;
  }
  if (total[0] == 0 || total[1] == 0) return 0.0;
  return static_cast<double>(correct[0]) / static_cast<double>(total[0]) -
         static_cast<double>(correct[1]) / static_cast<double>(total[1]);
}

bool validity_check(const Dataset& dataset, const std::string& attr) {
  return accuracy_gap(dataset, attr) >= 0.10 - 1e-9;
}

}  // namespace sliceaudit
