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

// Synthetic bias laboratory: generates multimodal worlds with a planted
// underperforming group, injects the three training-set biases, and
// measures them back.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sliceaudit/common.hpp"
#include "sliceaudit/explain.hpp"
#include "sliceaudit/ingest.hpp"

namespace sliceaudit {

enum class BiasKind { spurious_correlation, rare_slice, noisy_label };

BiasKind parse_bias_kind(const std::string& name);
std::string to_string(BiasKind kind);

// The underperforming group is (label == target_class, attr == 1).
struct BiasSpec {
  BiasKind kind = BiasKind::noisy_label;
  int target_class = 1;
  std::string attr;
  // Correlation rho, noise rate or rarity R depending on kind.
  double strength = 0.3;
  std::size_t train_size = 1000;
  std::size_t test_size = 300;
  double test_underperforming_fraction = 0.2;

  void validate() const;
};

struct SynthWorldSpec {
  std::size_t n_attrs = 3;
  std::map<std::string, std::size_t> dims{{"img", 32}, {"meta", 8}, {"txt", 16}};
  double cluster_separation = 3.0;
  // Named attributes and the report token each one plants. Attributes
  // beyond these are named attr<i> and plant no token.
  std::map<std::string, std::string> marker_tokens;
  double base_error = 0.05;
  double group_error = 0.6;
  // Share of label 1 among test samples outside the planted group.
  double positive_rate = 0.5;
  // Modality whose vectors the token table is aligned with.
  std::string image_modality = "img";

  std::vector<std::string> attribute_names() const;
  void validate() const;
};

nlohmann::json to_json(const BiasSpec& spec);
BiasSpec bias_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthWorldSpec& spec);
SynthWorldSpec world_spec_from_json(const nlohmann::json& j);

// floor(x + 0.5)
std::size_t round_half_up(double x);

/// Pearson correlation of two binary vectors, evaluated from the 2x2 table:
/// (n11 n00 - n10 n01) / sqrt(n1. n0. n.1 n.0). Throws Error("zero
/// variance") if either vector is constant.
double phi_correlation(const BinaryVector& y, const BinaryVector& attr);

// Binary tag vector; throws if any sample lacks the tag.
BinaryVector tag_vector(const Dataset& dataset, const std::string& tag);

/// Subsample of `pool` (train_size rows, balanced between target and
/// non-target class) in which phi(label != target_class, attr) lands within
/// 0.05 of spec.strength. The 2x2 cell counts are the feasible integer
/// table closest to the target with the most balanced attribute marginal.
Dataset inject_spurious_correlation(const Dataset& pool, const BiasSpec& spec, std::uint64_t seed);

/// Subsample with round(R * |D_Y|) samples in the (target_class, attr=1)
/// cell, where |D_Y| = train_size / 2; the rest of class Y has attr=0 and
/// the other class is drawn at random from the pool.
Dataset inject_rare_slice(const Dataset& pool, const BiasSpec& spec, std::uint64_t seed);

/// Flips exactly round(rate * |group|) labels chosen at random inside the
/// (target_class, attr=1) group and tags them "flipped" = 1. Nothing else
/// changes.
Dataset inject_label_noise(const Dataset& dataset, const BiasSpec& spec, std::uint64_t seed);

// The injected quantity measured back on a dataset.
double realized_correlation(const Dataset& dataset, const BiasSpec& spec);
double realized_noise_rate(const Dataset& dataset, const BiasSpec& spec);
double realized_rarity(const Dataset& dataset, const BiasSpec& spec);
double realized_bias(const Dataset& dataset, const BiasSpec& spec);

struct SynthWorld {
  Dataset train;
  Dataset test;
  // Text-side vectors for every report token, in the image modality's space.
  TokenEmbeddingTable token_table;
  double realized_bias = 0.0;
};

/// Generates a biased training set and a test set with exactly
/// round(test_underperforming_fraction * test_size) planted-group samples,
/// shuffled. Predictions are simulated: a planted-group sample is
/// misclassified with probability group_error, any other with base_error.
/// Test samples carry every attribute plus "planted" in group_tags.
SynthWorld synth_world(const SynthWorldSpec& world, const BiasSpec& bias, std::uint64_t seed);

// accuracy(attr = 0) - accuracy(attr = 1).
double accuracy_gap(const Dataset& dataset, const std::string& attr);

// True iff accuracy_gap >= 0.10.
bool validity_check(const Dataset& dataset, const std::string& attr);

}  // namespace sliceaudit
