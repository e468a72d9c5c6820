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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "oracles/stats_oracle.hpp"
#include "sliceaudit/biaslab.hpp"
#include "sliceaudit/config.hpp"
#include "sliceaudit/random.hpp"

using namespace sliceaudit;

namespace {

// Rate after rounding the flip count for the train group.
double expected_noise_rate(const Dataset& train, const BiasSpec& b) {
  std::size_t group = 0;
  for (const auto& s : train.samples) {
    const bool flipped = s.group_tags.count("flipped") == 1;
    const int original = flipped ? 1 - s.label : s.label;
    group += (original == b.target_class && s.group_tags.at(b.attr) == 1) ? 1 : 0;
  }
  return static_cast<double>(round_half_up(b.strength * static_cast<double>(group))) / static_cast<double>(group);
}

// Pool with alternating labels and iid attributes; views carry the row
// number so tests can see that vectors are never altered.
Dataset make_pool(std::size_t n, std::uint64_t seed, double attr_rate = 0.5) {
  Rng rng(seed);
  Dataset d;
  d.modality_dims = {{"img", 2}};
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = "p" + std::to_string(i);
    s.views["img"] = {static_cast<double>(i), rng.normal()};
    s.label = static_cast<int>(i % 2);
    s.prediction = s.label;
    s.group_tags["device"] = rng.bernoulli(attr_rate) ? 1 : 0;
    d.samples.push_back(s);
  }
  return d;
}

BiasSpec spec(BiasKind kind, double strength, std::size_t train_size = 1000) {
  BiasSpec b;
  b.kind = kind;
  b.attr = "device";
  b.strength = strength;
  b.train_size = train_size;
  return b;
}

std::array<std::size_t, 4> other_class_table(const Dataset& d, int target) {
  std::array<std::size_t, 4> t{0, 0, 0, 0};  // n11, n10, n01, n00 over (label != target, attr)
  for (const auto& s : d.samples) {
    const int a = s.label != target ? 1 : 0;
    const int b = s.group_tags.at("device");
    t[static_cast<std::size_t>((1 - a) * 2 + (1 - b))]++;
  }
  return t;
}

void check_unaltered(const Dataset& out, const Dataset& pool) {
  const auto index = pool.index();
  std::set<std::string> ids;
  for (const auto& s : out.samples) {
    CHECK(ids.insert(s.id).second);
    const auto it = index.find(s.id);
    REQUIRE(it != index.end());
    CHECK(s.views == pool.samples[it->second].views);
  }
}

}  // namespace

TEST_CASE("phi_correlation examples") {
  CHECK(phi_correlation({0, 1, 0, 1}, {0, 1, 0, 1}) == doctest::Approx(1.0));
  CHECK(phi_correlation({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
  BinaryVector y, a;
  auto add = [&](int yy, int aa, int count) {
    for (int i = 0; i < count; ++i) {
      y.push_back(yy);
      a.push_back(aa);
    }
  };
  add(1, 1, 35);
  add(1, 0, 15);
  add(0, 1, 15);
  add(0, 0, 35);
  CHECK(phi_correlation(y, a) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK_THROWS_WITH(phi_correlation({1, 1, 1}, {0, 1, 0}), doctest::Contains("zero variance"));
  CHECK_THROWS_WITH(phi_correlation({0, 1, 0}, {0, 0, 0}), doctest::Contains("zero variance"));
  CHECK_THROWS_AS(phi_correlation({0, 1}, {0, 1, 1}), Error);
}

TEST_CASE("phi_correlation equals Pearson correlation") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    BinaryVector y(200), a(200);
    for (std::size_t i = 0; i < 200; ++i) {
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
      a[i] = rng.bernoulli(y[i] ? 0.7 : 0.3) ? 1 : 0;
    }
    CHECK(std::abs(phi_correlation(y, a) - oracle::pearson(y, a)) < 1e-12);
  }
}

TEST_CASE("spurious correlation injector") {
  const Dataset pool = make_pool(4000, 1);

  SUBCASE("paper setting rho = 0.7") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const BiasSpec b = spec(BiasKind::spurious_correlation, 0.7);
      const Dataset out = inject_spurious_correlation(pool, b, seed);
      CHECK(out.size() == 1000);
      const double phi = realized_correlation(out, b);
      CHECK(phi >= 0.65);
      CHECK(phi <= 0.75);
      const auto t = other_class_table(out, 1);
      CHECK(t[0] + t[1] == 500);
      check_unaltered(out, pool);
    }
  }
  SUBCASE("strength 0 samples independently") {
    const BiasSpec b = spec(BiasKind::spurious_correlation, 0.0);
    CHECK(std::abs(realized_correlation(inject_spurious_correlation(pool, b, 3), b)) <= 0.05);
  }
  SUBCASE("strength 0.4 on 200 rows gives the 70/30/30/70 table") {
    const BiasSpec b = spec(BiasKind::spurious_correlation, 0.4, 200);
    const Dataset out = inject_spurious_correlation(pool, b, 0);
    CHECK(other_class_table(out, 1) == std::array<std::size_t, 4>{70, 30, 30, 70});
    CHECK(realized_correlation(out, b) == doctest::Approx(0.4).epsilon(1e-15));
  }
  SUBCASE("negative correlation") {
    const BiasSpec b = spec(BiasKind::spurious_correlation, -0.5);
    CHECK(std::abs(realized_correlation(inject_spurious_correlation(pool, b, 0), b) + 0.5) <= 0.05);
  }
  SUBCASE("deterministic") {
    const BiasSpec b = spec(BiasKind::spurious_correlation, 0.7);
    CHECK(inject_spurious_correlation(pool, b, 9) == inject_spurious_correlation(pool, b, 9));
  }
  SUBCASE("infeasible target") {
    const Dataset tiny = make_pool(100, 2);
    CHECK_THROWS_WITH(inject_spurious_correlation(tiny, spec(BiasKind::spurious_correlation, 0.9, 100), 0),
                      doctest::Contains("infeasible"));
  }
}

TEST_CASE("rare slice injector") {
  const Dataset pool = make_pool(4000, 5);
  SUBCASE("R = 0.02 with 500 target-class rows gives exactly 10") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const BiasSpec b = spec(BiasKind::rare_slice, 0.02);
      const Dataset out = inject_rare_slice(pool, b, seed);
      std::size_t cls = 0, cell = 0;
      for (const auto& s : out.samples) {
        if (s.label != 1) continue;
        ++cls;
        cell += static_cast<std::size_t>(s.group_tags.at("device"));
      }
      CHECK(cls == 500);
      CHECK(cell == 10);
      CHECK(realized_rarity(out, b) == 0.02);
      check_unaltered(out, pool);
    }
  }
  SUBCASE("R = 1 keeps only attribute rows in the class") {
    const BiasSpec b = spec(BiasKind::rare_slice, 1.0, 400);
    const Dataset out = inject_rare_slice(pool, b, 0);
    for (const auto& s : out.samples) {
      if (s.label == 1) CHECK(s.group_tags.at("device") == 1);
    }
    CHECK(realized_rarity(out, b) == 1.0);
  }
  SUBCASE("R = 0.5 gives an exact half share") {
    const BiasSpec b = spec(BiasKind::rare_slice, 0.5);
    CHECK(realized_rarity(inject_rare_slice(pool, b, 0), b) == 0.5);
  }
  SUBCASE("infeasible") {
    Dataset no_cell = pool;
    for (auto& s : no_cell.samples) {
      if (s.label == 1) s.group_tags["device"] = 0;
    }
    CHECK_THROWS_AS(inject_rare_slice(no_cell, spec(BiasKind::rare_slice, 0.02), 0), Error);
    CHECK_THROWS_AS(inject_rare_slice(make_pool(200, 1), spec(BiasKind::rare_slice, 0.02), 0), Error);
    CHECK_THROWS_AS(inject_rare_slice(pool, spec(BiasKind::rare_slice, 0.0005), 0), Error);
  }
  SUBCASE("deterministic") {
    const BiasSpec b = spec(BiasKind::rare_slice, 0.02);
    CHECK(inject_rare_slice(pool, b, 4) == inject_rare_slice(pool, b, 4));
  }
}

TEST_CASE("label noise injector") {
  // 100-row target group: label 1 with device 1.
  Dataset d = make_pool(400, 7, 0.0);
  std::size_t group = 0;
  for (auto& s : d.samples) {
    if (s.label == 1 && group < 100) {
      s.group_tags["device"] = 1;
      ++group;
    }
  }
  REQUIRE(group == 100);

  SUBCASE("rate 0.3 flips exactly 30") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const BiasSpec b = spec(BiasKind::noisy_label, 0.3);
      const Dataset out = inject_label_noise(d, b, seed);
      std::size_t flipped = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const Sample& before = d.samples[i];
        const Sample& after = out.samples[i];
        CHECK(after.views == before.views);
        CHECK(after.id == before.id);
        const bool tag = after.group_tags.count("flipped") == 1;
        if (after.label != before.label) {
          ++flipped;
          CHECK(tag);
          CHECK(before.label == 1);
          CHECK(before.group_tags.at("device") == 1);
        } else {
          CHECK_FALSE(tag);
          CHECK(after == before);
        }
      }
      CHECK(flipped == 30);
      CHECK(realized_noise_rate(out, b) == 0.3);
    }
  }
  SUBCASE("rate 0 leaves the dataset unchanged") {
    CHECK(inject_label_noise(d, spec(BiasKind::noisy_label, 0.0), 1) == d);
  }
  SUBCASE("rate 1 flips the whole group") {
    const BiasSpec b = spec(BiasKind::noisy_label, 1.0);
    CHECK(realized_noise_rate(inject_label_noise(d, b, 1), b) == 1.0);
  }
  SUBCASE("round half up") {
    Dataset small = d;
    std::size_t kept = 0;
    for (auto& s : small.samples) {
      if (s.group_tags.at("device") == 1 && kept++ >= 5) s.group_tags["device"] = 0;
    }
    // 0.3 * 5 = 1.5 -> 2 flips.
    const Dataset out = inject_label_noise(small, spec(BiasKind::noisy_label, 0.3), 2);
    std::size_t flips = 0;
    for (const auto& s : out.samples) flips += s.group_tags.count("flipped");
    CHECK(flips == 2);
    CHECK(round_half_up(2.5) == 3);
    CHECK(round_half_up(2.4999) == 2);
  }
  SUBCASE("empty group") {
    Dataset none = d;
    for (auto& s : none.samples) s.group_tags["device"] = 0;
    CHECK_THROWS_AS(inject_label_noise(none, spec(BiasKind::noisy_label, 0.3), 0), Error);
  }
  SUBCASE("deterministic") {
    const BiasSpec b = spec(BiasKind::noisy_label, 0.3);
    CHECK(inject_label_noise(d, b, 11) == inject_label_noise(d, b, 11));
  }
}

TEST_CASE("BiasSpec and SynthWorldSpec validation and JSON") {
  CHECK_THROWS_AS(spec(BiasKind::spurious_correlation, 1.0).validate(), Error);
  CHECK_THROWS_AS(spec(BiasKind::spurious_correlation, -1.0).validate(), Error);
  CHECK_THROWS_AS(spec(BiasKind::noisy_label, 1.2).validate(), Error);
  CHECK_THROWS_AS(spec(BiasKind::rare_slice, 0.0).validate(), Error);
  CHECK_NOTHROW(spec(BiasKind::rare_slice, 1.0).validate());
  BiasSpec frac = spec(BiasKind::noisy_label, 0.3);
  frac.test_underperforming_fraction = 1.0;
  CHECK_THROWS_AS(frac.validate(), Error);

  const BiasSpec b = spec(BiasKind::rare_slice, 0.02);
  const BiasSpec back = bias_spec_from_json(to_json(b));
  CHECK(to_json(back) == to_json(b));
  auto j = to_json(b);
  j["unexpected"] = 1;
  CHECK_THROWS_AS(bias_spec_from_json(j), Error);
  CHECK(parse_bias_kind("noisy_label") == BiasKind::noisy_label);
  CHECK_THROWS_AS(parse_bias_kind("noise"), Error);

  SynthWorldSpec w;
  w.marker_tokens = {{"device", "tube"}};
  CHECK(to_json(world_spec_from_json(to_json(w))) == to_json(w));
  SynthWorldSpec flat = w;
  flat.group_error = flat.base_error;
  CHECK_THROWS_AS(flat.validate(), Error);
  SynthWorldSpec bad_token = w;
  bad_token.marker_tokens["device"] = "Two Words";
  CHECK_THROWS_AS(bad_token.validate(), Error);
  CHECK(w.attribute_names() == std::vector<std::string>{"device", "attr1", "attr2"});
}

TEST_CASE("synth_world structure") {
  const AuditConfig c = fixture_config(BiasKind::noisy_label);
  const SynthWorld w = synth_world(c.world, c.bias, 3);
  CHECK(w.test.size() == 300);
  CHECK(w.train.size() == 1000);
  CHECK_NOTHROW(validate(w.test));
  CHECK_NOTHROW(validate(w.train));
  std::set<std::string> test_ids;
  for (const auto& s : w.test.samples) test_ids.insert(s.id);
  for (const auto& s : w.train.samples) CHECK(test_ids.count(s.id) == 0);

  std::size_t planted = 0;
  for (const auto& s : w.test.samples) {
    const bool in_group = s.label == 1 && s.group_tags.at(c.bias.attr) == 1;
    CHECK(s.group_tags.at("planted") == (in_group ? 1 : 0));
    planted += in_group ? 1 : 0;
    const bool has_marker = s.report_text->find(" portable") != std::string::npos;
    CHECK(has_marker == (s.group_tags.at("frontal") == 1));
    for (const auto& [m, d] : c.world.dims) CHECK(s.views.at(m).size() == d);
  }
  CHECK(planted == 60);
  CHECK(w.realized_bias == expected_noise_rate(w.train, c.bias));
  CHECK(std::abs(w.realized_bias - 0.3) <= 0.01);
  CHECK(w.token_table.dim == c.world.dims.at("img"));
  CHECK(w.token_table.vectors.count("portable") == 1);

  const SynthWorld again = synth_world(c.world, c.bias, 3);
  CHECK(again.test == w.test);
  CHECK(again.train == w.train);
  CHECK(synth_world(c.world, c.bias, 4).test != w.test);

  BiasSpec frac = c.bias;
  frac.test_underperforming_fraction = 0.3;
  std::size_t planted30 = 0;
  for (const auto& s : synth_world(c.world, frac, 3).test.samples) planted30 += static_cast<std::size_t>(s.group_tags.at("planted"));
  CHECK(planted30 == 90);

  BiasSpec missing = c.bias;
  missing.attr = "nope";
  CHECK_THROWS_AS(synth_world(c.world, missing, 0), Error);
}

TEST_CASE("realized bias of every fixture hits its target") {
  for (BiasKind kind : {BiasKind::spurious_correlation, BiasKind::rare_slice, BiasKind::noisy_label}) {
    const AuditConfig c = fixture_config(kind);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SynthWorld w = synth_world(c.world, c.bias, seed);
      CHECK(w.realized_bias == realized_bias(w.train, c.bias));
      if (kind == BiasKind::spurious_correlation) CHECK(std::abs(w.realized_bias - 0.7) <= 0.05);
      if (kind == BiasKind::rare_slice) CHECK(w.realized_bias == 0.02);
      if (kind == BiasKind::noisy_label) CHECK(w.realized_bias == expected_noise_rate(w.train, c.bias));
    }
  }
}

TEST_CASE("validity_check") {
  auto make = [](int correct0, int total0, int correct1, int total1) {
    Dataset d;
    d.modality_dims = {{"img", 1}};
    int id = 0;
    auto add = [&](int attr, int correct, int total) {
      for (int i = 0; i < total; ++i) {
        Sample s;
        s.id = std::to_string(id++);
        s.views["img"] = {0.0};
        s.label = 1;
        s.prediction = i < correct ? 1 : 0;
        s.group_tags["device"] = attr;
        d.samples.push_back(s);
      }
    };
    add(0, correct0, total0);
    add(1, correct1, total1);
    return d;
  };
  CHECK_FALSE(validity_check(make(100, 100, 91, 100), "device"));
  CHECK(validity_check(make(100, 100, 90, 100), "device"));
  CHECK(validity_check(make(90, 100, 80, 100), "device"));
  CHECK(accuracy_gap(make(90, 100, 80, 100), "device") == doctest::Approx(0.1));
  CHECK_FALSE(validity_check(make(100, 100, 100, 100), "device"));
  CHECK_FALSE(validity_check(make(80, 100, 90, 100), "device"));
  CHECK_THROWS_AS(validity_check(make(1, 1, 1, 1), "other"), Error);
}

TEST_CASE("default fixture passes the validity check in at least 95% of seeds") {
  for (BiasKind kind : {BiasKind::spurious_correlation, BiasKind::rare_slice, BiasKind::noisy_label}) {
    const AuditConfig c = fixture_config(kind);
    int valid = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      valid += validity_check(synth_world(c.world, c.bias, seed).test, c.bias.attr) ? 1 : 0;
    }
    CHECK(valid >= 95);
  }
}

TEST_CASE("a world without a planted gap fails the validity check") {
  AuditConfig c = fixture_config(BiasKind::noisy_label);
  c.world.group_error = c.world.base_error + 1e-9;
  int valid = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    valid += validity_check(synth_world(c.world, c.bias, seed).test, c.bias.attr) ? 1 : 0;
  }
  CHECK(valid <= 2);
}
