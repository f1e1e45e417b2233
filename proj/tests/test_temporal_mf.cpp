// Copyright 2026 The newsrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "newsrec/rng.hpp"
#include "newsrec/temporal_mf.hpp"

using namespace newsrec;
using namespace newsrec::mf;

namespace {

constexpr Timestamp kHour19 = 1573844400;  // 2019-11-15T19:00:00Z, a Friday

std::vector<RatingExample> random_examples(std::uint64_t seed, int users, int items, int n) {
  Rng rng(seed);
  std::vector<RatingExample> xs;
  for (int k = 0; k < n; ++k)
    xs.push_back({"u" + std::to_string(rng.uniform_index(users)), "i" + std::to_string(rng.uniform_index(items)),
                  1500000000 + static_cast<Timestamp>(rng.uniform_index(40000000)),
                  1.0 + std::floor(rng.uniform01() * 5.0)});
  return xs;
}

corpus::Catalog small_catalog(int items) {
  corpus::Catalog cat;
  for (int i = 0; i < items; ++i) {
    const std::string id = "i" + std::to_string(i);
    cat[id] = corpus::NewsItem{id, "c" + std::to_string(i % 2), i % 3 ? "s" + std::to_string(i % 3) : "", {}, {}};
  }
  return cat;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("predict sums the active terms") {
  MfConfig cfg;
  cfg.n_factors = 0;
  std::vector<RatingExample> one{{"u", "i", kHour19, 3.2}};
  auto m = initialize_model(cfg, one);
  CHECK(m.predict("u", "i", kHour19) == doctest::Approx(3.2));

  cfg.granularities = {Granularity::hour};
  auto h = initialize_model(cfg, one);
  h.mu = 3.0;
  h.user_bias[0] = 0.5;
  h.item_bias[0] = -0.2;
  h.time_biases[0].bins[19] = 0.3;
  CHECK(h.predict("u", "i", kHour19 + 1234) == doctest::Approx(3.6).epsilon(1e-15));
  CHECK(h.predict("u", "i", kHour19 + 3600) == doctest::Approx(3.3).epsilon(1e-15));

  // unknown entities fall back to mu, clamped
  h.mu = 7.0;
  CHECK(h.predict("nobody", "nothing", 0) == 5.0);
  CHECK(h.score("nobody", "nothing", 0) == 7.0);
}

TEST_CASE("single example converges to its target") {
  MfConfig cfg;
  cfg.n_factors = 0;
  cfg.l2_reg = 0.0;
  cfg.epochs = 2000;
  cfg.learning_rate = 0.05;
  std::vector<RatingExample> xs{{"u", "i", 0, 4.0}, {"v", "j", 0, 2.0}};
  auto m = train_sgd(cfg, xs);
  CHECK(m.predict("u", "i", 0) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(m.predict("v", "j", 0) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("heavy regularization keeps predictions at the mean") {
  MfConfig cfg;
  cfg.n_factors = 4;
  cfg.l2_reg = 1e6;
  cfg.learning_rate = 1e-7;
  cfg.epochs = 5;
  auto xs = random_examples(1, 10, 10, 200);
  auto m = train_sgd(cfg, xs);
  for (const auto& ex : xs) CHECK(m.predict(ex.user_id, ex.item_id, ex.timestamp) == doctest::Approx(m.mu).epsilon(1e-3));
  for (double b : m.user_bias) CHECK(std::abs(b) < 1e-4);
}

TEST_CASE("analytic gradient matches central differences") {
  MfConfig cfg;
  cfg.n_factors = 2;
  cfg.l2_reg = 0.05;
  cfg.granularities = {Granularity::hour, Granularity::year};
  cfg.use_category = true;
  cfg.use_subcategory = true;
  cfg.init_scale = 1.0;
  auto xs = random_examples(11, 3, 4, 12);
  auto cat = small_catalog(4);
  auto m = initialize_model(cfg, xs, &cat);
  Rng rng(5);
  for (double* p : m.parameters()) *p = rng.normal() * 0.5;

  const auto g = gradient(m, xs);
  auto params = m.parameters();
  REQUIRE(g.size() == params.size());
  const double h = 1e-5;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double saved = *params[j];
    *params[j] = saved + h;
    const double up = objective(m, xs);
    *params[j] = saved - h;
    const double down = objective(m, xs);
    *params[j] = saved;
    const double fd = (up - down) / (2 * h);
    const double scale = std::max(std::abs(fd) + std::abs(g[j]), 1e-6);
    CHECK(std::abs(fd - g[j]) / scale < 1e-4);
  }
}

TEST_CASE("one SGD step equals a gradient step on that example") {
  MfConfig cfg;
  cfg.n_factors = 3;
  cfg.learning_rate = 0.01;
  cfg.l2_reg = 0.1;
  cfg.granularities = {Granularity::day_of_week};
  cfg.use_category = true;
  auto xs = random_examples(2, 3, 4, 10);
  auto cat = small_catalog(4);
  auto m = initialize_model(cfg, xs, &cat);
  const auto g = gradient(m, std::span(&xs[0], 1));
  std::vector<double> before;
  for (double* p : m.parameters()) before.push_back(*p);
  sgd_step(m, xs[0]);
  auto after = m.parameters();
  for (std::size_t j = 0; j < after.size(); ++j)
    CHECK(*after[j] == doctest::Approx(before[j] - cfg.learning_rate * g[j]).epsilon(1e-12));
}

TEST_CASE("training loss is non-increasing with a fixed order and no regularization") {
  MfConfig cfg;
  cfg.n_factors = 2;
  cfg.l2_reg = 0.0;
  cfg.learning_rate = 0.001;
  cfg.epochs = 30;
  cfg.reshuffle_each_epoch = false;
  auto m = train_sgd(cfg, random_examples(3, 20, 30, 400));
  REQUIRE(m.epoch_loss.size() == 30);
  for (std::size_t e = 1; e < m.epoch_loss.size(); ++e) CHECK(m.epoch_loss[e] <= m.epoch_loss[e - 1] + 1e-9);
}

TEST_CASE("a disabled term predicts like an all-zero table") {
  MfConfig cfg;
  cfg.n_factors = 2;
  cfg.use_category = true;
  cfg.use_subcategory = true;
  cfg.epochs = 3;
  auto xs = random_examples(4, 10, 10, 300);
  auto cat = small_catalog(10);
  auto m = train_sgd(cfg, xs, &cat);

  auto disabled = m;
  disabled.config.use_category = false;
  auto zeroed = m;
  std::fill(zeroed.category_bias.begin(), zeroed.category_bias.end(), 0.0);
  for (const auto& ex : xs)
    CHECK(same_bits(disabled.predict(ex.user_id, ex.item_id, ex.timestamp),
                    zeroed.predict(ex.user_id, ex.item_id, ex.timestamp)));
}

TEST_CASE("training is reproducible for a fixed seed") {
  MfConfig cfg;
  cfg.n_factors = 4;
  cfg.epochs = 4;
  cfg.granularities = {Granularity::hour};
  auto xs = random_examples(8, 15, 15, 300);
  auto a = train_sgd(cfg, xs);
  auto b = train_sgd(cfg, xs);
  CHECK(a.user_factors == b.user_factors);
  CHECK(a.item_factors == b.item_factors);
  CHECK(a.time_biases[0].bins == b.time_biases[0].bins);
  cfg.rng_seed = 43;
  auto c = train_sgd(cfg, xs);
  CHECK(a.user_factors != c.user_factors);
}

TEST_CASE("year table covers observed years only") {
  MfConfig cfg;
  cfg.n_factors = 0;
  cfg.granularities = {Granularity::year};
  std::vector<RatingExample> xs{{"u", "i", 1546300800, 4.0} /*2019*/, {"u", "i", 1609459200, 2.0} /*2021*/};
  auto m = initialize_model(cfg, xs);
  REQUIRE(m.time_biases[0].bins.size() == 3);
  CHECK(m.time_biases[0].first_year == 2019);
  m.time_biases[0].bins = {0.1, 0.2, 0.3};
  CHECK(m.score("u", "i", 1609459200) == doctest::Approx(m.mu + 0.3));
  CHECK(m.score("u", "i", 1700000000) == m.mu);  // 2023, unseen
  CHECK(m.score("u", "i", 946684800) == m.mu);   // 2000, before the table
}

TEST_CASE("divergence aborts with the epoch number") {
  MfConfig cfg;
  cfg.n_factors = 8;
  cfg.learning_rate = 50.0;
  cfg.init_scale = 5.0;
  cfg.epochs = 50;
  auto xs = random_examples(9, 10, 10, 300);
  try {
    train_sgd(cfg, xs);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(std::isfinite(e.last_finite_loss()));
  }
}

TEST_CASE("recommend_top_k sorts by score and breaks ties by id") {
  MfConfig cfg;
  cfg.n_factors = 0;
  std::vector<RatingExample> xs{{"u", "A", 0, 3.0}, {"u", "B", 0, 3.0}, {"u", "C", 0, 3.0}};
  auto m = initialize_model(cfg, xs);
  m.mu = 3.0;
  m.item_bias[static_cast<std::size_t>(m.items.find("A"))] = 1.1;
  m.item_bias[static_cast<std::size_t>(m.items.find("C"))] = 1.1;
  std::vector<std::string> cands{"C", "B", "A"};
  auto top = recommend_top_k(m, "u", cands, 0, 2);
  CHECK(top.items == std::vector<std::string>{"A", "C"});
  auto all = recommend_top_k(m, "u", cands, 0, 10);
  CHECK(all.items == std::vector<std::string>{"A", "C", "B"});
  CHECK(recommend_top_k(m, "u", cands, 0, 10).items == all.items);
  CHECK_THROWS(recommend_top_k(m, "u", cands, 0, 0));
}

TEST_CASE("decay weights and the decay-popularity baseline") {
  CHECK(decay_weight(100, 100, 60) == 1.0);
  CHECK(decay_weight(160, 100, 60) == 0.5);
  CHECK(decay_weight(220, 100, 60) == 0.25);
  CHECK_THROWS(decay_weight(0, 10, 60));
  CHECK_THROWS(decay_weight(10, 0, 0));

  std::vector<corpus::Interaction> log{corpus::Interaction::click("a", "X", 0), corpus::Interaction::click("b", "X", 100),
                                       corpus::Interaction::click("c", "Y", 100), corpus::Interaction::click("d", "Z", 500)};
  DecayPopularity pop(log, 100);
  CHECK(pop.score("X", 100) == 1.5);
  CHECK(pop.score("Y", 200) == 0.5);
  CHECK(pop.score("Z", 100) == 0.0);  // future events do not count
  std::vector<std::string> cands{"Z", "Y", "X"};
  CHECK(recommend_top_k(pop, "u", cands, 100, 3).items == std::vector<std::string>{"X", "Y", "Z"});

  auto back = decay_model_from_json(to_json(pop));
  CHECK(back.half_life() == 100);
  CHECK(back.score("X", 150) == pop.score("X", 150));
}

TEST_CASE("JSON round trip reproduces predictions bit for bit") {
  MfConfig cfg;
  cfg.n_factors = 5;
  cfg.epochs = 3;
  cfg.granularities = {Granularity::hour, Granularity::year, Granularity::day_of_week};
  cfg.use_category = true;
  cfg.use_subcategory = true;
  auto xs = random_examples(10, 20, 10, 400);
  auto cat = small_catalog(10);
  auto m = train_sgd(cfg, xs, &cat);
  auto back = mf_model_from_json(to_json(m));
  CHECK(to_json(back) == to_json(m));
  Rng rng(1);
  for (int n = 0; n < 500; ++n) {
    const auto u = "u" + std::to_string(rng.uniform_index(22));
    const auto i = "i" + std::to_string(rng.uniform_index(12));
    const auto t = static_cast<Timestamp>(rng.uniform_index(2000000000));
    CHECK(same_bits(m.predict(u, i, t), back.predict(u, i, t)));
  }
  CHECK_THROWS_AS(mf_model_from_json("{\"type\":\"diversity-glm\"}"), DataError);
  CHECK_THROWS_AS(mf_model_from_json("not json"), DataError);
}

TEST_CASE("config validation") {
  MfConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = MfConfig{};
  cfg.granularities = {Granularity::hour, Granularity::hour};
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = MfConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}
