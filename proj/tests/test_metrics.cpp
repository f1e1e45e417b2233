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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "newsrec/metrics.hpp"
#include "newsrec/rng.hpp"
#include "oracles.hpp"

using namespace newsrec;
using namespace newsrec::metrics;
using newsrec::testing::ranked;

namespace {

corpus::NewsItem item(const std::string& id, const std::string& cat, const std::string& sub,
                      std::vector<std::string> title) {
  return corpus::NewsItem{id, cat, sub, std::move(title), {}};
}

corpus::Catalog random_catalog(Rng& rng, int n) {
  corpus::Catalog cat;
  for (int i = 0; i < n; ++i) {
    const std::string id = "N" + std::to_string(i);
    std::vector<std::string> words;
    const auto len = rng.uniform_index(6);
    for (std::size_t w = 0; w < len; ++w) words.push_back("w" + std::to_string(rng.uniform_index(15)));
    const auto c = rng.uniform_index(4);
    cat[id] = item(id, c == 3 ? "" : "c" + std::to_string(c),
                   rng.uniform01() < 0.5 ? "" : "s" + std::to_string(rng.uniform_index(3)), words);
  }
  return cat;
}

}  // namespace

TEST_CASE("rmse") {
  std::vector<std::pair<double, double>> perfect{{1, 1}, {4, 4}};
  CHECK(rmse(perfect) == 0.0);
  std::vector<std::pair<double, double>> ones{{1, 2}, {3, 4}};
  CHECK(rmse(ones) == 1.0);
  std::vector<std::pair<double, double>> three{{0, 3}};
  CHECK(rmse(three) == 3.0);
  CHECK_THROWS(rmse({}));
}

TEST_CASE("precision uses a fixed k denominator") {
  ItemSet rel{"A", "C"};
  CHECK(precision_at_k(ranked({"A", "B", "C", "D", "E"}), rel, 5) == doctest::Approx(0.4));
  CHECK(precision_at_k(ranked({"A", "B", "C"}), {}, 5) == 0.0);
  CHECK(precision_at_k(ranked({"A", "B", "C"}), {"A", "B", "C"}, 5) == doctest::Approx(0.6));
  CHECK_THROWS(precision_at_k(ranked({"A"}), rel, 0));
}

TEST_CASE("recall excludes users without relevant items") {
  CHECK(*recall_at_k(ranked({"A", "B", "X"}), {"A", "B", "C", "D"}, 3) == 0.5);
  CHECK(*recall_at_k(ranked({"A", "B"}), {"A", "B"}, 5) == 1.0);
  CHECK(*recall_at_k(ranked({"X", "Y"}), {"A"}, 2) == 0.0);
  CHECK_FALSE(recall_at_k(ranked({"A"}), {}, 1).has_value());
  // only the top k count
  CHECK(*recall_at_k(ranked({"X", "A"}), {"A"}, 1) == 0.0);
}

TEST_CASE("f1") {
  CHECK(f1_at_k(0.5, 0.5) == 0.5);
  CHECK(f1_at_k(0.4, 0.5) == doctest::Approx(4.0 / 9.0));
  CHECK(f1_at_k(0.0, 0.7) == 0.0);
  CHECK(f1_at_k(0.0, 0.0) == 0.0);
}

TEST_CASE("intra-list diversity on tabulated lists") {
  corpus::Catalog cat;
  cat["A"] = item("A", "sports", "nba", {"raptors"});
  cat["B"] = item("B", "sports", "nba", {"raptors"});
  cat["C"] = item("C", "politics", "", {"vote"});
  FeatureSpace fs(cat);
  CHECK(intra_list_diversity(ranked({"A", "B"}), fs) == doctest::Approx(0.0));
  CHECK(intra_list_diversity(ranked({"A", "C"}), fs) == doctest::Approx(1.0));
  CHECK(intra_list_diversity(ranked({"A", "B", "C"}), fs) == doctest::Approx(2.0 / 3.0));
  CHECK(intra_list_diversity(ranked({"A"}), fs) == 0.0);
  std::size_t missing = 0;
  CHECK(intra_list_diversity(ranked({"A", "Z"}), fs, &missing) == 1.0);
  CHECK(missing == 1);
}

TEST_CASE("feature blocks are unit length and non-negative") {
  Rng rng(1);
  auto cat = random_catalog(rng, 50);
  FeatureSpace fs(cat);
  for (const auto& [id, it] : cat) {
    const auto* v = fs.find(id);
    REQUIRE(v != nullptr);
    double expected = (it.category.empty() ? 0 : 1) + (it.subcategory.empty() ? 0 : 1) +
                      (it.title_tokens.empty() ? 0 : 1);
    CHECK(dot(*v, *v) == doctest::Approx(expected));
    for (const auto& [j, x] : *v) {
      CHECK(x > 0.0);
      CHECK(j < fs.dimension());
    }
  }
  CHECK(fs.find("nope") == nullptr);
}

TEST_CASE("intra-list diversity equals the brute-force pairwise mean exactly") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto cat = random_catalog(rng, 80);
    FeatureSpace fs(cat);
    newsrec::testing::DenseFeatures dense(cat);
    std::vector<std::string> ids;
    for (const auto& [id, it] : cat) ids.push_back(id);
    ids.push_back("MISSING");
    rng.shuffle(ids);
    ids.resize(rng.uniform_index(51));
    CHECK(intra_list_diversity(ranked(ids), fs) == dense.intra_list_diversity(ids));
  }
}

TEST_CASE("novelty") {
  auto ten = ranked({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
  CHECK(novelty_score(ten, {}) == 1.0);
  CHECK(novelty_score(ten, {"a", "b", "c"}) == doctest::Approx(0.7));
  CHECK(novelty_score(ten, {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}) == 0.0);
  CHECK_THROWS(novelty_score(ranked({}), {}));
}

TEST_CASE("composite trade-off") {
  CHECK(composite_tradeoff(0.37, 0.9, 0.1, 1.0) == 0.37);
  CHECK(composite_tradeoff(0.37, 0.6, 0.8, 0.0) == doctest::Approx(0.7));
  CHECK(composite_tradeoff(0.4, 0.6, 0.8, 0.5) == doctest::Approx(0.55));
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const double f = rng.uniform01(), d = rng.uniform01(), n = rng.uniform01(), w = rng.uniform01();
    const double bump = 0.1 * rng.uniform01();
    const double base = composite_tradeoff(f, d, n, w);
    CHECK(composite_tradeoff(f + bump, d, n, w) >= base);
    CHECK(composite_tradeoff(f, d + bump, n, w) >= base);
    CHECK(composite_tradeoff(f, d, n + bump, w) >= base);
  }
}

TEST_CASE("list metrics: cross-check identities and relabeling invariance") {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> pool;
    for (int i = 0; i < 30; ++i) pool.push_back("x" + std::to_string(i));
    rng.shuffle(pool);
    std::vector<std::string> list(pool.begin(), pool.begin() + static_cast<long>(rng.uniform_index(20)));
    ItemSet rel;
    for (const auto& p : pool)
      if (rng.uniform01() < 0.3) rel.insert(p);
    const std::size_t k = 1 + rng.uniform_index(25);
    auto r = ranked(list);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) hits += rel.count(list[i]);
    const double p = precision_at_k(r, rel, k);
    CHECK(p * static_cast<double>(k) == doctest::Approx(static_cast<double>(hits)));
    if (!rel.empty()) {
      const double rc = *recall_at_k(r, rel, k);
      CHECK(rc * static_cast<double>(rel.size()) == doctest::Approx(static_cast<double>(hits)));
      CHECK(f1_at_k(p, rc) <= 2 * std::min(p, rc) + 1e-15);
    }
    // relabel every id
    std::vector<std::string> renamed;
    for (const auto& x : list) renamed.push_back("z" + x);
    ItemSet rel2;
    for (const auto& x : rel) rel2.insert("z" + x);
    CHECK(precision_at_k(ranked(renamed), rel2, k) == p);
    if (!list.empty()) CHECK(novelty_score(ranked(renamed), rel2) == novelty_score(r, rel));
  }
}

TEST_CASE("evaluate_run macro-averages in user order") {
  corpus::Catalog cat;
  for (const char* id : {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}) cat[id] = item(id, "news", "", {id});
  FeatureSpace fs(cat);
  EvalInput in;
  in.model = "temporal-mf";
  in.candidate_policy = "exclude_train";
  in.predictions = {{1, 2}, {3, 4}};
  // u2: 1 hit of 5 relevant in the top 5; u1: 3 hits of 5
  in.users.push_back({"u2", ranked({"a", "x1", "x2", "x3", "x4"}), {"a", "b", "c", "d", "e"}, {}});
  in.users.push_back({"u1", ranked({"a", "b", "c", "x1", "x2"}), {"a", "b", "c", "d", "e"}, {"b"}});
  in.users.push_back({"u3", ranked({"a"}), {}, {}});
  in.skipped_cold_start = 4;
  in.bad_lines = 2;
  auto rep = evaluate_run(in, fs, {{5}, 0.5});
  CHECK(rep.f1[0] == doctest::Approx(0.4));
  CHECK(rep.precision[0] == doctest::Approx(0.4));
  CHECK(*rep.rmse == 1.0);
  CHECK(rep.counts.evaluated_users == 2);
  CHECK(rep.counts.skipped_no_relevant == 1);
  CHECK(rep.counts.skipped_cold_start == 4);
  CHECK(rep.counts.bad_lines == 2);
  REQUIRE(rep.per_user.size() == 2);
  CHECK(rep.per_user[0].user_id == "u1");
  CHECK(rep.per_user[0].novelty[0] == doctest::Approx(0.8));
  const double mean_div = (rep.per_user[0].diversity[0] + rep.per_user[1].diversity[0]) / 2;
  CHECK(rep.diversity[0] == mean_div);
  CHECK(rep.composite[0] == composite_tradeoff(rep.f1[0], rep.diversity[0], rep.novelty[0], 0.5));

  // input order does not matter
  std::swap(in.users[0], in.users[1]);
  CHECK(to_json(evaluate_run(in, fs, {{5}, 0.5})) == to_json(rep));
}

TEST_CASE("evaluate_run: perfect ranking, empty input, option checks") {
  corpus::Catalog cat;
  FeatureSpace fs(cat);
  EvalInput in;
  in.users.push_back({"u", ranked({"a", "b", "c"}), {"a", "b", "c", "d"}, {}});
  auto rep = evaluate_run(in, fs, {{1, 2, 3}, 0.5});
  CHECK(rep.precision == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_FALSE(rep.rmse.has_value());

  EvalInput none;
  none.users.push_back({"u", ranked({"a"}), {}, {}});
  CHECK_THROWS_AS(evaluate_run(none, fs, {}), DataError);
  CHECK_THROWS_AS(evaluate_run(in, fs, {{}, 0.5}), UsageError);
  CHECK_THROWS_AS(evaluate_run(in, fs, {{0}, 0.5}), UsageError);
  CHECK_THROWS_AS(evaluate_run(in, fs, {{1}, 1.5}), UsageError);
}

TEST_CASE("report JSON keys, round trip and per-user CSV") {
  corpus::Catalog cat;
  cat["a"] = item("a", "x", "", {});
  cat["b"] = item("b", "y", "", {});
  FeatureSpace fs(cat);
  EvalInput in;
  in.model = "diversity-glm";
  in.candidate_policy = "all";
  in.users.push_back({"u", ranked({"a", "b"}), {"a"}, {"a"}});
  auto rep = evaluate_run(in, fs, {{1, 2}, 0.25});
  const auto text = to_json(rep);
  for (const char* key : {"\"rmse\": null", "\"precision\"", "\"recall\"", "\"f1\"", "\"diversity\"", "\"novelty\"",
                          "\"composite\"", "\"k_values\"", "\"w\": 0.25", "\"counts\"", "\"candidate_policy\": \"all\""})
    CHECK(text.find(key) != std::string::npos);
  CHECK(text.back() == '\n');
  auto back = report_from_json(text);
  CHECK(to_json(back) == text);

  std::ostringstream csv;
  write_per_user_csv(csv, rep);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "user,k,precision,recall,f1,diversity,novelty");
  CHECK(row.rfind("u,", 0) == 0);
}

TEST_CASE("spearman rank correlation") {
  std::vector<double> x{1, 2, 3, 4, 5}, up{2, 4, 6, 8, 100}, down{5, 4, 3, 2, 1};
  CHECK(*spearman(x, up) == doctest::Approx(1.0));
  CHECK(*spearman(x, down) == doctest::Approx(-1.0));
  std::vector<double> ties{1, 1, 2, 2}, t2{1, 2, 3, 4};
  // average ranks 1.5,1.5,3.5,3.5 against 1..4
  CHECK(*spearman(ties, t2) == doctest::Approx(0.8 / std::sqrt(0.8)).epsilon(1e-12));
  std::vector<double> flat{3, 3, 3};
  CHECK_FALSE(spearman(flat, std::vector<double>{1, 2, 3}).has_value());
  CHECK_FALSE(spearman(std::vector<double>{1}, std::vector<double>{2}).has_value());
}
