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
#include <map>
#include <set>
#include <sstream>

#include "newsrec/rng.hpp"
#include "newsrec/sampling.hpp"
#include "test_support.hpp"

using namespace newsrec;
using namespace newsrec::sampling;
using newsrec::testing::click_at;

namespace {

Session session_of(std::vector<Interaction> xs, std::optional<std::vector<std::string>> shown = std::nullopt) {
  Session s;
  s.user_id = xs.front().user_id;
  s.key = s.user_id + "\t#0";
  s.interactions = std::move(xs);
  s.impression_items = std::move(shown);
  return s;
}

std::vector<std::string> items_of(const std::vector<LabeledPair>& ps) {
  std::vector<std::string> v;
  for (const auto& p : ps) v.push_back(p.item_id);
  return v;
}

}  // namespace

TEST_CASE("label_implicit emits one positive per interaction") {
  auto s = session_of({click_at("u", "A", 1), click_at("u", "B", 2)});
  auto pos = label_implicit(std::span(&s, 1));
  REQUIRE(pos.size() == 2);
  CHECK(pos[0].item_id == "A");
  CHECK(pos[1].item_id == "B");
  CHECK(pos[0].label == Label::positive);
  CHECK(pos[1].timestamp == 2);
  CHECK(pos[0].weight == 1.0);

  CHECK(label_implicit({}).empty());

  auto dup = session_of({click_at("u", "A", 1), click_at("u", "A", 5)});
  CHECK(label_implicit(std::span(&dup, 1)).size() == 2);
  CHECK(label_implicit(std::span(&dup, 1), true).size() == 1);
}

TEST_CASE("sample_negatives draws from the pool, never from clicks") {
  auto s = session_of({click_at("u", "A", 1), click_at("u", "B", 2)}, std::vector<std::string>{"A", "B", "C", "D", "E"});
  auto pool = candidate_pool(s, nullptr);
  CHECK(pool == std::vector<std::string>{"C", "D", "E"});
  auto draw = sample_negatives(s, 1, 11);
  REQUIRE(draw.negatives.size() == 2);
  for (const auto& n : draw.negatives) {
    CHECK(n.label == Label::negative);
    CHECK((n.item_id == "C" || n.item_id == "D" || n.item_id == "E"));
  }
  CHECK(draw.negatives[0].timestamp == 1);
  CHECK(draw.negatives[1].timestamp == 2);
  CHECK_FALSE(draw.with_replacement);
}

TEST_CASE("small pools fall back to sampling with replacement") {
  auto s = session_of({click_at("u", "A", 1)}, std::vector<std::string>{"A", "C"});
  auto draw = sample_negatives(s, 4, 5);
  CHECK(items_of(draw.negatives) == std::vector<std::string>{"C", "C", "C", "C"});
  CHECK(draw.with_replacement);
}

TEST_CASE("an empty pool yields no negatives and is flagged") {
  auto s = session_of({click_at("u", "A", 1)}, std::vector<std::string>{"A"});
  auto draw = sample_negatives(s, 4, 5);
  CHECK(draw.negatives.empty());
  CHECK(draw.empty_pool);

  auto no_index = session_of({click_at("u", "A", 1)});
  CHECK(sample_negatives(no_index, 2, 1).empty_pool);
}

TEST_CASE("fallback pool uses items active in the window before the session") {
  std::vector<Interaction> log{click_at("x", "OLD", 0), click_at("x", "P", 90000),
                               click_at("x", "Q", 100000), click_at("x", "LATE", 200000)};
  ActivityIndex index(log);
  auto s = session_of({click_at("u", "Q", 100000), click_at("u", "R", 100500)});
  auto pool = candidate_pool(s, &index, 86400);
  CHECK(pool == std::vector<std::string>{"P"});
  CHECK(index.items_between(0, 100000) == std::vector<std::string>{"OLD", "P", "Q"});
}

TEST_CASE("draws are deterministic per seed") {
  auto s = session_of({click_at("u", "A", 1), click_at("u", "B", 2)},
                      std::vector<std::string>{"C", "D", "E", "F", "G", "H"});
  auto a = sample_negatives(s, 3, 77);
  auto b = sample_negatives(s, 3, 77);
  CHECK(a.negatives == b.negatives);
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed)
    differs = sample_negatives(s, 3, seed).negatives != a.negatives;
  CHECK(differs);
}

TEST_CASE("without-replacement draws are distinct per positive") {
  auto s = session_of({click_at("u", "A", 1)}, std::vector<std::string>{"C", "D", "E", "F"});
  auto draw = sample_negatives(s, 4, 3);
  auto items = items_of(draw.negatives);
  std::sort(items.begin(), items.end());
  CHECK(items == std::vector<std::string>{"C", "D", "E", "F"});
}

TEST_CASE("single draws are uniform over the pool") {
  auto s = session_of({click_at("u", "A", 1)}, std::vector<std::string>{"B", "C", "D", "E", "F"});
  std::map<std::string, int> counts;
  const int trials = 10000;
  for (int seed = 0; seed < trials; ++seed) ++counts[sample_negatives(s, 1, derive_seed(1, std::uint64_t(seed))).negatives.at(0).item_id];
  const double p = 0.2;
  const double sd = std::sqrt(trials * p * (1 - p));
  REQUIRE(counts.size() == 5);
  for (const auto& [item, c] : counts) CHECK(std::abs(c - trials * p) <= 3 * sd);
}

TEST_CASE("sample_sessions: count rule, no clicked negatives, no conflicting labels") {
  Rng rng(5);
  std::vector<Interaction> log;
  for (int i = 0; i < 3000; ++i)
    log.push_back(click_at("u" + std::to_string(rng.uniform_index(30)), "N" + std::to_string(rng.uniform_index(200)),
                           static_cast<Timestamp>(rng.uniform_index(500000))));
  ActivityIndex index(log);
  auto sessions = corpus::sessionize(log, 1800);
  SamplingOptions opts;
  opts.seed = 123;
  auto res = sample_sessions(sessions, &index, opts);
  CHECK(res.stats.sessions == sessions.size());
  CHECK(res.stats.positives == log.size());

  std::map<std::string, std::set<std::string>> clicked;
  for (const auto& s : sessions)
    for (const auto& x : s.interactions) clicked[s.key].insert(x.item_id);
  std::size_t negatives = 0;
  for (const auto& p : res.pairs) {
    if (p.label == Label::negative) {
      ++negatives;
      CHECK_FALSE(clicked.at(p.session_key).contains(p.item_id));
    }
  }
  CHECK(negatives == res.stats.negatives);
  std::size_t expected = 0;
  for (const auto& s : sessions)
    if (!candidate_pool(s, &index).empty()) expected += s.interactions.size() * 4;
  CHECK(negatives == expected);

  auto again = sample_sessions(sessions, &index, opts);
  CHECK(again.pairs == res.pairs);

  // per-session seeds: dropping one session leaves the others unchanged
  std::vector<corpus::Session> tail(sessions.begin() + 1, sessions.end());
  auto partial = sample_sessions(tail, &index, opts);
  std::vector<LabeledPair> expect_tail;
  for (const auto& p : res.pairs)
    if (p.session_key != sessions.front().key) expect_tail.push_back(p);
  CHECK(partial.pairs == expect_tail);
}

TEST_CASE("write_pairs emits tab separated rows") {
  std::vector<LabeledPair> ps{{"u", "A", 5, Label::positive, 1.0, "k"}, {"u", "B", 5, Label::negative, 1.0, "k"}};
  std::ostringstream out;
  write_pairs(out, ps);
  CHECK(out.str() == "u\tA\t5\tpositive\nu\tB\t5\tnegative\n");
}

TEST_CASE("ratio below one is rejected") {
  auto s = session_of({click_at("u", "A", 1)}, std::vector<std::string>{"B"});
  CHECK_THROWS(sample_negatives(s, 0, 1));
}
