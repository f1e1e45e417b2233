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
#include <ctime>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "newsrec/corpus.hpp"
#include "newsrec/rng.hpp"
#include "test_support.hpp"

using namespace newsrec;
using namespace newsrec::corpus;
using newsrec::testing::click_at;
using newsrec::testing::rating_at;

namespace {

std::vector<Timestamp> timestamps_of(const std::vector<Interaction>& xs) {
  std::vector<Timestamp> ts;
  for (const auto& x : xs) ts.push_back(x.timestamp);
  return ts;
}

std::vector<Interaction> clicks_at(const std::vector<Timestamp>& ts, const std::string& user = "u1") {
  std::vector<Interaction> xs;
  for (std::size_t i = 0; i < ts.size(); ++i) xs.push_back(click_at(user, "N" + std::to_string(i), ts[i]));
  return xs;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
  CHECK(tokenize("Raptors win again") == std::vector<std::string>{"raptors", "win", "again"});
  CHECK(tokenize("The Raptors won...") == std::vector<std::string>{"the", "raptors", "won"});
  CHECK(tokenize("  --  ").empty());
  CHECK(tokenize("COVID-19 cases") == std::vector<std::string>{"covid", "19", "cases"});
}

TEST_CASE("parse_catalog maps fields and counts duplicates") {
  std::istringstream in("N1\tsports\tbasketball\tRaptors win again\tThe Raptors won...\n");
  auto p = parse_catalog(in);
  REQUIRE(p.catalog.size() == 1);
  const auto& item = p.catalog.at("N1");
  CHECK(item.category == "sports");
  CHECK(item.subcategory == "basketball");
  CHECK(item.title_tokens == std::vector<std::string>{"raptors", "win", "again"});
  CHECK(item.snippet_tokens == std::vector<std::string>{"the", "raptors", "won"});

  std::istringstream empty("");
  CHECK(parse_catalog(empty).catalog.empty());

  std::istringstream dup("N1\ta\t\tfirst\t\nN1\tb\t\tsecond\t\n");
  auto d = parse_catalog(dup);
  CHECK(d.catalog.size() == 1);
  CHECK(d.tally.duplicates == 1);
  CHECK(d.catalog.at("N1").category == "b");
}

TEST_CASE("parse_catalog tallies malformed lines with line numbers") {
  std::istringstream in("N1\tsports\tx\tt\ts\nbroken line\n\tnews\t\tt\ts\nN2\tnews\t\tt\ts\n");
  auto p = parse_catalog(in);
  CHECK(p.catalog.size() == 2);
  CHECK(p.tally.bad_lines == 2);
  REQUIRE(p.tally.errors.size() == 2);
  CHECK(p.tally.errors[0].line == 2);
  CHECK(p.tally.errors[1].line == 3);
}

TEST_CASE("parse_catalog skips one header line on request") {
  std::istringstream in("item\tcategory\tsub\ttitle\tsnippet\nN1\tnews\t\tHello\t\n");
  auto p = parse_catalog(in, true);
  CHECK(p.catalog.size() == 1);
  CHECK(p.tally.bad_lines == 0);
}

TEST_CASE("parse_interactions maps ratings and clicks") {
  std::istringstream in("u1\tN1\t1573800123\trating\t4.0\ts1\nu1\tN2\t1573800200\tclick\t\ts1\n");
  auto p = parse_interactions(in, RatingScale{});
  REQUIRE(p.interactions.size() == 2);
  const auto& r = p.interactions[0];
  CHECK(r.is_rating());
  CHECK(r.value == 4.0);
  CHECK(r.timestamp == 1573800123);
  CHECK(r.session_id == std::optional<std::string>("s1"));
  const auto& c = p.interactions[1];
  CHECK(c.kind == FeedbackKind::click);
  CHECK(c.item_id == "N2");
  CHECK(p.tally.bad_lines == 0);
}

TEST_CASE("parse_interactions tallies bad kinds, timestamps and out-of-scale ratings") {
  std::istringstream in(
      "u1\tN1\t1573800123\tview\t\ts1\n"
      "u1\tN1\t15738x0123\tclick\t\t\n"
      "u1\tN1\t1573800123\trating\t7\t\n"
      "u1\tN1\t1573800123\trating\tabc\t\n"
      "u1\tN1\t1573800123\tclick\t\n"
      "u1\tN1\t1\n");
  auto p = parse_interactions(in, RatingScale{});
  CHECK(p.interactions.size() == 1);  // five-column click is accepted
  CHECK(p.tally.bad_lines == 5);
  CHECK(p.tally.errors.front().line == 1);
  CHECK(p.tally.lines == 6);
}

TEST_CASE("catalog and interactions survive a write/parse round trip") {
  std::istringstream cat_in("N1\tsports\tbasketball\tRaptors win\tgreat game\nN2\tnews\t\tHello\t\n");
  auto cat = parse_catalog(cat_in).catalog;
  std::ostringstream cat_out;
  write_catalog(cat_out, cat);
  std::istringstream cat_back(cat_out.str());
  auto again = parse_catalog(cat_back).catalog;
  REQUIRE(again.size() == 2);
  CHECK(again.at("N1").title_tokens == cat.at("N1").title_tokens);
  CHECK(again.at("N2").subcategory.empty());

  std::vector<Interaction> xs{Interaction::rating("u", "N1", 10, 3.3828125, "s"),
                              Interaction::click("u", "N2", 11)};
  std::ostringstream out;
  write_interactions(out, xs);
  std::istringstream back(out.str());
  auto parsed = parse_interactions(back, RatingScale{}).interactions;
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].value == 3.3828125);
  CHECK(parsed[0].session_id == std::optional<std::string>("s"));
  CHECK_FALSE(parsed[1].session_id.has_value());
}

TEST_CASE("unknown items are counted, not dropped") {
  Catalog cat;
  cat["N1"] = NewsItem{"N1", "news", "", {}, {}};
  std::vector<Interaction> xs{click_at("u", "N1", 1), click_at("u", "N9", 2), click_at("v", "N9", 3)};
  CHECK(count_unknown_items(cat, xs) == 2);

  ParseTally t;
  t.bad_lines = 3;
  t.unknown_items = 2;
  CHECK(t.to_json() == R"({"bad_lines":3,"unknown_items":2})");
}

TEST_CASE("load_dataset merges tallies and reports missing files as data errors") {
  newsrec::testing::TempDir dir("corpus");
  newsrec::testing::spit(dir / "c.tsv", "N1\tnews\t\tA\tb\nbad\n");
  newsrec::testing::spit(dir / "i.tsv", "u\tN1\t5\tclick\t\t\nu\tN7\t6\tclick\t\t\nu\tN1\tx\tclick\t\t\n");
  auto d = load_dataset((dir / "c.tsv").string(), (dir / "i.tsv").string(), RatingScale{});
  CHECK(d.catalog.size() == 1);
  CHECK(d.interactions.size() == 2);
  CHECK(d.tally.bad_lines == 2);
  CHECK(d.tally.unknown_items == 1);
  CHECK_THROWS_AS(load_dataset((dir / "missing.tsv").string(), (dir / "i.tsv").string(), RatingScale{}),
                  DataError);
}

TEST_CASE("decompose_timestamp on fixed instants") {
  CHECK(decompose_timestamp(0) == TimeDecomposition{1970, 1, 3, 0, 0, 0});
  CHECK(decompose_timestamp(1573803723) == TimeDecomposition{2019, 11, 4, 7, 42, 3});
  CHECK(decompose_timestamp(951782400) == TimeDecomposition{2000, 2, 1, 0, 0, 0});  // leap day
  CHECK(decompose_timestamp(1573803723) == decompose_timestamp(1573803723));
  CHECK_THROWS(decompose_timestamp(-1));
}

TEST_CASE("decompose_timestamp agrees with gmtime on random instants") {
  Rng rng(2024);
  for (int trial = 0; trial < 20000; ++trial) {
    const auto t = static_cast<Timestamp>(rng.uniform_index(4102444800ULL));  // through 2099
    const std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    REQUIRE(gmtime_r(&tt, &tm) != nullptr);
    const auto d = decompose_timestamp(t);
    REQUIRE(d.year == tm.tm_year + 1900);
    REQUIRE(d.month == tm.tm_mon + 1);
    REQUIRE(d.day_of_week == (tm.tm_wday + 6) % 7);
    REQUIRE(d.hour == tm.tm_hour);
    REQUIRE(d.minute == tm.tm_min);
    REQUIRE(d.second == tm.tm_sec);
  }
}

TEST_CASE("granularity bins") {
  const auto t = decompose_timestamp(1573803723);
  CHECK(bin_of(t, Granularity::hour) == 7);
  CHECK(bin_of(t, Granularity::day_of_week) == 4);
  CHECK(bin_of(t, Granularity::month) == 10);
  CHECK(bin_of(t, Granularity::minute) == 42);
  CHECK(bin_of(t, Granularity::second) == 3);
  CHECK(bin_count(Granularity::hour) == 24);
  CHECK(bin_count(Granularity::day_of_week) == 7);
  CHECK(bin_count(Granularity::month) == 12);
  CHECK_FALSE(bin_count(Granularity::year).has_value());
  for (auto g : kAllGranularities) CHECK(parse_granularity(to_string(g)) == g);
  CHECK(parse_granularity("day") == Granularity::day_of_week);
  CHECK_FALSE(parse_granularity("fortnight").has_value());
}

TEST_CASE("sentiment_to_rating") {
  CHECK(sentiment_to_rating(0.0) == 3.0);
  CHECK(sentiment_to_rating(1.0) == 5.0);
  CHECK(sentiment_to_rating(-0.5) == 2.0);
  CHECK(sentiment_to_rating(-1.0) == 1.0);
  CHECK(sentiment_to_rating(4.0) == 5.0);
  CHECK(sentiment_to_rating(-4.0) == 1.0);
  CHECK_THROWS(sentiment_to_rating(std::numeric_limits<double>::quiet_NaN()));
  double prev = 0.0;
  for (int i = -150; i <= 150; ++i) {
    const double r = sentiment_to_rating(i / 100.0);
    CHECK(r >= prev);
    CHECK(r >= 1.0);
    CHECK(r <= 5.0);
    prev = r;
  }
}

TEST_CASE("sessionize cuts on gaps larger than the threshold") {
  auto sessions = sessionize(clicks_at({0, 100, 5000}), 1800);
  REQUIRE(sessions.size() == 2);
  CHECK(timestamps_of(sessions[0].interactions) == std::vector<Timestamp>{0, 100});
  CHECK(timestamps_of(sessions[1].interactions) == std::vector<Timestamp>{5000});

  auto single = sessionize(clicks_at({42}), 1800);
  REQUIRE(single.size() == 1);
  CHECK(single[0].interactions.size() == 1);

  // exactly the gap does not cut
  CHECK(sessionize(clicks_at({0, 1800}), 1800).size() == 1);
  CHECK(sessionize(clicks_at({0, 1801}), 1800).size() == 2);
}

TEST_CASE("explicit session ids override the gap rule") {
  std::vector<Interaction> xs{click_at("u", "A", 0, "s1"), click_at("u", "B", 100000, "s1"),
                              click_at("u", "C", 500000, "s1")};
  auto sessions = sessionize(xs, 1800);
  REQUIRE(sessions.size() == 1);
  CHECK(sessions[0].interactions.size() == 3);
  CHECK(sessions[0].key == "u\ts1");
}

TEST_CASE("sessionize partitions each user's interactions") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Interaction> xs;
    const auto n = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<std::string> sid;
      if (rng.uniform01() < 0.3) sid = "s" + std::to_string(rng.uniform_index(3));
      xs.push_back(click_at("u" + std::to_string(rng.uniform_index(4)), "N" + std::to_string(i),
                            static_cast<Timestamp>(rng.uniform_index(20000)), sid));
    }
    auto sessions = sessionize(xs, 1800);
    std::multiset<std::pair<std::string, std::string>> in, out;
    for (const auto& x : xs) in.emplace(x.user_id, x.item_id);
    std::set<std::string> keys;
    for (const auto& s : sessions) {
      CHECK(keys.insert(s.key).second);
      CHECK_FALSE(s.interactions.empty());
      for (std::size_t i = 0; i < s.interactions.size(); ++i) {
        CHECK(s.interactions[i].user_id == s.user_id);
        out.emplace(s.interactions[i].user_id, s.interactions[i].item_id);
        if (i) CHECK(s.interactions[i - 1].timestamp <= s.interactions[i].timestamp);
      }
    }
    CHECK(in == out);
  }
}

TEST_CASE("time_based_split on tabulated inputs") {
  std::vector<Timestamp> ten(10);
  std::iota(ten.begin(), ten.end(), 1);
  auto s = time_based_split(clicks_at(ten), 0.8);
  CHECK(timestamps_of(s.train) == std::vector<Timestamp>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(timestamps_of(s.test) == std::vector<Timestamp>{9, 10});
  CHECK(s.split_timestamp == 8);

  auto ties = time_based_split(clicks_at({1, 1, 1, 9}), 0.5);
  CHECK(ties.split_timestamp == 1);
  CHECK(timestamps_of(ties.train) == std::vector<Timestamp>{1, 1, 1});
  CHECK(timestamps_of(ties.test) == std::vector<Timestamp>{9});

  auto two = time_based_split(clicks_at({1, 2}), 0.99);
  CHECK(timestamps_of(two.train) == std::vector<Timestamp>{1});
  CHECK(timestamps_of(two.test) == std::vector<Timestamp>{2});

  CHECK_THROWS_AS(time_based_split(clicks_at({5, 5, 5}), 0.5), DataError);
  CHECK_THROWS_AS(time_based_split(clicks_at({5}), 0.5), DataError);
  CHECK_THROWS(time_based_split(clicks_at({1, 2}), 1.0));
}

TEST_CASE("time_based_split is leakage free on random inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Timestamp> ts(2 + rng.uniform_index(60));
    for (auto& t : ts) t = static_cast<Timestamp>(rng.uniform_index(30));
    if (*std::min_element(ts.begin(), ts.end()) == *std::max_element(ts.begin(), ts.end())) continue;
    const double f = 0.01 + 0.98 * rng.uniform01();
    auto s = time_based_split(clicks_at(ts), f);
    CHECK(s.train.size() + s.test.size() == ts.size());
    CHECK_FALSE(s.train.empty());
    CHECK_FALSE(s.test.empty());
    for (const auto& x : s.train) CHECK(x.timestamp <= s.split_timestamp);
    for (const auto& x : s.test) CHECK(x.timestamp > s.split_timestamp);
  }
}

TEST_CASE("profile_time_series counts and conserves") {
  auto empty = profile_time_series({});
  CHECK(empty.total == 0);
  CHECK(std::accumulate(empty.by_hour.begin(), empty.by_hour.end(), std::size_t{0}) == 0);
  CHECK(std::accumulate(empty.by_day_of_week.begin(), empty.by_day_of_week.end(), std::size_t{0}) == 0);

  const Timestamp h19 = 1573844400;  // 2019-11-15T19:00:00Z
  auto p = profile_time_series(clicks_at({h19, h19 + 60, h19 + 3599}));
  CHECK(p.by_hour[19] == 3);
  CHECK(std::accumulate(p.by_hour.begin(), p.by_hour.end(), std::size_t{0}) == 3);
  CHECK(p.by_day_of_week[4] == 3);
  CHECK(p.by_month.at("2019-11") == 3);

  Rng rng(3);
  std::vector<Timestamp> ts(500);
  for (auto& t : ts) t = static_cast<Timestamp>(rng.uniform_index(2000000000ULL));
  auto q = profile_time_series(clicks_at(ts));
  std::size_t months = 0;
  for (const auto& [m, c] : q.by_month) months += c;
  CHECK(std::accumulate(q.by_hour.begin(), q.by_hour.end(), std::size_t{0}) == 500);
  CHECK(std::accumulate(q.by_day_of_week.begin(), q.by_day_of_week.end(), std::size_t{0}) == 500);
  CHECK(months == 500);
  CHECK(q.total == 500);
}

TEST_CASE("rating helper keeps values") {
  auto r = rating_at("u", "N", 5, 4.5);
  CHECK(r.is_rating());
  CHECK(r.value == 4.5);
}
