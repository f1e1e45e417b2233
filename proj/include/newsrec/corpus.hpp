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

#ifndef NEWSREC_CORPUS_HPP
#define NEWSREC_CORPUS_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "newsrec/common.hpp"

namespace newsrec::corpus {

struct NewsItem {
  std::string item_id;
  std::string category;
  std::string subcategory;  // may be empty
  std::vector<std::string> title_tokens;
  std::vector<std::string> snippet_tokens;
};

// Ordered so that every iteration over the catalog is deterministic.
using Catalog = std::map<std::string, NewsItem>;

enum class FeedbackKind { rating, click };
enum class Label { positive, negative };

struct Interaction {
  std::string user_id;
  std::string item_id;
  Timestamp timestamp = 0;
  FeedbackKind kind = FeedbackKind::click;
  double value = 0.0;  // rating value; unused for clicks
  std::optional<Label> label;
  std::optional<std::string> session_id;

  bool is_rating() const { return kind == FeedbackKind::rating; }

  static Interaction rating(std::string user, std::string item, Timestamp ts, double v,
                            std::optional<std::string> session = std::nullopt);
  static Interaction click(std::string user, std::string item, Timestamp ts,
                           std::optional<std::string> session = std::nullopt);
};

struct TimeDecomposition {
  int year = 1970;
  int month = 1;        // 1-12
  int day_of_week = 3;  // Monday = 0
  int hour = 0;
  int minute = 0;
  int second = 0;

  bool operator==(const TimeDecomposition&) const = default;
};

enum class Granularity { year, month, day_of_week, hour, minute, second };

inline constexpr std::array<Granularity, 6> kAllGranularities = {
    Granularity::year, Granularity::month, Granularity::day_of_week,
    Granularity::hour, Granularity::minute, Granularity::second};

std::string_view to_string(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view name);

// Fixed bin count for every granularity but year, which is open-ended.
std::optional<int> bin_count(Granularity g);
int bin_of(const TimeDecomposition& t, Granularity g);

struct Session {
  std::string user_id;
  std::string key;  // unique per session, stable across runs
  std::vector<Interaction> interactions;
  std::optional<std::vector<std::string>> impression_items;

  Timestamp start() const { return interactions.front().timestamp; }
  Timestamp end() const { return interactions.back().timestamp; }
};

struct LineError {
  std::size_t line = 0;
  std::string message;
};

struct ParseTally {
  std::size_t lines = 0;
  std::size_t bad_lines = 0;
  std::size_t duplicates = 0;
  std::size_t unknown_items = 0;
  std::vector<LineError> errors;

  void record(std::size_t line, std::string message);
  // {"bad_lines": N, "unknown_items": M}
  std::string to_json() const;
};

struct CatalogParse {
  Catalog catalog;
  ParseTally tally;
};

struct InteractionParse {
  std::vector<Interaction> interactions;
  ParseTally tally;
};

struct Dataset {
  Catalog catalog;
  std::vector<Interaction> interactions;
  RatingScale rating_scale;
  ParseTally tally;  // merged over both files
};

struct SplitResult {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  Timestamp split_timestamp = 0;
};

struct TimeProfile {
  std::array<std::size_t, 24> by_hour{};
  std::array<std::size_t, 7> by_day_of_week{};
  std::map<std::string, std::size_t> by_month;  // "YYYY-MM", ascending
  std::size_t total = 0;
};

// Lowercase and split on runs of ASCII non-alphanumerics. Bytes >= 0x80 are
// kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

CatalogParse parse_catalog(std::istream& in, bool skip_header = false);
InteractionParse parse_interactions(std::istream& in, RatingScale scale, bool skip_header = false);

Dataset load_dataset(const std::string& catalog_path, const std::string& interactions_path,
                     RatingScale scale, bool skip_header = false);

// Counts interactions whose item is missing from the catalog.
std::size_t count_unknown_items(const Catalog& catalog, std::span<const Interaction> interactions);

void write_catalog(std::ostream& out, const Catalog& catalog);
void write_interactions(std::ostream& out, std::span<const Interaction> interactions);

// UTC, proleptic Gregorian. Requires timestamp >= 0.
TimeDecomposition decompose_timestamp(Timestamp timestamp);

// 3 + 2s on [-1, 1], clamped to [1, 5]. Throws std::invalid_argument on
// non-finite input.
double sentiment_to_rating(double sentiment);

std::vector<Session> sessionize(std::span<const Interaction> interactions,
                                Timestamp session_gap_seconds = 1800);

// split_timestamp is the smallest t with F(t) >= train_fraction, where F is
// the empirical CDF of timestamps. When that lands on the latest timestamp
// the split steps back to the largest earlier one so the test side is never
// empty. Throws DataError when all timestamps are equal.
SplitResult time_based_split(std::span<const Interaction> interactions, double train_fraction);

TimeProfile profile_time_series(std::span<const Interaction> interactions);
std::string to_json(const TimeProfile& profile);

}  // namespace newsrec::corpus

#endif  // NEWSREC_CORPUS_HPP
