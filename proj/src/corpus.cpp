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

#include "newsrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace newsrec::corpus {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

Interaction Interaction::rating(std::string user, std::string item, Timestamp ts, double v,
                                std::optional<std::string> session) {
  Interaction x;
  x.user_id = std::move(user);
  x.item_id = std::move(item);
  x.timestamp = ts;
  x.kind = FeedbackKind::rating;
  x.value = v;
  x.session_id = std::move(session);
  return x;
}

Interaction Interaction::click(std::string user, std::string item, Timestamp ts,
                               std::optional<std::string> session) {
  Interaction x;
  x.user_id = std::move(user);
  x.item_id = std::move(item);
  x.timestamp = ts;
  x.kind = FeedbackKind::click;
  x.session_id = std::move(session);
  return x;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::year: return "year";
    case Granularity::month: return "month";
    case Granularity::day_of_week: return "day_of_week";
    case Granularity::hour: return "hour";
    case Granularity::minute: return "minute";
    case Granularity::second: return "second";
  }
  return "?";
}

std::optional<Granularity> parse_granularity(std::string_view name) {
  for (Granularity g : kAllGranularities)
    if (to_string(g) == name) return g;
  if (name == "day" || name == "dow") return Granularity::day_of_week;
  return std::nullopt;
}

std::optional<int> bin_count(Granularity g) {
  switch (g) {
    case Granularity::year: return std::nullopt;
    case Granularity::month: return 12;
    case Granularity::day_of_week: return 7;
    case Granularity::hour: return 24;
    case Granularity::minute: return 60;
    case Granularity::second: return 60;
  }
  return std::nullopt;
}

int bin_of(const TimeDecomposition& t, Granularity g) {
  switch (g) {
    case Granularity::year: return t.year;
    case Granularity::month: return t.month - 1;
    case Granularity::day_of_week: return t.day_of_week;
    case Granularity::hour: return t.hour;
    case Granularity::minute: return t.minute;
    case Granularity::second: return t.second;
  }
  return 0;
}

void ParseTally::record(std::size_t line, std::string message) {
  ++bad_lines;
  errors.push_back({line, std::move(message)});
}

std::string ParseTally::to_json() const {
  nlohmann::ordered_json j;
  j["bad_lines"] = bad_lines;
  j["unknown_items"] = unknown_items;
  return j.dump();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

CatalogParse parse_catalog(std::istream& in, bool skip_header) {
  CatalogParse out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    std::string_view line = chomp(raw);
    if (line.empty()) continue;
    ++out.tally.lines;
    auto fields = split_tabs(line);
    if (fields.size() != 5) {
      out.tally.record(line_no, "expected 5 columns, got " + std::to_string(fields.size()));
      continue;
    }
    if (fields[0].empty()) {
      out.tally.record(line_no, "empty item_id");
      continue;
    }
    if (fields[1].empty()) {
      out.tally.record(line_no, "empty category");
      continue;
    }
    NewsItem item;
    item.item_id = std::string(fields[0]);
    item.category = std::string(fields[1]);
    item.subcategory = std::string(fields[2]);
    item.title_tokens = tokenize(fields[3]);
    item.snippet_tokens = tokenize(fields[4]);
    auto [it, inserted] = out.catalog.try_emplace(item.item_id);
    if (!inserted) ++out.tally.duplicates;
    it->second = std::move(item);
  }
  return out;
}

InteractionParse parse_interactions(std::istream& in, RatingScale scale, bool skip_header) {
  InteractionParse out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    std::string_view line = chomp(raw);
    if (line.empty()) continue;
    ++out.tally.lines;
    auto f = split_tabs(line);
    // A missing trailing session column is tolerated.
    if (f.size() != 6 && f.size() != 5) {
      out.tally.record(line_no, "expected 6 columns, got " + std::to_string(f.size()));
      continue;
    }
    if (f[0].empty() || f[1].empty()) {
      out.tally.record(line_no, "empty user_id or item_id");
      continue;
    }
    auto ts = parse_number<Timestamp>(f[2]);
    if (!ts || *ts < 0) {
      out.tally.record(line_no, "bad timestamp '" + std::string(f[2]) + "'");
      continue;
    }
    std::optional<std::string> session;
    if (f.size() == 6 && !f[5].empty()) session = std::string(f[5]);

    if (f[3] == "rating") {
      auto v = parse_number<double>(f[4]);
      if (!v || !std::isfinite(*v)) {
        out.tally.record(line_no, "bad rating value '" + std::string(f[4]) + "'");
        continue;
      }
      if (!scale.contains(*v)) {
        out.tally.record(line_no, "rating outside scale");
        continue;
      }
      out.interactions.push_back(
          Interaction::rating(std::string(f[0]), std::string(f[1]), *ts, *v, std::move(session)));
    } else if (f[3] == "click") {
      out.interactions.push_back(
          Interaction::click(std::string(f[0]), std::string(f[1]), *ts, std::move(session)));
    } else {
      out.tally.record(line_no, "unknown kind '" + std::string(f[3]) + "'");
    }
  }
  return out;
}

std::size_t count_unknown_items(const Catalog& catalog, std::span<const Interaction> interactions) {
  return static_cast<std::size_t>(std::count_if(
      interactions.begin(), interactions.end(),
      [&](const Interaction& x) { return !catalog.contains(x.item_id); }));
}

Dataset load_dataset(const std::string& catalog_path, const std::string& interactions_path,
                     RatingScale scale, bool skip_header) {
  std::ifstream cat_in(catalog_path);
  if (!cat_in) throw DataError("cannot open catalog '" + catalog_path + "'");
  std::ifstream int_in(interactions_path);
  if (!int_in) throw DataError("cannot open interactions '" + interactions_path + "'");

  auto cat = parse_catalog(cat_in, skip_header);
  auto log = parse_interactions(int_in, scale, skip_header);

  Dataset d;
  d.catalog = std::move(cat.catalog);
  d.interactions = std::move(log.interactions);
  d.rating_scale = scale;
  d.tally.lines = cat.tally.lines + log.tally.lines;
  d.tally.bad_lines = cat.tally.bad_lines + log.tally.bad_lines;
  d.tally.duplicates = cat.tally.duplicates;
  d.tally.errors = std::move(cat.tally.errors);
  d.tally.errors.insert(d.tally.errors.end(), log.tally.errors.begin(), log.tally.errors.end());
  d.tally.unknown_items = count_unknown_items(d.catalog, d.interactions);
  return d;
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

}  // namespace

void write_catalog(std::ostream& out, const Catalog& catalog) {
  for (const auto& [id, item] : catalog) {
    out << id << '\t' << item.category << '\t' << item.subcategory << '\t'
        << join_tokens(item.title_tokens) << '\t' << join_tokens(item.snippet_tokens) << '\n';
  }
}

void write_interactions(std::ostream& out, std::span<const Interaction> interactions) {
  char buf[64];
  for (const auto& x : interactions) {
    out << x.user_id << '\t' << x.item_id << '\t' << x.timestamp << '\t';
    if (x.is_rating()) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x.value);
      out << "rating\t" << std::string_view(buf, end - buf);
    } else {
      out << "click\t";
    }
    out << '\t' << x.session_id.value_or("") << '\n';
  }
}

TimeDecomposition decompose_timestamp(Timestamp timestamp) {
  using namespace std::chrono;
  if (timestamp < 0) throw std::invalid_argument("negative timestamp");
  const sys_seconds tp{seconds{timestamp}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const weekday wd{day};
  const hh_mm_ss hms{tp - day};

  TimeDecomposition t;
  t.year = static_cast<int>(ymd.year());
  t.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  t.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
  t.hour = static_cast<int>(hms.hours().count());
  t.minute = static_cast<int>(hms.minutes().count());
  t.second = static_cast<int>(hms.seconds().count());
  return t;
}

double sentiment_to_rating(double sentiment) {
  if (!std::isfinite(sentiment)) throw std::invalid_argument("non-finite sentiment");
  const double s = std::clamp(sentiment, -1.0, 1.0);
  return std::clamp(3.0 + 2.0 * s, 1.0, 5.0);
}

std::vector<Session> sessionize(std::span<const Interaction> interactions,
                                Timestamp session_gap_seconds) {
  if (session_gap_seconds <= 0) throw std::invalid_argument("session gap must be positive");

  // Group indices per user, preserving input order for the stable sort.
  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < interactions.size(); ++i)
    by_user[interactions[i].user_id].push_back(i);

  std::vector<Session> sessions;
  for (auto& [user, idx] : by_user) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return interactions[a].timestamp < interactions[b].timestamp;
    });

    std::vector<Session> mine;
    std::map<std::string, std::size_t> explicit_sessions;  // session id -> index in mine
    std::optional<std::size_t> open_gap_session;
    std::size_t gap_count = 0;

    for (std::size_t i : idx) {
      const Interaction& x = interactions[i];
      if (x.session_id) {
        auto [it, inserted] = explicit_sessions.try_emplace(*x.session_id, mine.size());
        if (inserted) mine.push_back(Session{user, user + "\t" + *x.session_id, {}, std::nullopt});
        mine[it->second].interactions.push_back(x);
        continue;
      }
      if (!open_gap_session ||
          x.timestamp - mine[*open_gap_session].interactions.back().timestamp > session_gap_seconds) {
        open_gap_session = mine.size();
        mine.push_back(Session{user, user + "\t#" + std::to_string(gap_count++), {}, std::nullopt});
      }
      mine[*open_gap_session].interactions.push_back(x);
    }

    std::stable_sort(mine.begin(), mine.end(), [](const Session& a, const Session& b) {
      return a.start() < b.start();
    });
    for (auto& s : mine) sessions.push_back(std::move(s));
  }
  return sessions;
}

SplitResult time_based_split(std::span<const Interaction> interactions, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  if (interactions.size() < 2) throw DataError("need at least 2 interactions to split");

  std::vector<Timestamp> ts;
  ts.reserve(interactions.size());
  for (const auto& x : interactions) ts.push_back(x.timestamp);
  std::sort(ts.begin(), ts.end());
  if (ts.front() == ts.back()) throw DataError("all timestamps are equal; cannot split");

  const double n = static_cast<double>(ts.size());
  // smallest k with k / n >= train_fraction
  auto k = static_cast<std::size_t>(std::ceil(train_fraction * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, ts.size());
  Timestamp split = ts[k - 1];
  if (split == ts.back()) {
    auto first_max = std::lower_bound(ts.begin(), ts.end(), ts.back());
    split = *(first_max - 1);
  }

  SplitResult out;
  out.split_timestamp = split;
  for (const auto& x : interactions) (x.timestamp <= split ? out.train : out.test).push_back(x);
  return out;
}

TimeProfile profile_time_series(std::span<const Interaction> interactions) {
  TimeProfile p;
  char buf[16];
  for (const auto& x : interactions) {
    const auto t = decompose_timestamp(x.timestamp);
    ++p.by_hour[static_cast<std::size_t>(t.hour)];
    ++p.by_day_of_week[static_cast<std::size_t>(t.day_of_week)];
    std::snprintf(buf, sizeof buf, "%04d-%02d", t.year, t.month);
    ++p.by_month[buf];
    ++p.total;
  }
  return p;
}

std::string to_json(const TimeProfile& profile) {
  nlohmann::ordered_json j;
  j["total"] = profile.total;
  j["by_hour"] = profile.by_hour;
  j["by_day_of_week"] = profile.by_day_of_week;
  nlohmann::ordered_json months = nlohmann::ordered_json::object();
  for (const auto& [m, c] : profile.by_month) months[m] = c;
  j["by_month"] = months;
  return j.dump(2);
}

}  // namespace newsrec::corpus
