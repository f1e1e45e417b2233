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

#include "newsrec/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "newsrec/rng.hpp"

namespace newsrec::synth {

namespace {

double quantize(double x) { return std::round(x * 1024.0) / 1024.0; }

std::string padded(char prefix, int n, int width) {
  std::string digits = std::to_string(n);
  return std::string(1, prefix) + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v + 0.0);  // no "-0"
  return std::string(buf, end);
}

struct Event {
  Timestamp ts;
  std::size_t seq;
  corpus::Interaction interaction;
  double base, temporal, cat, sub;
};

}  // namespace

void SynthSpec::validate() const {
  if (n_users < 1 || n_items < 1 || n_interactions < 0 || n_categories < 1 ||
      subcategories_per_category < 0 || duration_days < 1 || max_session_items < 1 || rank < 0)
    throw UsageError("synth: counts must be positive");
  if (noise_sd < 0 || user_bias_sd < 0 || item_bias_sd < 0 || category_sd < 0 ||
      subcategory_sd < 0 || affinity_sd < 0 || factor_sd < 0)
    throw UsageError("synth: standard deviations must be >= 0");
  if (!(explicit_fraction >= 0.0 && explicit_fraction <= 1.0))
    throw UsageError("synth: explicit_fraction must lie in [0, 1]");
  if (popularity_exponent < 0 || category_popularity_exponent < 0 || item_lifetime_hours < 0)
    throw UsageError("synth: popularity exponents and item_lifetime_hours must be >= 0");
  for (int h : hour_offset_hours)
    if (h < 0 || h > 23) throw UsageError("synth: hour out of range");
  for (int d : dow_offset_days)
    if (d < 0 || d > 6) throw UsageError("synth: day of week out of range");
  if (start_timestamp < 0) throw UsageError("synth: start_timestamp must be >= 0");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  Rng prng(derive_seed(spec.seed, "params"));
  Rng erng(derive_seed(spec.seed, "events"));

  const auto U = static_cast<std::size_t>(spec.n_users);
  const auto I = static_cast<std::size_t>(spec.n_items);
  const auto C = static_cast<std::size_t>(spec.n_categories);
  const auto S = static_cast<std::size_t>(spec.subcategories_per_category);
  const auto R = static_cast<std::size_t>(spec.rank);
  const double span = static_cast<double>(spec.duration_days) * 86400.0;
  const double lifetime = spec.item_lifetime_hours * 3600.0;

  std::vector<double> cat_off(C), sub_off(C * std::max<std::size_t>(S, 1), 0.0);
  for (auto& x : cat_off) x = quantize(spec.category_sd * prng.normal());
  for (auto& x : sub_off) x = quantize(spec.subcategory_sd * prng.normal());

  // items
  std::vector<std::size_t> item_cat(I), item_sub(I);
  std::vector<double> item_bias(I), popularity(I), publish(I, 0.0);
  const double factor_scale = R ? std::sqrt(spec.factor_sd) / std::pow(static_cast<double>(R), 0.25) : 0.0;
  std::vector<double> q(I * R), p(U * R);
  std::vector<std::size_t> pop_rank(I);
  std::iota(pop_rank.begin(), pop_rank.end(), 1);
  prng.shuffle(pop_rank);

  SynthData out;
  for (std::size_t i = 0; i < I; ++i) {
    item_cat[i] = static_cast<std::size_t>(prng.uniform_index(C));
    item_sub[i] = S ? static_cast<std::size_t>(prng.uniform_index(S)) : 0;
    item_bias[i] = quantize(spec.item_bias_sd * prng.normal());
    popularity[i] = std::pow(static_cast<double>(pop_rank[i]), -spec.popularity_exponent) *
                    std::pow(static_cast<double>(item_cat[i] + 1), -spec.category_popularity_exponent);
    for (std::size_t f = 0; f < R; ++f) q[i * R + f] = factor_scale * prng.normal();
    if (lifetime > 0.0) publish[i] = -lifetime + prng.uniform01() * (span + lifetime);

    corpus::NewsItem item;
    item.item_id = padded('N', static_cast<int>(i + 1), 5);
    item.category = "cat" + std::to_string(item_cat[i]);
    item.subcategory = S ? "sub" + std::to_string(item_cat[i]) + "_" + std::to_string(item_sub[i]) : "";
    for (int w = 0; w < 4; ++w) {
      item.title_tokens.push_back("c" + std::to_string(item_cat[i]) + "w" +
                                  std::to_string(prng.uniform_index(12)));
    }
    for (int w = 0; w < 10; ++w) {
      const auto kind = prng.uniform_index(3);
      if (kind == 0)
        item.snippet_tokens.push_back("g" + std::to_string(prng.uniform_index(40)));
      else if (kind == 1 && S)
        item.snippet_tokens.push_back("s" + std::to_string(item_cat[i]) + "x" +
                                      std::to_string(item_sub[i]) + "w" +
                                      std::to_string(prng.uniform_index(8)));
      else
        item.snippet_tokens.push_back("c" + std::to_string(item_cat[i]) + "w" +
                                      std::to_string(prng.uniform_index(12)));
    }
    out.catalog.emplace(item.item_id, std::move(item));
  }

  // users
  std::vector<double> user_bias(U), affinity(U * C);
  for (std::size_t u = 0; u < U; ++u) {
    user_bias[u] = quantize(spec.user_bias_sd * prng.normal());
    for (std::size_t c = 0; c < C; ++c) affinity[u * C + c] = quantize(spec.affinity_sd * prng.normal());
    for (std::size_t f = 0; f < R; ++f) p[u * R + f] = factor_scale * prng.normal();
  }

  // preference(u, i): the user-item part of the rating
  auto latent = [&](std::size_t u, std::size_t i) {
    double s = 0.0;
    for (std::size_t f = 0; f < R; ++f) s += p[u * R + f] * q[i * R + f];
    return quantize(s);
  };
  auto sub_of = [&](std::size_t i) { return sub_off[item_cat[i] * std::max<std::size_t>(S, 1) + item_sub[i]]; };
  auto preference = [&](std::size_t u, std::size_t i) {
    return item_bias[i] + cat_off[item_cat[i]] + sub_of(i) + affinity[u * C + item_cat[i]] + latent(u, i);
  };

  // items ordered by publish time so the available set is a contiguous range
  std::vector<std::size_t> by_publish(I);
  std::iota(by_publish.begin(), by_publish.end(), 0);
  std::stable_sort(by_publish.begin(), by_publish.end(),
                   [&](std::size_t a, std::size_t b) { return publish[a] < publish[b]; });
  std::vector<double> sorted_publish(I);
  for (std::size_t n = 0; n < I; ++n) sorted_publish[n] = publish[by_publish[n]];

  std::vector<double> weight(U * I);
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t i = 0; i < I; ++i)
      weight[u * I + i] = popularity[i] * std::exp(spec.choice_strength * preference(u, i));

  const std::set<int> offset_hours(spec.hour_offset_hours.begin(), spec.hour_offset_hours.end());
  const std::set<int> offset_days(spec.dow_offset_days.begin(), spec.dow_offset_days.end());

  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(spec.n_interactions));
  std::vector<double> cum;
  std::size_t session_no = 0;
  while (events.size() < static_cast<std::size_t>(spec.n_interactions)) {
    const auto u = static_cast<std::size_t>(erng.uniform_index(U));
    const double t0 = erng.uniform01() * span;
    std::size_t lo = 0, hi = I;
    if (lifetime > 0.0) {
      lo = static_cast<std::size_t>(std::upper_bound(sorted_publish.begin(), sorted_publish.end(), t0 - lifetime) -
                                    sorted_publish.begin());
      hi = static_cast<std::size_t>(std::upper_bound(sorted_publish.begin(), sorted_publish.end(), t0) -
                                    sorted_publish.begin());
    }
    if (lo >= hi) continue;
    const std::size_t want = std::min<std::size_t>(
        {1 + static_cast<std::size_t>(erng.uniform_index(static_cast<std::uint64_t>(spec.max_session_items))),
         hi - lo, static_cast<std::size_t>(spec.n_interactions) - events.size()});

    std::vector<double> w(hi - lo);
    for (std::size_t n = lo; n < hi; ++n) w[n - lo] = weight[u * I + by_publish[n]];
    const std::string session = padded('s', static_cast<int>(++session_no), 6);
    Timestamp ts = spec.start_timestamp + static_cast<Timestamp>(t0);
    for (std::size_t k = 0; k < want; ++k) {
      cum.resize(w.size());
      std::partial_sum(w.begin(), w.end(), cum.begin());
      if (cum.back() <= 0.0) break;
      const double x = erng.uniform01() * cum.back();
      auto pos = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), x) - cum.begin());
      pos = std::min(pos, w.size() - 1);
      while (w[pos] == 0.0 && pos > 0) --pos;
      w[pos] = 0.0;
      const std::size_t i = by_publish[lo + pos];

      if (k > 0) ts += 30 + static_cast<Timestamp>(erng.uniform_index(271));
      const auto td = corpus::decompose_timestamp(ts);
      double temporal = 0.0;
      if (offset_hours.contains(td.hour)) temporal += spec.hour_offset;
      if (offset_days.contains(td.day_of_week)) temporal += spec.dow_offset;
      temporal = quantize(temporal);

      const double base = quantize(spec.mu) + user_bias[u] + preference(u, i);
      const double noise = quantize(spec.noise_sd * erng.normal());
      double value = base + temporal + noise;
      if (spec.clamp_ratings) value = spec.scale.clamp(value);
      const bool is_rating = erng.uniform01() < spec.explicit_fraction;

      const std::string user_id = padded('U', static_cast<int>(u + 1), 4);
      const std::string item_id = padded('N', static_cast<int>(i + 1), 5);
      Event ev{ts, events.size(),
               is_rating ? corpus::Interaction::rating(user_id, item_id, ts, value, session)
                         : corpus::Interaction::click(user_id, item_id, ts, session),
               base, temporal, cat_off[item_cat[i]], sub_of(i)};
      events.push_back(std::move(ev));
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
  });
  for (auto& ev : events) {
    out.interactions.push_back(std::move(ev.interaction));
    out.truth.base.push_back(ev.base);
    out.truth.temporal.push_back(ev.temporal);
    out.truth.category_offset.push_back(ev.cat);
    out.truth.subcategory_offset.push_back(ev.sub);
  }
  return out;
}

void write_dataset(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "catalog.tsv");
    corpus::write_catalog(f, data.catalog);
    if (!f) throw DataError("cannot write " + (dir / "catalog.tsv").string());
  }
  {
    std::ofstream f(dir / "interactions.tsv");
    corpus::write_interactions(f, data.interactions);
    if (!f) throw DataError("cannot write " + (dir / "interactions.tsv").string());
  }
  std::ofstream f(dir / "truth.tsv");
  for (std::size_t n = 0; n < data.interactions.size(); ++n) {
    const auto& x = data.interactions[n];
    f << x.user_id << '\t' << x.item_id << '\t' << x.timestamp << '\t' << fmt(data.truth.base[n])
      << '\t' << fmt(data.truth.temporal[n]) << '\t' << fmt(data.truth.category_offset[n]) << '\t'
      << fmt(data.truth.subcategory_offset[n]) << '\n';
  }
  if (!f) throw DataError("cannot write " + (dir / "truth.tsv").string());
}

}  // namespace newsrec::synth
