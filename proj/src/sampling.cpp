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

#include "newsrec/sampling.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <stdexcept>

#include "newsrec/rng.hpp"

namespace newsrec::sampling {

namespace {

LabeledPair make_pair(const Session& s, const Interaction& x, const std::string& item, Label label) {
  return LabeledPair{s.user_id, item, x.timestamp, label, 1.0, s.key};
}

std::set<std::string> clicked_items(const Session& session) {
  std::set<std::string> clicked;
  for (const auto& x : session.interactions) clicked.insert(x.item_id);
  return clicked;
}

}  // namespace

std::vector<LabeledPair> label_implicit(std::span<const Session> sessions, bool dedup) {
  std::vector<LabeledPair> out;
  for (const auto& s : sessions) {
    std::set<std::string> seen;
    for (const auto& x : s.interactions) {
      if (dedup && !seen.insert(x.item_id).second) continue;
      out.push_back(make_pair(s, x, x.item_id, Label::positive));
    }
  }
  return out;
}

ActivityIndex::ActivityIndex(std::span<const Interaction> interactions) {
  events_.reserve(interactions.size());
  for (const auto& x : interactions) events_.emplace_back(x.timestamp, x.item_id);
  std::sort(events_.begin(), events_.end());
}

std::vector<std::string> ActivityIndex::items_between(Timestamp from, Timestamp to) const {
  auto lo = std::lower_bound(events_.begin(), events_.end(), from,
                             [](const auto& e, Timestamp t) { return e.first < t; });
  auto hi = std::upper_bound(events_.begin(), events_.end(), to,
                             [](Timestamp t, const auto& e) { return t < e.first; });
  std::vector<std::string> items;
  for (auto it = lo; it != hi; ++it) items.push_back(it->second);
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

std::vector<std::string> candidate_pool(const Session& session, const ActivityIndex* fallback,
                                        Timestamp window_seconds) {
  std::vector<std::string> base;
  if (session.impression_items) {
    base = *session.impression_items;
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
  } else if (fallback && !session.interactions.empty()) {
    base = fallback->items_between(session.start() - window_seconds, session.end());
  }
  const auto clicked = clicked_items(session);
  std::erase_if(base, [&](const std::string& id) { return clicked.contains(id); });
  return base;
}

NegativeDraw sample_negatives(const Session& session, std::span<const std::string> pool,
                              int negatives_per_positive, std::uint64_t seed) {
  if (negatives_per_positive < 1) throw std::invalid_argument("negatives_per_positive must be >= 1");
  NegativeDraw draw;
  if (pool.empty()) {
    draw.empty_pool = !session.interactions.empty();
    return draw;
  }
  const auto ratio = static_cast<std::size_t>(negatives_per_positive);
  draw.with_replacement = pool.size() < ratio;

  Rng rng(seed);
  std::vector<std::size_t> order(pool.size());
  for (const auto& x : session.interactions) {
    if (draw.with_replacement) {
      for (std::size_t k = 0; k < ratio; ++k)
        draw.negatives.push_back(
            make_pair(session, x, pool[rng.uniform_index(pool.size())], Label::negative));
      continue;
    }
    // partial Fisher-Yates over a fresh index permutation
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t k = 0; k < ratio; ++k) {
      std::size_t j = k + rng.uniform_index(order.size() - k);
      std::swap(order[k], order[j]);
      draw.negatives.push_back(make_pair(session, x, pool[order[k]], Label::negative));
    }
  }
  return draw;
}

NegativeDraw sample_negatives(const Session& session, int negatives_per_positive,
                              std::uint64_t seed, const ActivityIndex* fallback,
                              Timestamp window_seconds) {
  const auto pool = candidate_pool(session, fallback, window_seconds);
  return sample_negatives(session, pool, negatives_per_positive, seed);
}

SamplingResult sample_sessions(std::span<const Session> sessions, const ActivityIndex* fallback,
                               const SamplingOptions& options) {
  SamplingResult result;
  for (const auto& s : sessions) {
    ++result.stats.sessions;
    auto positives = label_implicit(std::span(&s, 1), options.dedup);
    Session labeled = s;
    if (options.dedup) {
      // negatives are drawn once per retained positive
      std::set<std::string> seen;
      std::erase_if(labeled.interactions,
                    [&](const Interaction& x) { return !seen.insert(x.item_id).second; });
    }
    auto draw = sample_negatives(labeled, options.negatives_per_positive,
                                 derive_seed(options.seed, s.key), fallback, options.window_seconds);
    result.stats.positives += positives.size();
    result.stats.negatives += draw.negatives.size();
    if (draw.empty_pool) ++result.stats.empty_pool_sessions;
    if (draw.with_replacement) ++result.stats.small_pool_sessions;
    for (auto& p : positives) result.pairs.push_back(std::move(p));
    for (auto& n : draw.negatives) result.pairs.push_back(std::move(n));
  }
  return result;
}

void write_pairs(std::ostream& out, std::span<const LabeledPair> pairs) {
  for (const auto& p : pairs) {
    out << p.user_id << '\t' << p.item_id << '\t' << p.timestamp << '\t'
        << (p.label == Label::positive ? "positive" : "negative") << '\n';
  }
}

}  // namespace newsrec::sampling
