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

#ifndef NEWSREC_SAMPLING_HPP
#define NEWSREC_SAMPLING_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "newsrec/corpus.hpp"

namespace newsrec::sampling {

using corpus::Interaction;
using corpus::Label;
using corpus::Session;

struct LabeledPair {
  std::string user_id;
  std::string item_id;
  Timestamp timestamp = 0;
  Label label = Label::positive;
  double weight = 1.0;
  std::string session_key;

  bool operator==(const LabeledPair&) const = default;
};

// One positive per interaction in every session. With dedup, repeated
// consumption of an item inside one session yields a single positive.
std::vector<LabeledPair> label_implicit(std::span<const Session> sessions, bool dedup = false);

// Time-sorted index of which items were active when; backs the negative
// pool for sessions that carry no impression list.
class ActivityIndex {
 public:
  explicit ActivityIndex(std::span<const Interaction> interactions);

  // Distinct items with at least one interaction in [from, to], ascending.
  std::vector<std::string> items_between(Timestamp from, Timestamp to) const;

 private:
  std::vector<std::pair<Timestamp, std::string>> events_;
};

inline constexpr Timestamp kFallbackWindowSeconds = 24 * 3600;

// Impression items minus clicked items, or, without impressions, the items
// active in [start - window, end] minus clicked items. Sorted, unique.
std::vector<std::string> candidate_pool(const Session& session, const ActivityIndex* fallback,
                                        Timestamp window_seconds = kFallbackWindowSeconds);

struct NegativeDraw {
  std::vector<LabeledPair> negatives;
  bool empty_pool = false;
  bool with_replacement = false;  // pool smaller than the request
};

// For every interaction in the session draw negatives_per_positive items
// from the pool, uniformly without replacement (with replacement when the
// pool is too small). Negatives carry their positive's timestamp.
NegativeDraw sample_negatives(const Session& session, std::span<const std::string> pool,
                              int negatives_per_positive, std::uint64_t seed);

NegativeDraw sample_negatives(const Session& session, int negatives_per_positive,
                              std::uint64_t seed, const ActivityIndex* fallback = nullptr,
                              Timestamp window_seconds = kFallbackWindowSeconds);

struct SamplingOptions {
  int negatives_per_positive = 4;
  std::uint64_t seed = 0;
  bool dedup = false;
  Timestamp window_seconds = kFallbackWindowSeconds;
};

struct SamplingStats {
  std::size_t sessions = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t empty_pool_sessions = 0;
  std::size_t small_pool_sessions = 0;
};

struct SamplingResult {
  std::vector<LabeledPair> pairs;  // per session: positives, then negatives
  SamplingStats stats;
};

// Labels and samples every session. Each session draws from its own stream
// seeded by derive_seed(options.seed, session.key).
SamplingResult sample_sessions(std::span<const Session> sessions, const ActivityIndex* fallback,
                               const SamplingOptions& options);

// user \t item \t ts \t label
void write_pairs(std::ostream& out, std::span<const LabeledPair> pairs);

}  // namespace newsrec::sampling

#endif  // NEWSREC_SAMPLING_HPP
