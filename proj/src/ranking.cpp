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

#include "newsrec/ranking.hpp"

#include <algorithm>
#include <stdexcept>

namespace newsrec {

RankedList RankedList::truncated(std::size_t k) const {
  RankedList out;
  out.user_id = user_id;
  const std::size_t n = std::min(k, items.size());
  out.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
  out.scores.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

RankedList rank_top_k(const std::string& user, std::span<const std::string> candidates,
                      const std::function<double(const std::string&)>& score, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");

  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) scored.emplace_back(score(c), &c);

  auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  };
  std::sort(scored.begin(), scored.end(), better);
  scored.erase(std::unique(scored.begin(), scored.end(),
                           [](const auto& a, const auto& b) { return *a.second == *b.second; }),
               scored.end());

  RankedList out;
  out.user_id = user;
  const std::size_t n = std::min(k, scored.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.items.push_back(*scored[i].second);
    out.scores.push_back(scored[i].first);
  }
  return out;
}

}  // namespace newsrec
