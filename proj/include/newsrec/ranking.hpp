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

#ifndef NEWSREC_RANKING_HPP
#define NEWSREC_RANKING_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace newsrec {

struct RankedList {
  std::string user_id;
  std::vector<std::string> items;  // no duplicates
  std::vector<double> scores;      // parallel to items, non-increasing

  std::size_t size() const { return items.size(); }
  RankedList truncated(std::size_t k) const;
};

// The k highest-scoring candidates, descending; equal scores are ordered by
// ascending item id. Duplicate candidates are collapsed. Requires k >= 1.
RankedList rank_top_k(const std::string& user, std::span<const std::string> candidates,
                      const std::function<double(const std::string&)>& score, std::size_t k);

}  // namespace newsrec

#endif  // NEWSREC_RANKING_HPP
