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

#ifndef NEWSREC_ID_INDEX_HPP
#define NEWSREC_ID_INDEX_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace newsrec {

// Dense index over opaque string ids, in first-seen order.
class IdIndex {
 public:
  static constexpr std::int64_t npos = -1;

  std::size_t add(const std::string& id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  std::int64_t find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? npos : static_cast<std::int64_t>(it->second);
  }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace newsrec

#endif  // NEWSREC_ID_INDEX_HPP
