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

#ifndef NEWSREC_FEATURES_HPP
#define NEWSREC_FEATURES_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "newsrec/corpus.hpp"

namespace newsrec::metrics {

// (index, value) pairs sorted by index.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

double dot(const SparseVector& a, const SparseVector& b);
double norm(const SparseVector& a);

// 0 when either vector is zero.
double cosine(const SparseVector& a, const SparseVector& b);

// Item features: one-hot category, one-hot subcategory and term frequencies
// over title + snippet tokens, each block l2-normalized, then concatenated.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  explicit FeatureSpace(const corpus::Catalog& catalog);

  // nullptr for items outside the catalog.
  const SparseVector* find(const std::string& item_id) const;
  std::size_t dimension() const { return dimension_; }

 private:
  std::unordered_map<std::string, SparseVector> vectors_;
  std::size_t dimension_ = 0;
};

// 1 - cosine. Missing items and zero vectors are dissimilar to everything.
double dissimilarity(const SparseVector* a, const SparseVector* b);

}  // namespace newsrec::metrics

#endif  // NEWSREC_FEATURES_HPP
