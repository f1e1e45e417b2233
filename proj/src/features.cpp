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

#include "newsrec/features.hpp"

#include <cmath>
#include <map>
#include <set>

namespace newsrec::metrics {

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      s += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return s;
}

double norm(const SparseVector& a) {
  double s = 0.0;
  for (const auto& [i, v] : a) s += v * v;
  return std::sqrt(s);
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double dissimilarity(const SparseVector* a, const SparseVector* b) {
  if (!a || !b) return 1.0;
  return 1.0 - cosine(*a, *b);
}

namespace {

std::string subcategory_key(const corpus::NewsItem& item) {
  return item.category + "/" + item.subcategory;
}

}  // namespace

FeatureSpace::FeatureSpace(const corpus::Catalog& catalog) {
  std::set<std::string> cats, subs, terms;
  for (const auto& [id, item] : catalog) {
    if (!item.category.empty()) cats.insert(item.category);
    if (!item.subcategory.empty()) subs.insert(subcategory_key(item));
    for (const auto& t : item.title_tokens) terms.insert(t);
    for (const auto& t : item.snippet_tokens) terms.insert(t);
  }
  std::unordered_map<std::string, std::uint32_t> cat_idx, sub_idx, term_idx;
  std::uint32_t next = 0;
  for (const auto& c : cats) cat_idx[c] = next++;
  for (const auto& s : subs) sub_idx[s] = next++;
  for (const auto& t : terms) term_idx[t] = next++;
  dimension_ = next;

  for (const auto& [id, item] : catalog) {
    SparseVector v;
    if (!item.category.empty()) v.emplace_back(cat_idx.at(item.category), 1.0);
    if (!item.subcategory.empty()) v.emplace_back(sub_idx.at(subcategory_key(item)), 1.0);

    std::map<std::uint32_t, double> tf;
    for (const auto& t : item.title_tokens) tf[term_idx.at(t)] += 1.0;
    for (const auto& t : item.snippet_tokens) tf[term_idx.at(t)] += 1.0;
    double ss = 0.0;
    for (const auto& [i, c] : tf) ss += c * c;
    const double n = std::sqrt(ss);
    for (const auto& [i, c] : tf) v.emplace_back(i, c / n);
    vectors_.emplace(id, std::move(v));
  }
}

const SparseVector* FeatureSpace::find(const std::string& item_id) const {
  auto it = vectors_.find(item_id);
  return it == vectors_.end() ? nullptr : &it->second;
}

}  // namespace newsrec::metrics
