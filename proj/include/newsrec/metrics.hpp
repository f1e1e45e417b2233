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

#ifndef NEWSREC_METRICS_HPP
#define NEWSREC_METRICS_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "newsrec/features.hpp"
#include "newsrec/ranking.hpp"

namespace newsrec::metrics {

using ItemSet = std::set<std::string>;

// (predicted, actual) pairs. Throws std::invalid_argument when empty.
double rmse(std::span<const std::pair<double, double>> predictions);

// Hits in the top k over k; a list shorter than k is padded with misses.
double precision_at_k(const RankedList& ranked, const ItemSet& relevant, std::size_t k);

// Hits in the top k over |relevant|; nullopt when nothing is relevant.
std::optional<double> recall_at_k(const RankedList& ranked, const ItemSet& relevant, std::size_t k);

double f1_at_k(double precision, double recall);

// Mean pairwise dissimilarity over all unordered pairs; 0 for lists shorter
// than 2. `missing` receives the number of list items without features.
double intra_list_diversity(const RankedList& ranked, const FeatureSpace& features,
                            std::size_t* missing = nullptr);

// Share of the list not in the user's history. Throws on an empty list.
double novelty_score(const RankedList& ranked, const ItemSet& history);

// w * f1 + (1 - w) * (diversity + novelty) / 2
double composite_tradeoff(double f1, double diversity, double novelty, double w);

// Spearman rank correlation with average ranks for ties; nullopt when fewer
// than two points or either side is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct UserRun {
  std::string user_id;
  RankedList ranking;  // at least max(ks) long when enough candidates exist
  ItemSet relevant;
  ItemSet history;
};

struct EvalInput {
  std::vector<std::pair<double, double>> predictions;  // empty: rmse not applicable
  std::vector<UserRun> users;
  std::size_t skipped_cold_start = 0;
  std::size_t bad_lines = 0;
  std::string candidate_policy;
  std::string model;
};

struct EvalOptions {
  std::vector<std::size_t> ks{10, 20, 50};
  double w = 0.5;
};

struct UserMetrics {
  std::string user_id;
  std::vector<double> precision, recall, f1, diversity, novelty;  // per k
};

struct EvaluationCounts {
  std::size_t evaluated_users = 0;
  std::size_t skipped_cold_start = 0;
  std::size_t skipped_no_relevant = 0;
  std::size_t bad_lines = 0;
  std::size_t rmse_pairs = 0;
  std::size_t missing_features = 0;
};

struct EvaluationReport {
  std::optional<double> rmse;
  std::vector<std::size_t> k_values;
  double w = 0.5;
  // macro-averages over evaluated users, aligned with k_values
  std::vector<double> precision, recall, f1, diversity, novelty, composite;
  EvaluationCounts counts;
  std::string candidate_policy;
  std::string model;
  std::vector<UserMetrics> per_user;  // sorted by user id

  // index of k in k_values
  std::size_t k_index(std::size_t k) const;
};

// Per-user metrics at every k, macro-averaged in user-id order. Users
// without relevant items are skipped and counted. Throws DataError when no
// user is evaluable.
EvaluationReport evaluate_run(const EvalInput& input, const FeatureSpace& features,
                              const EvalOptions& options);

std::string to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);

// user,k,precision,recall,f1,diversity,novelty
void write_per_user_csv(std::ostream& out, const EvaluationReport& report);

}  // namespace newsrec::metrics

#endif  // NEWSREC_METRICS_HPP
