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

#ifndef NEWSREC_TEMPORAL_MF_HPP
#define NEWSREC_TEMPORAL_MF_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "newsrec/common.hpp"
#include "newsrec/corpus.hpp"
#include "newsrec/id_index.hpp"
#include "newsrec/ranking.hpp"

namespace newsrec::mf {

using corpus::Granularity;

struct MfConfig {
  int n_factors = 32;
  double learning_rate = 0.005;
  double l2_reg = 0.02;
  int epochs = 20;
  std::vector<Granularity> granularities;  // empty: no time-unit biases
  bool use_category = false;
  bool use_subcategory = false;
  std::uint64_t rng_seed = 42;
  double init_scale = 0.1;
  RatingScale scale;
  // Off for implicit 1/0 targets.
  bool clamp_predictions = true;
  // Draw a fresh permutation every epoch; otherwise one permutation is reused.
  bool reshuffle_each_epoch = true;

  void validate() const;
};

using newsrec::RatingExample;

// Bias per bin of one time unit. The year table covers the observed training
// years [first_year, first_year + bins.size()); other years contribute 0.
struct TimeBiasTable {
  Granularity granularity = Granularity::hour;
  int first_year = 0;
  std::vector<double> bins;

  // Index into bins, or -1 when the bin is outside the table.
  int index(const corpus::TimeDecomposition& t) const;
};

struct MfModel {
  MfConfig config;
  double mu = 0.0;

  IdIndex users;
  IdIndex items;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  std::vector<double> user_factors;  // users.size() x n_factors, row-major
  std::vector<double> item_factors;  // items.size() x n_factors, row-major

  std::vector<TimeBiasTable> time_biases;  // one per configured granularity, same order

  IdIndex categories;
  IdIndex subcategories;
  std::vector<double> category_bias;
  std::vector<double> subcategory_bias;
  // item -> (category index, subcategory index or -1), for every catalog item
  std::map<std::string, std::pair<int, int>> item_taxonomy;

  std::vector<double> epoch_loss;  // mean regularized loss after each epoch

  // Unclamped sum of every active term.
  double score(const std::string& user, const std::string& item, Timestamp timestamp) const;
  // score, clamped to the rating scale when config.clamp_predictions is set.
  double predict(const std::string& user, const std::string& item, Timestamp timestamp) const;

  std::vector<double*> parameters();
};

// Builds the id tables, taxonomy and bias tables for a training set, with
// factors drawn from N(0, (init_scale / sqrt(n_factors))^2) and zero biases.
MfModel initialize_model(const MfConfig& config, std::span<const RatingExample> train,
                         const corpus::Catalog* catalog = nullptr);

// Sum over examples of 0.5 e^2 + 0.5 lambda * (squared norm of every
// parameter the example touches), with e = target - score.
double objective(const MfModel& model, std::span<const RatingExample> examples);

// Analytic gradient of objective(), aligned with MfModel::parameters().
std::vector<double> gradient(const MfModel& model, std::span<const RatingExample> examples);

// One stochastic step on a single example; the update uses the gradient
// evaluated at the pre-step parameters.
void sgd_step(MfModel& model, const RatingExample& example);

// Throws DivergenceError when the loss stops being finite.
MfModel train_sgd(const MfConfig& config, std::span<const RatingExample> train,
                  const corpus::Catalog* catalog = nullptr);

// Continues training an initialized model for config.epochs epochs.
void train_epochs(MfModel& model, std::span<const RatingExample> train);

RankedList recommend_top_k(const MfModel& model, const std::string& user,
                           std::span<const std::string> candidates, Timestamp timestamp,
                           std::size_t k);

std::string to_json(const MfModel& model);
MfModel mf_model_from_json(const std::string& text);

// 2^(-(t_now - t_obs) / half_life). Requires t_now >= t_obs, half_life > 0.
double decay_weight(Timestamp t_now, Timestamp t_obs, double half_life_seconds);

// Ranking-only baseline: score(i) = sum of decay weights of the past
// interactions with i.
class DecayPopularity {
 public:
  DecayPopularity(std::span<const corpus::Interaction> history, double half_life_seconds);
  DecayPopularity(std::map<std::string, std::vector<Timestamp>> item_times,
                  double half_life_seconds);

  double score(const std::string& item, Timestamp now) const;
  double half_life() const { return half_life_; }
  const std::map<std::string, std::vector<Timestamp>>& item_times() const { return times_; }

 private:
  double half_life_;
  std::map<std::string, std::vector<Timestamp>> times_;  // sorted per item
};

std::string to_json(const DecayPopularity& model);
DecayPopularity decay_model_from_json(const std::string& text);

RankedList recommend_top_k(const DecayPopularity& model, const std::string& user,
                           std::span<const std::string> candidates, Timestamp timestamp,
                           std::size_t k);

}  // namespace newsrec::mf

#endif  // NEWSREC_TEMPORAL_MF_HPP
