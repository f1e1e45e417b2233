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

#ifndef NEWSREC_SYNTH_HPP
#define NEWSREC_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "newsrec/common.hpp"
#include "newsrec/corpus.hpp"

namespace newsrec::synth {

// Planted-signal parameters. Every rating is
//   mu + b_u + b_i + cat_c + sub_s + aff_{u,c} + p_u.q_i
//      + hour offset + day-of-week offset + noise
// with every component quantized to 1/1024 so sums are exact in binary.
struct SynthSpec {
  int n_users = 500;
  int n_items = 2000;
  int n_interactions = 50000;
  int n_categories = 8;
  int subcategories_per_category = 3;
  Timestamp start_timestamp = 1572566400;  // 2019-11-01T00:00:00Z
  int duration_days = 60;
  int max_session_items = 5;

  double mu = 3.0;
  double user_bias_sd = 0.3;
  double item_bias_sd = 0.3;
  double category_sd = 0.0;      // global per-category offset
  double subcategory_sd = 0.0;   // global per-subcategory offset
  double affinity_sd = 0.0;      // per-(user, category) offset
  int rank = 0;                  // latent dimension of p_u.q_i
  double factor_sd = 0.5;
  double noise_sd = 0.5;

  double hour_offset = 0.0;
  std::vector<int> hour_offset_hours{19};
  double dow_offset = 0.0;
  std::vector<int> dow_offset_days{5, 6};  // Monday = 0

  // Item i is drawn with weight (popularity rank)^-exponent times
  // exp(choice_strength * preference(u, i)).
  double popularity_exponent = 0.0;
  // Extra weight (category index + 1)^-exponent, so popular items cluster
  // in a few topics.
  double category_popularity_exponent = 0.0;
  double choice_strength = 0.0;
  // 0: every item is available all the time; otherwise items are published
  // across the span and can be read for this many hours.
  double item_lifetime_hours = 0.0;

  // Share of interactions emitted as ratings; the rest are clicks.
  double explicit_fraction = 1.0;

  RatingScale scale{1.0, 5.0};
  bool clamp_ratings = true;
  std::uint64_t seed = 7;

  void validate() const;
};

struct GroundTruth {
  // parallel to the generated interactions
  std::vector<double> base;      // everything but temporal offsets and noise
  std::vector<double> temporal;  // hour + day-of-week offsets
  std::vector<double> category_offset;
  std::vector<double> subcategory_offset;
};

struct SynthData {
  corpus::Catalog catalog;
  std::vector<corpus::Interaction> interactions;  // chronological
  GroundTruth truth;
};

SynthData generate(const SynthSpec& spec);

// Writes catalog.tsv, interactions.tsv and truth.tsv into dir.
void write_dataset(const SynthData& data, const std::filesystem::path& dir);

}  // namespace newsrec::synth

#endif  // NEWSREC_SYNTH_HPP
