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

#ifndef NEWSREC_CONFIG_HPP
#define NEWSREC_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsrec/common.hpp"
#include "newsrec/corpus.hpp"
#include "newsrec/diversity_glm.hpp"
#include "newsrec/synth.hpp"
#include "newsrec/temporal_mf.hpp"

namespace newsrec::harness {

enum class ModelKind { temporal_mf, diversity_glm, decay_baseline };
enum class FeedbackMode { explicit_only, implicit_only, both };
enum class CandidatePolicy { exclude_train, all, test_window };

std::string_view to_string(ModelKind m);
std::string_view to_string(FeedbackMode f);
std::string_view to_string(CandidatePolicy c);
ModelKind parse_model_kind(std::string_view s);

struct SweepGrid {
  std::vector<double> lambda;
  std::vector<double> alpha;
  std::vector<double> p;
  std::vector<int> n_factors;
  std::vector<std::vector<corpus::Granularity>> granularities;
  std::vector<double> w;
  // "validation": cells are scored on the tail of the train window;
  // "test": on the held-out test window.
  std::string evaluate_on = "validation";

  std::size_t cell_count() const;
  bool empty() const;
};

struct ExperimentConfig {
  // [data]
  std::string catalog_path;
  std::string interactions_path;
  bool header = false;
  RatingScale scale;

  // [corpus]
  Timestamp session_gap = 1800;

  // [split]
  double train_fraction = 0.8;
  double validation_fraction = 0.1;

  // [model]
  ModelKind model = ModelKind::temporal_mf;
  FeedbackMode feedback = FeedbackMode::explicit_only;
  double click_rating = 4.0;
  std::optional<double> negative_rating;  // default: scale.min

  // Model seeds and rating scales are filled in by mf_config()/glm_config().
  mf::MfConfig mf;
  glm::GlmConfig glm;
  std::string glm_mode = "elastic_net";  // or "lp"
  double glm_alpha = 0.5;
  double glm_p = 1.0;
  double glm_epsilon = 1e-6;
  double decay_half_life = 86400.0;

  // [sampling]
  int negatives_per_positive = 4;
  std::optional<std::uint64_t> sampling_seed;  // default: derived from seed
  bool dedup = false;
  Timestamp fallback_window = 86400;

  // [evaluation]
  std::vector<std::size_t> ks{10, 20, 50};
  double w = 0.5;
  CandidatePolicy candidates = CandidatePolicy::exclude_train;
  double relevance_threshold = 3.5;

  // [experiment]
  std::uint64_t seed = 42;
  int jobs = 1;

  SweepGrid sweep;
  synth::SynthSpec synth;

  mf::MfConfig mf_config(std::uint64_t model_seed) const;
  glm::GlmConfig glm_config(std::uint64_t model_seed) const;
  double effective_negative_rating() const { return negative_rating.value_or(scale.min); }
  std::uint64_t effective_sampling_seed() const;
  void validate() const;
};

// Plain-text `key = value` lines under `[section]` headers; `#` starts a
// comment. Keys not listed in the resolved echo are rejected.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Applies one `section.key = value` setting; throws UsageError on unknown keys.
void set_value(ExperimentConfig& cfg, std::string_view section, std::string_view key,
               std::string_view value);

// Every effective setting, in a form parse_config reads back.
std::string resolved_config(const ExperimentConfig& cfg);

std::vector<corpus::Granularity> parse_granularity_list(std::string_view s);
std::string format_granularities(const std::vector<corpus::Granularity>& gs);
std::string format_double(double v);

}  // namespace newsrec::harness

#endif  // NEWSREC_CONFIG_HPP
