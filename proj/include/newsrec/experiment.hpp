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

#ifndef NEWSREC_EXPERIMENT_HPP
#define NEWSREC_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "newsrec/config.hpp"
#include "newsrec/corpus.hpp"
#include "newsrec/diversity_glm.hpp"
#include "newsrec/metrics.hpp"
#include "newsrec/sampling.hpp"
#include "newsrec/temporal_mf.hpp"

namespace newsrec::harness {

struct ExperimentData {
  corpus::Catalog catalog;
  std::vector<corpus::Interaction> interactions;
  std::size_t bad_lines = 0;
  std::size_t unknown_items = 0;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

// Any of the three model families behind one interface.
class TrainedModel {
 public:
  using Variant = std::variant<mf::MfModel, glm::GlmModel, mf::DecayPopularity>;

  explicit TrainedModel(Variant model) : model_(std::move(model)) {}

  ModelKind kind() const;
  bool predicts_ratings() const { return kind() != ModelKind::decay_baseline; }

  double predict(const std::string& user, const std::string& item, Timestamp t) const;
  RankedList recommend(const std::string& user, std::span<const std::string> candidates,
                       Timestamp t, std::size_t k) const;

  const Variant& get() const { return model_; }

  std::string to_json() const;
  static TrainedModel from_json(const std::string& text);

 private:
  Variant model_;
};

TrainedModel load_model(const std::filesystem::path& path);
void save_model(const TrainedModel& model, const std::filesystem::path& path);

struct TrainingSet {
  std::vector<RatingExample> examples;
  sampling::SamplingStats sampling;
};

// Targets per feedback mode: ratings as given; clicks at click_rating (both)
// or 1 (implicit); sampled negatives at the negative rating (both) or 0.
TrainingSet build_training_set(const ExperimentConfig& cfg, std::span<const corpus::Interaction> train);

TrainedModel train_model(const ExperimentConfig& cfg, std::uint64_t model_seed,
                         const TrainingSet& training, std::span<const corpus::Interaction> train,
                         const corpus::Catalog& catalog);

metrics::EvalInput build_eval_input(const ExperimentConfig& cfg, const TrainedModel& model,
                                    std::span<const corpus::Interaction> train,
                                    std::span<const corpus::Interaction> test,
                                    Timestamp split_timestamp, const corpus::Catalog& catalog);

metrics::EvaluationReport evaluate_model(const ExperimentConfig& cfg, const TrainedModel& model,
                                         const corpus::SplitResult& split,
                                         const corpus::Catalog& catalog, std::size_t bad_lines);

struct ExperimentResult {
  TrainedModel model;
  metrics::EvaluationReport report;
  corpus::SplitResult split;
  TrainingSet training;
};

// Seed of sweep cell `index`; single runs use cell 0.
std::uint64_t cell_seed(std::uint64_t global_seed, std::size_t index);

// ingest -> sessionize -> split -> sample -> train -> evaluate, in memory.
// `validation` scores on the tail of the train window instead of the test window.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                std::uint64_t model_seed, bool validation = false);

// Same, writing model.json, report.json, per_user.csv, resolved_config.txt
// (and objective.csv for diversity-glm) under `out`. Partial outputs are
// removed when a stage fails.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct SweepCell {
  std::size_t index = 0;
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::optional<double> lambda, alpha, p, w;
  std::optional<int> n_factors;
  std::optional<std::vector<corpus::Granularity>> granularities;
};

// Cartesian product in axis order lambda, alpha, p, n_factors, granularities, w
// (last axis fastest). Throws UsageError for axes the model does not have.
std::vector<SweepCell> expand_grid(const ExperimentConfig& cfg);

struct SweepRow {
  SweepCell cell;
  std::optional<metrics::EvaluationReport> report;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order
  std::vector<std::size_t> ks;
  std::size_t k = 10;  // cutoff used for the correlation and the best cell
  std::string evaluate_on;
  std::optional<double> spearman_f1_diversity;
  std::optional<std::size_t> best_cell;  // highest composite@k
  std::optional<metrics::EvaluationReport> best_test_report;  // validation sweeps only
  std::string best_error;
};

// Runs every cell on up to `jobs` threads. With `out`, each cell writes
// cells/cell_NNNN/report.json and the sweep writes sweep.csv and summary.json.
SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data, int jobs,
                      const std::filesystem::path* out = nullptr);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
std::string sweep_summary_json(const SweepResult& result);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace newsrec::harness

#endif  // NEWSREC_EXPERIMENT_HPP
