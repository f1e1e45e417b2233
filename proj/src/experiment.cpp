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

#include "newsrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include <json.hpp>

#include "newsrec/features.hpp"
#include "newsrec/rng.hpp"

namespace newsrec::harness {

namespace fs = std::filesystem;
using corpus::Interaction;

namespace {

// Re-throws stage failures with the stage name prefixed, keeping the type.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DivergenceError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(std::string(name) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(name) + ": " + e.what());
  }
}

// Removes the files it tracks unless commit() was called.
class OutputGuard {
 public:
  void track(fs::path p) { paths_.push_back(std::move(p)); }
  void commit() { paths_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto& p : paths_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> paths_;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string cell_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu", index);
  return buf;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.catalog_path.empty() || cfg.interactions_path.empty())
    throw UsageError("data.catalog and data.interactions must be set");
  auto ds = corpus::load_dataset(cfg.catalog_path, cfg.interactions_path, cfg.scale, cfg.header);
  ExperimentData d;
  d.catalog = std::move(ds.catalog);
  d.interactions = std::move(ds.interactions);
  d.bad_lines = ds.tally.bad_lines;
  d.unknown_items = ds.tally.unknown_items;
  return d;
}

// --- models ----------------------------------------------------------------

ModelKind TrainedModel::kind() const {
  switch (model_.index()) {
    case 0: return ModelKind::temporal_mf;
    case 1: return ModelKind::diversity_glm;
    default: return ModelKind::decay_baseline;
  }
}

double TrainedModel::predict(const std::string& user, const std::string& item, Timestamp t) const {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, mf::MfModel>)
          return m.predict(user, item, t);
        else if constexpr (std::is_same_v<M, glm::GlmModel>)
          return m.predict(user, item);
        else
          return m.score(item, t);
      },
      model_);
}

RankedList TrainedModel::recommend(const std::string& user, std::span<const std::string> candidates,
                                   Timestamp t, std::size_t k) const {
  return std::visit(
      [&](const auto& m) -> RankedList {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, glm::GlmModel>)
          return glm::recommend_top_k(m, user, candidates, k);
        else
          return mf::recommend_top_k(m, user, candidates, t, k);
      },
      model_);
}

std::string TrainedModel::to_json() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, glm::GlmModel>)
          return glm::to_json(m);
        else
          return mf::to_json(m);
      },
      model_);
}

TrainedModel TrainedModel::from_json(const std::string& text) {
  std::string type;
  try {
    type = nlohmann::json::parse(text).at("type").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("not a model file: ") + e.what());
  }
  if (type == "temporal-mf") return TrainedModel(mf::mf_model_from_json(text));
  if (type == "diversity-glm") return TrainedModel(glm::glm_model_from_json(text));
  if (type == "decay-baseline") return TrainedModel(mf::decay_model_from_json(text));
  throw DataError("unknown model type '" + type + "'");
}

TrainedModel load_model(const fs::path& path) { return TrainedModel::from_json(read_text_file(path)); }

void save_model(const TrainedModel& model, const fs::path& path) {
  write_text_file(path, model.to_json() + "\n");
}

// --- pipeline stages -----------------------------------------------------------

TrainingSet build_training_set(const ExperimentConfig& cfg, std::span<const Interaction> train) {
  TrainingSet ts;
  const bool implicit = cfg.feedback == FeedbackMode::implicit_only;
  if (!implicit) {
    for (const auto& x : train) {
      if (x.is_rating())
        ts.examples.push_back({x.user_id, x.item_id, x.timestamp, x.value});
      else if (cfg.feedback == FeedbackMode::both)
        ts.examples.push_back({x.user_id, x.item_id, x.timestamp, cfg.click_rating});
    }
  }
  if (cfg.feedback != FeedbackMode::explicit_only) {
    const auto sessions = corpus::sessionize(train, cfg.session_gap);
    const sampling::ActivityIndex index(train);
    sampling::SamplingOptions opts;
    opts.negatives_per_positive = cfg.negatives_per_positive;
    opts.seed = cfg.effective_sampling_seed();
    opts.dedup = cfg.dedup;
    opts.window_seconds = cfg.fallback_window;
    auto sampled = sampling::sample_sessions(sessions, &index, opts);
    ts.sampling = sampled.stats;
    for (auto& p : sampled.pairs) {
      const bool pos = p.label == corpus::Label::positive;
      if (implicit)
        ts.examples.push_back({std::move(p.user_id), std::move(p.item_id), p.timestamp, pos ? 1.0 : 0.0});
      else if (!pos)
        ts.examples.push_back(
            {std::move(p.user_id), std::move(p.item_id), p.timestamp, cfg.effective_negative_rating()});
    }
  }
  return ts;
}

TrainedModel train_model(const ExperimentConfig& cfg, std::uint64_t model_seed,
                         const TrainingSet& training, std::span<const Interaction> train,
                         const corpus::Catalog& catalog) {
  if (cfg.model == ModelKind::decay_baseline)
    return TrainedModel(mf::DecayPopularity(train, cfg.decay_half_life));
  if (training.examples.empty()) throw DataError("no training examples for the selected feedback mode");
  if (cfg.model == ModelKind::temporal_mf)
    return TrainedModel(mf::train_sgd(cfg.mf_config(model_seed), training.examples, &catalog));
  return TrainedModel(glm::train_als(cfg.glm_config(model_seed), training.examples));
}

metrics::EvalInput build_eval_input(const ExperimentConfig& cfg, const TrainedModel& model,
                                    std::span<const Interaction> train,
                                    std::span<const Interaction> test, Timestamp split_timestamp,
                                    const corpus::Catalog& catalog) {
  metrics::EvalInput in;
  in.model = std::string(to_string(model.kind()));
  in.candidate_policy = std::string(to_string(cfg.candidates));

  if (model.predicts_ratings()) {
    if (cfg.feedback == FeedbackMode::implicit_only) {
      const auto sessions = corpus::sessionize(test, cfg.session_gap);
      const sampling::ActivityIndex index(test);
      sampling::SamplingOptions opts;
      opts.negatives_per_positive = cfg.negatives_per_positive;
      opts.seed = derive_seed(cfg.effective_sampling_seed(), "test-sampling");
      opts.dedup = cfg.dedup;
      opts.window_seconds = cfg.fallback_window;
      for (const auto& p : sampling::sample_sessions(sessions, &index, opts).pairs)
        in.predictions.emplace_back(model.predict(p.user_id, p.item_id, p.timestamp),
                                    p.label == corpus::Label::positive ? 1.0 : 0.0);
    } else {
      for (const auto& x : test)
        if (x.is_rating()) in.predictions.emplace_back(model.predict(x.user_id, x.item_id, x.timestamp), x.value);
    }
  }

  std::map<std::string, metrics::ItemSet> history;
  for (const auto& x : train) history[x.user_id].insert(x.item_id);

  std::map<std::string, metrics::ItemSet> relevant;
  std::set<std::string> window_items;
  for (const auto& x : test) {
    auto& rel = relevant[x.user_id];
    if (!x.is_rating() || x.value >= cfg.relevance_threshold) rel.insert(x.item_id);
    if (catalog.count(x.item_id)) window_items.insert(x.item_id);
  }

  std::vector<std::string> pool;
  if (cfg.candidates == CandidatePolicy::test_window) {
    pool.assign(window_items.begin(), window_items.end());
  } else {
    pool.reserve(catalog.size());
    for (const auto& [id, item] : catalog) pool.push_back(id);
  }

  const std::size_t max_k = *std::max_element(cfg.ks.begin(), cfg.ks.end());
  const Timestamp rank_time = split_timestamp + 1;
  std::vector<std::string> candidates;
  for (auto& [user, rel] : relevant) {
    auto h = history.find(user);
    if (h == history.end()) {
      ++in.skipped_cold_start;
      continue;
    }
    candidates.clear();
    for (const auto& item : pool)
      if (cfg.candidates == CandidatePolicy::all || !h->second.count(item)) candidates.push_back(item);
    metrics::UserRun run;
    run.user_id = user;
    run.ranking = model.recommend(user, candidates, rank_time, max_k);
    run.relevant = std::move(rel);
    run.history = h->second;
    in.users.push_back(std::move(run));
  }
  return in;
}

metrics::EvaluationReport evaluate_model(const ExperimentConfig& cfg, const TrainedModel& model,
                                         const corpus::SplitResult& split,
                                         const corpus::Catalog& catalog, std::size_t bad_lines) {
  auto input = build_eval_input(cfg, model, split.train, split.test, split.split_timestamp, catalog);
  input.bad_lines = bad_lines;
  const metrics::FeatureSpace features(catalog);
  return metrics::evaluate_run(input, features, metrics::EvalOptions{cfg.ks, cfg.w});
}

std::uint64_t cell_seed(std::uint64_t global_seed, std::size_t index) {
  return derive_seed(global_seed, static_cast<std::uint64_t>(index));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                std::uint64_t model_seed, bool validation) {
  stage("config", [&] { cfg.validate(); });
  auto split = stage("split", [&] {
    auto s = corpus::time_based_split(data.interactions, cfg.train_fraction);
    if (validation) s = corpus::time_based_split(s.train, 1.0 - cfg.validation_fraction);
    return s;
  });
  auto training = stage("sample", [&] { return build_training_set(cfg, split.train); });
  auto model = stage("train", [&] { return train_model(cfg, model_seed, training, split.train, data.catalog); });
  auto report = stage("evaluate", [&] { return evaluate_model(cfg, model, split, data.catalog, data.bad_lines); });
  return ExperimentResult{std::move(model), std::move(report), std::move(split), std::move(training)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  stage("config", [&] { cfg.validate(); });
  fs::create_directories(out);
  OutputGuard guard;
  guard.track(out / "resolved_config.txt");
  write_text_file(out / "resolved_config.txt", resolved_config(cfg));

  const auto data = stage("ingest", [&] { return load_experiment_data(cfg); });
  auto result = run_experiment(cfg, data, cell_seed(cfg.seed, 0));

  for (const char* name : {"model.json", "report.json", "per_user.csv", "objective.csv"})
    guard.track(out / name);
  stage("write", [&] {
    save_model(result.model, out / "model.json");
    write_text_file(out / "report.json", metrics::to_json(result.report));
    std::ostringstream per_user;
    metrics::write_per_user_csv(per_user, result.report);
    write_text_file(out / "per_user.csv", per_user.str());
    if (const auto* g = std::get_if<glm::GlmModel>(&result.model.get())) {
      std::ostringstream trace;
      glm::write_objective_csv(trace, *g);
      write_text_file(out / "objective.csv", trace.str());
    }
  });
  guard.commit();
  return result;
}

// --- sweeps -------------------------------------------------------------------

std::vector<SweepCell> expand_grid(const ExperimentConfig& cfg) {
  const auto& g = cfg.sweep;
  if (g.empty()) throw UsageError("sweep grid has no axes");
  const bool glm = cfg.model == ModelKind::diversity_glm;
  if (!glm && (!g.lambda.empty() || !g.alpha.empty() || !g.p.empty()))
    throw UsageError("lambda, alpha and p axes apply to diversity-glm only");
  if (!g.alpha.empty() && !g.p.empty()) throw UsageError("alpha and p axes are mutually exclusive");
  if (!g.granularities.empty() && cfg.model != ModelKind::temporal_mf)
    throw UsageError("granularities axis applies to temporal-mf only");
  if (!g.n_factors.empty() && cfg.model == ModelKind::decay_baseline)
    throw UsageError("n_factors axis does not apply to decay-baseline");
  if (g.evaluate_on != "validation" && g.evaluate_on != "test")
    throw UsageError("sweep.evaluate_on must be validation or test");

  // Each axis contributes at least one slot; an absent axis is a single nullopt.
  auto slots = [](const auto& v) {
    using T = typename std::decay_t<decltype(v)>::value_type;
    std::vector<std::optional<T>> s(v.begin(), v.end());
    if (s.empty()) s.emplace_back();
    return s;
  };
  const auto lambdas = slots(g.lambda);
  const auto alphas = slots(g.alpha);
  const auto ps = slots(g.p);
  const auto factors = slots(g.n_factors);
  const auto grans = slots(g.granularities);
  const auto ws = slots(g.w);

  std::vector<SweepCell> cells;
  for (const auto& l : lambdas)
    for (const auto& a : alphas)
      for (const auto& p : ps)
        for (const auto& nf : factors)
          for (const auto& gr : grans)
            for (const auto& w : ws) {
              SweepCell c;
              c.index = cells.size();
              c.seed = cell_seed(cfg.seed, c.index);
              c.config = cfg;
              c.config.jobs = 1;
              c.lambda = l;
              c.alpha = a;
              c.p = p;
              c.n_factors = nf;
              c.granularities = gr;
              c.w = w;
              auto& cc = c.config;
              if (l) cc.glm.spec.lambda = *l;
              if (a) {
                cc.glm_mode = "elastic_net";
                cc.glm_alpha = *a;
              }
              if (p) {
                cc.glm_mode = "lp";
                cc.glm_p = *p;
              }
              if (nf) (glm ? cc.glm.n_factors : cc.mf.n_factors) = *nf;
              if (gr) cc.mf.granularities = *gr;
              if (w) cc.w = *w;
              cells.push_back(std::move(c));
            }
  return cells;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data, int jobs,
                      const fs::path* out) {
  cfg.validate();
  auto cells = expand_grid(cfg);
  for (const auto& c : cells) c.config.validate();

  SweepResult result;
  result.ks = cfg.ks;
  result.k = cfg.ks.front();
  result.evaluate_on = cfg.sweep.evaluate_on;
  result.rows.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) result.rows[i].cell = std::move(cells[i]);
  const bool validation = cfg.sweep.evaluate_on == "validation";

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.rows.size(); i = next++) {
      auto& row = result.rows[i];
      try {
        auto r = run_experiment(row.cell.config, data, row.cell.seed, validation);
        if (out) {
          const auto dir = *out / "cells" / cell_dir_name(i);
          fs::create_directories(dir);
          write_text_file(dir / "resolved_config.txt", resolved_config(row.cell.config));
          write_text_file(dir / "report.json", metrics::to_json(r.report));
        }
        row.report = std::move(r.report);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), result.rows.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<double> f1, div;
  double best = 0.0;
  for (const auto& row : result.rows) {
    if (!row.report) continue;
    const auto ki = row.report->k_index(result.k);
    f1.push_back(row.report->f1[ki]);
    div.push_back(row.report->diversity[ki]);
    if (!result.best_cell || row.report->composite[ki] > best) {
      best = row.report->composite[ki];
      result.best_cell = row.cell.index;
    }
  }
  result.spearman_f1_diversity = metrics::spearman(f1, div);

  if (validation && result.best_cell) {
    const auto& cell = result.rows[*result.best_cell].cell;
    try {
      auto r = run_experiment(cell.config, data, cell.seed, false);
      if (out) {
        const auto dir = *out / "best";
        fs::create_directories(dir);
        write_text_file(dir / "resolved_config.txt", resolved_config(cell.config));
        save_model(r.model, dir / "model.json");
        write_text_file(dir / "report.json", metrics::to_json(r.report));
      }
      result.best_test_report = std::move(r.report);
    } catch (const std::exception& e) {
      result.best_error = e.what();
    }
  }

  if (out) {
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    write_text_file(*out / "sweep.csv", csv.str());
    write_text_file(*out / "summary.json", sweep_summary_json(result));
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  if (result.rows.empty()) return;
  const auto& first = result.rows.front().cell;
  out << "cell";
  if (first.lambda) out << ",lambda";
  if (first.alpha) out << ",alpha";
  if (first.p) out << ",p";
  if (first.n_factors) out << ",n_factors";
  if (first.granularities) out << ",granularities";
  if (first.w) out << ",w";
  out << ",seed,rmse";
  for (const char* m : {"precision", "recall", "f1", "diversity", "novelty", "composite"})
    for (auto k : result.ks) out << ',' << m << '@' << k;
  out << ",status,error\n";

  for (const auto& row : result.rows) {
    const auto& c = row.cell;
    out << c.index;
    if (c.lambda) out << ',' << format_double(*c.lambda);
    if (c.alpha) out << ',' << format_double(*c.alpha);
    if (c.p) out << ',' << format_double(*c.p);
    if (c.n_factors) out << ',' << *c.n_factors;
    if (c.granularities) out << ',' << csv_field(format_granularities(*c.granularities));
    if (c.w) out << ',' << format_double(*c.w);
    out << ',' << c.seed << ',';
    const auto& r = row.report;
    if (r && r->rmse) out << format_double(*r->rmse);
    for (auto field : {&metrics::EvaluationReport::precision, &metrics::EvaluationReport::recall,
                       &metrics::EvaluationReport::f1, &metrics::EvaluationReport::diversity,
                       &metrics::EvaluationReport::novelty, &metrics::EvaluationReport::composite})
      for (std::size_t ki = 0; ki < result.ks.size(); ++ki) {
        out << ',';
        if (r) out << format_double(((*r).*field)[ki]);
      }
    out << ',' << (r ? "ok" : "error") << ',' << csv_field(row.error) << '\n';
  }
}

std::string sweep_summary_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  std::size_t failed = 0;
  for (const auto& row : result.rows) failed += row.report ? 0 : 1;
  j["cells"] = result.rows.size();
  j["failed"] = failed;
  j["evaluate_on"] = result.evaluate_on;
  j["k"] = result.k;
  j["spearman_f1_diversity"] =
      result.spearman_f1_diversity ? nlohmann::ordered_json(*result.spearman_f1_diversity) : nullptr;
  if (result.best_cell) {
    const auto& r = *result.rows[*result.best_cell].report;
    j["best_cell"] = *result.best_cell;
    j["best_composite"] = r.composite[r.k_index(result.k)];
  } else {
    j["best_cell"] = nullptr;
  }
  if (result.best_test_report) {
    const auto& r = *result.best_test_report;
    j["best_test_f1"] = r.f1[r.k_index(result.k)];
    j["best_test_composite"] = r.composite[r.k_index(result.k)];
  }
  if (!result.best_error.empty()) j["best_error"] = result.best_error;
  return j.dump(2) + "\n";
}

}  // namespace newsrec::harness
