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

// newsrec: batch front end for ingestion, training, evaluation and sweeps.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 training divergence.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "newsrec/config.hpp"
#include "newsrec/corpus.hpp"
#include "newsrec/experiment.hpp"
#include "newsrec/metrics.hpp"
#include "newsrec/sampling.hpp"
#include "newsrec/synth.hpp"

namespace fs = std::filesystem;
using namespace newsrec;
using namespace newsrec::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string model;
  std::string k;
  std::optional<double> w;
  bool header = false;
  std::vector<std::string> sets;
  std::string model_file;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--jobs", o.jobs, "worker threads");
  cmd->add_option("--model", o.model, "temporal-mf | diversity-glm | decay-baseline");
  cmd->add_option("--k", o.k, "comma-separated cutoffs");
  cmd->add_option("--w", o.w, "accuracy weight of the composite score");
  cmd->add_flag("--header", o.header, "input TSVs start with a header line");
  cmd->add_option("--set", o.sets, "override one setting: section.key=value");
}

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    const auto dot = s.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw UsageError("--set expects section.key=value, got '" + s + "'");
    set_value(cfg, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
  }
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.synth.seed = *o.seed;
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  if (!o.model.empty()) cfg.model = parse_model_kind(o.model);
  if (!o.k.empty()) set_value(cfg, "evaluation", "ks", o.k);
  if (o.w) cfg.w = *o.w;
  if (o.header) cfg.header = true;
  cfg.validate();
  return cfg;
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required for this command");
  fs::create_directories(o.out);
  return o.out;
}

// Writes to <out>/<name> when --out is given, else to stdout.
void emit(const Options& o, const std::string& name, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(o.out);
  write_text_file(fs::path(o.out) / name, text);
}

corpus::SplitResult split_data(const ExperimentConfig& cfg, const ExperimentData& data) {
  return corpus::time_based_split(data.interactions, cfg.train_fraction);
}

std::string tally_json(const ExperimentData& d) {
  std::ostringstream s;
  s << "{\n  \"items\": " << d.catalog.size() << ",\n  \"interactions\": " << d.interactions.size()
    << ",\n  \"bad_lines\": " << d.bad_lines << ",\n  \"unknown_items\": " << d.unknown_items << "\n}\n";
  return s.str();
}

int cmd_ingest(const Options& o) {
  const auto cfg = build_config(o);
  const auto data = load_experiment_data(cfg);
  if (!o.out.empty()) {
    const auto out = require_out(o);
    std::ostringstream cat, log;
    corpus::write_catalog(cat, data.catalog);
    corpus::write_interactions(log, data.interactions);
    write_text_file(out / "catalog.tsv", cat.str());
    write_text_file(out / "interactions.tsv", log.str());
  }
  emit(o, "tally.json", tally_json(data));
  return kExitOk;
}

int cmd_profile(const Options& o) {
  const auto cfg = build_config(o);
  const auto data = load_experiment_data(cfg);
  emit(o, "profile.json", corpus::to_json(corpus::profile_time_series(data.interactions)));
  return kExitOk;
}

int cmd_split(const Options& o) {
  const auto cfg = build_config(o);
  const auto out = require_out(o);
  const auto data = load_experiment_data(cfg);
  const auto split = split_data(cfg, data);
  std::ostringstream train, test;
  corpus::write_interactions(train, split.train);
  corpus::write_interactions(test, split.test);
  write_text_file(out / "train.tsv", train.str());
  write_text_file(out / "test.tsv", test.str());
  std::cout << "split_timestamp " << split.split_timestamp << "  train " << split.train.size()
            << "  test " << split.test.size() << '\n';
  return kExitOk;
}

int cmd_sample(const Options& o) {
  const auto cfg = build_config(o);
  const auto out = require_out(o);
  const auto data = load_experiment_data(cfg);
  const auto split = split_data(cfg, data);
  const auto sessions = corpus::sessionize(split.train, cfg.session_gap);
  const sampling::ActivityIndex index(split.train);
  sampling::SamplingOptions opts;
  opts.negatives_per_positive = cfg.negatives_per_positive;
  opts.seed = cfg.effective_sampling_seed();
  opts.dedup = cfg.dedup;
  opts.window_seconds = cfg.fallback_window;
  const auto result = sampling::sample_sessions(sessions, &index, opts);
  std::ostringstream pairs;
  sampling::write_pairs(pairs, result.pairs);
  write_text_file(out / "pairs.tsv", pairs.str());
  const auto& st = result.stats;
  std::cout << "sessions " << st.sessions << "  positives " << st.positives << "  negatives "
            << st.negatives << "  empty_pool " << st.empty_pool_sessions << "  small_pool "
            << st.small_pool_sessions << '\n';
  return kExitOk;
}

int cmd_train(const Options& o) {
  const auto cfg = build_config(o);
  const auto out = require_out(o);
  write_text_file(out / "resolved_config.txt", resolved_config(cfg));
  const auto data = load_experiment_data(cfg);
  const auto split = split_data(cfg, data);
  const auto training = build_training_set(cfg, split.train);
  const auto model = train_model(cfg, cell_seed(cfg.seed, 0), training, split.train, data.catalog);
  save_model(model, out / "model.json");
  if (const auto* g = std::get_if<glm::GlmModel>(&model.get())) {
    std::ostringstream trace;
    glm::write_objective_csv(trace, *g);
    write_text_file(out / "objective.csv", trace.str());
  }
  std::cout << "trained " << to_string(model.kind()) << " on " << training.examples.size()
            << " examples\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  if (o.model_file.empty()) throw UsageError("--model-file is required");
  const auto cfg = build_config(o);
  const auto model = load_model(o.model_file);
  const auto data = load_experiment_data(cfg);
  const auto split = split_data(cfg, data);
  const auto report = evaluate_model(cfg, model, split, data.catalog, data.bad_lines);
  emit(o, "report.json", metrics::to_json(report));
  if (!o.out.empty()) {
    std::ostringstream per_user;
    metrics::write_per_user_csv(per_user, report);
    write_text_file(fs::path(o.out) / "per_user.csv", per_user.str());
  }
  return kExitOk;
}

void print_report(std::ostream& os, const metrics::EvaluationReport& r) {
  os << "model " << r.model << "  candidates " << r.candidate_policy << "  w "
     << format_double(r.w) << '\n';
  os << "rmse " << (r.rmse ? format_double(*r.rmse) : std::string("n/a")) << "  users "
     << r.counts.evaluated_users << "  cold-start " << r.counts.skipped_cold_start
     << "  no-relevant " << r.counts.skipped_no_relevant << "  bad lines " << r.counts.bad_lines
     << '\n';
  os << std::left << std::setw(6) << "k";
  for (const char* h : {"precision", "recall", "f1", "diversity", "novelty", "composite"})
    os << std::setw(12) << h;
  os << '\n' << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < r.k_values.size(); ++i) {
    os << std::setw(6) << r.k_values[i];
    for (double v : {r.precision[i], r.recall[i], r.f1[i], r.diversity[i], r.novelty[i], r.composite[i]})
      os << std::setw(12) << v;
    os << '\n';
  }
  os.unsetf(std::ios::fixed);
  os << std::setprecision(6);
}

int cmd_run(const Options& o) {
  const auto cfg = build_config(o);
  const auto result = run_experiment(cfg, require_out(o));
  print_report(std::cout, result.report);
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto cfg = build_config(o);
  const auto out = require_out(o);
  const auto cells = expand_grid(cfg);
  std::cout << "sweep: " << cells.size() << " cells, evaluated on " << cfg.sweep.evaluate_on << '\n'
            << std::flush;
  write_text_file(out / "resolved_config.txt", resolved_config(cfg));
  const auto data = load_experiment_data(cfg);
  const auto result = run_sweep(cfg, data, cfg.jobs, &out);
  std::size_t failed = 0;
  for (const auto& row : result.rows)
    if (!row.report) {
      ++failed;
      std::cerr << "cell " << row.cell.index << " failed: " << row.error << '\n';
    }
  std::cout << "done: " << result.rows.size() - failed << " ok, " << failed << " failed";
  if (result.spearman_f1_diversity)
    std::cout << "; spearman(f1@" << result.k << ", diversity@" << result.k
              << ") = " << format_double(*result.spearman_f1_diversity);
  std::cout << '\n';
  return kExitOk;
}

int cmd_synth(const Options& o) {
  const auto cfg = build_config(o);
  const auto out = require_out(o);
  const auto data = synth::generate(cfg.synth);
  synth::write_dataset(data, out);
  std::cout << "wrote " << data.catalog.size() << " items, " << data.interactions.size()
            << " interactions to " << out.string() << '\n';
  return kExitOk;
}

int cmd_report(const Options& o) {
  if (o.inputs.empty()) throw UsageError("report expects one or more report.json files");
  for (const auto& path : o.inputs) {
    std::cout << "== " << path << '\n';
    print_report(std::cout, metrics::report_from_json(read_text_file(path)));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"newsrec: temporal and diversity-aware news recommendation experiments"};
  app.require_subcommand(1);
  Options o;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Command commands[] = {
      {"ingest", "parse and validate the data files; report the tally", cmd_ingest},
      {"profile", "hour / weekday / month histograms of the interaction log", cmd_profile},
      {"split", "time-based train/test split", cmd_split},
      {"sample", "label implicit feedback and draw session negatives", cmd_sample},
      {"train", "train the configured model and save it", cmd_train},
      {"evaluate", "evaluate a saved model on the test window", cmd_evaluate},
      {"run", "train and evaluate in one go", cmd_run},
      {"sweep", "grid sweep over model hyperparameters", cmd_sweep},
      {"synth", "generate a synthetic dataset with planted signals", cmd_synth},
      {"report", "print saved report files", cmd_report},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    if (std::string_view(c.name) == "evaluate")
      sub->add_option("--model-file", o.model_file, "model.json written by train or run");
    if (std::string_view(c.name) == "report") sub->add_option("files", o.inputs, "report.json files");
    sub->callback([&selected, fn = c.fn] { selected = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return selected(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
