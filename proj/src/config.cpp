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

#include "newsrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include "newsrec/rng.hpp"

namespace newsrec::harness {

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::temporal_mf: return "temporal-mf";
    case ModelKind::diversity_glm: return "diversity-glm";
    case ModelKind::decay_baseline: return "decay-baseline";
  }
  return "?";
}

std::string_view to_string(FeedbackMode f) {
  switch (f) {
    case FeedbackMode::explicit_only: return "explicit";
    case FeedbackMode::implicit_only: return "implicit";
    case FeedbackMode::both: return "both";
  }
  return "?";
}

std::string_view to_string(CandidatePolicy c) {
  switch (c) {
    case CandidatePolicy::exclude_train: return "exclude_train";
    case CandidatePolicy::all: return "all";
    case CandidatePolicy::test_window: return "test_window";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto m : {ModelKind::temporal_mf, ModelKind::diversity_glm, ModelKind::decay_baseline})
    if (to_string(m) == s) return m;
  throw UsageError("unknown model '" + std::string(s) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view what, std::string_view value) {
  throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(what));
}

template <class T>
T parse_as(std::string_view v, std::string_view what);

template <>
double parse_as<double>(std::string_view v, std::string_view what) {
  double x{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(what, v);
  return x;
}

template <class Int>
Int parse_int(std::string_view v, std::string_view what) {
  Int x{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(what, v);
  return x;
}

template <>
int parse_as<int>(std::string_view v, std::string_view what) { return parse_int<int>(v, what); }
template <>
std::int64_t parse_as<std::int64_t>(std::string_view v, std::string_view what) {
  return parse_int<std::int64_t>(v, what);
}
template <>
std::uint64_t parse_as<std::uint64_t>(std::string_view v, std::string_view what) {
  return parse_int<std::uint64_t>(v, what);
}
template <>
bool parse_as<bool>(std::string_view v, std::string_view what) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(what, v);
}

template <>
std::string parse_as<std::string>(std::string_view v, std::string_view) { return std::string(v); }

template <class T>
std::vector<T> parse_list(std::string_view v, std::string_view what) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (auto part : split(v, ',')) out.push_back(parse_as<T>(part, what));
  return out;
}

std::string format(double v) { return format_double(v); }
std::string format(int v) { return std::to_string(v); }
std::string format(std::int64_t v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }

template <class T>
std::string format_list(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format(xs[i]);
  }
  return s;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T, class Ref>
Binding bind(std::string section, std::string key, Ref ref) {
  const std::string what = section + "." + key;
  return Binding{
      section, key,
      [ref, what](ExperimentConfig& c, std::string_view v) { ref(c) = parse_as<T>(v, what); },
      [ref](const ExperimentConfig& c) { return format(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <class T, class Ref>
Binding bind_list(std::string section, std::string key, Ref ref) {
  const std::string what = section + "." + key;
  return Binding{
      section, key,
      [ref, what](ExperimentConfig& c, std::string_view v) { ref(c) = parse_list<T>(v, what); },
      [ref](const ExperimentConfig& c) { return format_list(ref(const_cast<ExperimentConfig&>(c))); }};
}

Binding custom(std::string section, std::string key,
               std::function<void(ExperimentConfig&, std::string_view)> set,
               std::function<std::string(const ExperimentConfig&)> get) {
  return Binding{std::move(section), std::move(key), std::move(set), std::move(get)};
}

#define REF(expr) [](ExperimentConfig & c) -> auto& { return c.expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back(bind<std::string>("data", "catalog", REF(catalog_path)));
    b.push_back(bind<std::string>("data", "interactions", REF(interactions_path)));
    b.push_back(bind<bool>("data", "header", REF(header)));
    b.push_back(bind<double>("data", "rating_min", REF(scale.min)));
    b.push_back(bind<double>("data", "rating_max", REF(scale.max)));

    b.push_back(bind<std::int64_t>("corpus", "session_gap", REF(session_gap)));

    b.push_back(bind<double>("split", "train_fraction", REF(train_fraction)));
    b.push_back(bind<double>("split", "validation_fraction", REF(validation_fraction)));

    b.push_back(custom(
        "model", "name", [](ExperimentConfig& c, std::string_view v) { c.model = parse_model_kind(v); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.model)); }));
    b.push_back(custom(
        "model", "feedback",
        [](ExperimentConfig& c, std::string_view v) {
          for (auto f : {FeedbackMode::explicit_only, FeedbackMode::implicit_only, FeedbackMode::both})
            if (to_string(f) == v) {
              c.feedback = f;
              return;
            }
          bad_value("model.feedback", v);
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.feedback)); }));
    b.push_back(bind<double>("model", "click_rating", REF(click_rating)));
    b.push_back(custom(
        "model", "negative_rating",
        [](ExperimentConfig& c, std::string_view v) {
          c.negative_rating = parse_as<double>(v, "model.negative_rating");
        },
        [](const ExperimentConfig& c) { return format_double(c.effective_negative_rating()); }));

    b.push_back(bind<int>("temporal_mf", "n_factors", REF(mf.n_factors)));
    b.push_back(bind<double>("temporal_mf", "learning_rate", REF(mf.learning_rate)));
    b.push_back(bind<double>("temporal_mf", "l2_reg", REF(mf.l2_reg)));
    b.push_back(bind<int>("temporal_mf", "epochs", REF(mf.epochs)));
    b.push_back(custom(
        "temporal_mf", "granularities",
        [](ExperimentConfig& c, std::string_view v) { c.mf.granularities = parse_granularity_list(v); },
        [](const ExperimentConfig& c) { return format_granularities(c.mf.granularities); }));
    b.push_back(bind<bool>("temporal_mf", "use_category", REF(mf.use_category)));
    b.push_back(bind<bool>("temporal_mf", "use_subcategory", REF(mf.use_subcategory)));
    b.push_back(bind<double>("temporal_mf", "init_scale", REF(mf.init_scale)));
    b.push_back(bind<bool>("temporal_mf", "reshuffle_each_epoch", REF(mf.reshuffle_each_epoch)));

    b.push_back(bind<int>("diversity_glm", "n_factors", REF(glm.n_factors)));
    b.push_back(bind<double>("diversity_glm", "lambda", REF(glm.spec.lambda)));
    b.push_back(custom(
        "diversity_glm", "mode",
        [](ExperimentConfig& c, std::string_view v) {
          if (v != "elastic_net" && v != "lp") bad_value("diversity_glm.mode", v);
          c.glm_mode = std::string(v);
        },
        [](const ExperimentConfig& c) { return c.glm_mode; }));
    b.push_back(bind<double>("diversity_glm", "alpha", REF(glm_alpha)));
    b.push_back(bind<double>("diversity_glm", "p", REF(glm_p)));
    b.push_back(bind<double>("diversity_glm", "epsilon", REF(glm_epsilon)));
    b.push_back(bind<int>("diversity_glm", "outer_iters", REF(glm.outer_iters)));
    b.push_back(bind<double>("diversity_glm", "inner_tol", REF(glm.inner_tol)));
    b.push_back(bind<int>("diversity_glm", "inner_max_iter", REF(glm.inner_max_iter)));
    b.push_back(bind<int>("diversity_glm", "irls_iters", REF(glm.irls_iters)));
    b.push_back(bind<double>("diversity_glm", "intercept_damping", REF(glm.intercept_damping)));
    b.push_back(bind<double>("diversity_glm", "init_scale", REF(glm.init_scale)));
    b.push_back(bind<bool>("diversity_glm", "standardize", REF(glm.standardize)));

    b.push_back(bind<double>("decay", "half_life", REF(decay_half_life)));

    b.push_back(bind<int>("sampling", "ratio", REF(negatives_per_positive)));
    b.push_back(custom(
        "sampling", "seed",
        [](ExperimentConfig& c, std::string_view v) {
          c.sampling_seed = parse_as<std::uint64_t>(v, "sampling.seed");
        },
        [](const ExperimentConfig& c) { return std::to_string(c.effective_sampling_seed()); }));
    b.push_back(bind<bool>("sampling", "dedup", REF(dedup)));
    b.push_back(bind<std::int64_t>("sampling", "window", REF(fallback_window)));

    b.push_back(custom(
        "evaluation", "ks",
        [](ExperimentConfig& c, std::string_view v) {
          c.ks.clear();
          for (int k : parse_list<int>(v, "evaluation.ks")) {
            if (k < 1) bad_value("evaluation.ks", v);
            c.ks.push_back(static_cast<std::size_t>(k));
          }
        },
        [](const ExperimentConfig& c) {
          std::vector<std::uint64_t> ks(c.ks.begin(), c.ks.end());
          return format_list(ks);
        }));
    b.push_back(bind<double>("evaluation", "w", REF(w)));
    b.push_back(custom(
        "evaluation", "candidates",
        [](ExperimentConfig& c, std::string_view v) {
          for (auto p : {CandidatePolicy::exclude_train, CandidatePolicy::all, CandidatePolicy::test_window})
            if (to_string(p) == v) {
              c.candidates = p;
              return;
            }
          bad_value("evaluation.candidates", v);
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.candidates)); }));
    b.push_back(bind<double>("evaluation", "relevance_threshold", REF(relevance_threshold)));

    b.push_back(bind<std::uint64_t>("experiment", "seed", REF(seed)));
    b.push_back(bind<int>("experiment", "jobs", REF(jobs)));

    b.push_back(bind_list<double>("sweep", "lambda", REF(sweep.lambda)));
    b.push_back(bind_list<double>("sweep", "alpha", REF(sweep.alpha)));
    b.push_back(bind_list<double>("sweep", "p", REF(sweep.p)));
    b.push_back(bind_list<int>("sweep", "n_factors", REF(sweep.n_factors)));
    b.push_back(custom(
        "sweep", "granularities",
        [](ExperimentConfig& c, std::string_view v) {
          c.sweep.granularities.clear();
          if (trim(v).empty()) return;
          for (auto part : split(v, ';')) c.sweep.granularities.push_back(parse_granularity_list(part));
        },
        [](const ExperimentConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.sweep.granularities.size(); ++i) {
            if (i) s += "; ";
            s += format_granularities(c.sweep.granularities[i]);
          }
          return s;
        }));
    b.push_back(bind_list<double>("sweep", "w", REF(sweep.w)));
    b.push_back(custom(
        "sweep", "evaluate_on",
        [](ExperimentConfig& c, std::string_view v) {
          if (v != "validation" && v != "test") bad_value("sweep.evaluate_on", v);
          c.sweep.evaluate_on = std::string(v);
        },
        [](const ExperimentConfig& c) { return c.sweep.evaluate_on; }));

    b.push_back(bind<int>("synth", "n_users", REF(synth.n_users)));
    b.push_back(bind<int>("synth", "n_items", REF(synth.n_items)));
    b.push_back(bind<int>("synth", "n_interactions", REF(synth.n_interactions)));
    b.push_back(bind<int>("synth", "n_categories", REF(synth.n_categories)));
    b.push_back(bind<int>("synth", "subcategories_per_category", REF(synth.subcategories_per_category)));
    b.push_back(bind<std::int64_t>("synth", "start_timestamp", REF(synth.start_timestamp)));
    b.push_back(bind<int>("synth", "duration_days", REF(synth.duration_days)));
    b.push_back(bind<int>("synth", "max_session_items", REF(synth.max_session_items)));
    b.push_back(bind<double>("synth", "mu", REF(synth.mu)));
    b.push_back(bind<double>("synth", "user_bias_sd", REF(synth.user_bias_sd)));
    b.push_back(bind<double>("synth", "item_bias_sd", REF(synth.item_bias_sd)));
    b.push_back(bind<double>("synth", "category_sd", REF(synth.category_sd)));
    b.push_back(bind<double>("synth", "subcategory_sd", REF(synth.subcategory_sd)));
    b.push_back(bind<double>("synth", "affinity_sd", REF(synth.affinity_sd)));
    b.push_back(bind<int>("synth", "rank", REF(synth.rank)));
    b.push_back(bind<double>("synth", "factor_sd", REF(synth.factor_sd)));
    b.push_back(bind<double>("synth", "noise_sd", REF(synth.noise_sd)));
    b.push_back(bind<double>("synth", "hour_offset", REF(synth.hour_offset)));
    b.push_back(bind_list<int>("synth", "hour_offset_hours", REF(synth.hour_offset_hours)));
    b.push_back(bind<double>("synth", "dow_offset", REF(synth.dow_offset)));
    b.push_back(bind_list<int>("synth", "dow_offset_days", REF(synth.dow_offset_days)));
    b.push_back(bind<double>("synth", "popularity_exponent", REF(synth.popularity_exponent)));
    b.push_back(bind<double>("synth", "category_popularity_exponent", REF(synth.category_popularity_exponent)));
    b.push_back(bind<double>("synth", "choice_strength", REF(synth.choice_strength)));
    b.push_back(bind<double>("synth", "item_lifetime_hours", REF(synth.item_lifetime_hours)));
    b.push_back(bind<double>("synth", "explicit_fraction", REF(synth.explicit_fraction)));
    b.push_back(bind<double>("synth", "rating_min", REF(synth.scale.min)));
    b.push_back(bind<double>("synth", "rating_max", REF(synth.scale.max)));
    b.push_back(bind<bool>("synth", "clamp_ratings", REF(synth.clamp_ratings)));
    b.push_back(bind<std::uint64_t>("synth", "seed", REF(synth.seed)));
    return b;
  }();
  return table;
}

#undef REF

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<corpus::Granularity> parse_granularity_list(std::string_view s) {
  std::vector<corpus::Granularity> out;
  s = trim(s);
  if (s.empty() || s == "none") return out;
  for (auto part : split(s, ',')) {
    auto g = corpus::parse_granularity(part);
    if (!g) bad_value("granularity", part);
    if (std::find(out.begin(), out.end(), *g) != out.end()) bad_value("granularity (duplicate)", part);
    out.push_back(*g);
  }
  return out;
}

std::string format_granularities(const std::vector<corpus::Granularity>& gs) {
  if (gs.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (i) s += ",";
    s += corpus::to_string(gs[i]);
  }
  return s;
}

std::size_t SweepGrid::cell_count() const {
  auto n = [](std::size_t sz) { return std::max<std::size_t>(sz, 1); };
  return n(lambda.size()) * n(alpha.size()) * n(p.size()) * n(n_factors.size()) *
         n(granularities.size()) * n(w.size());
}

bool SweepGrid::empty() const {
  return lambda.empty() && alpha.empty() && p.empty() && n_factors.empty() &&
         granularities.empty() && w.empty();
}

std::uint64_t ExperimentConfig::effective_sampling_seed() const {
  return sampling_seed.value_or(derive_seed(seed, "sampling"));
}

mf::MfConfig ExperimentConfig::mf_config(std::uint64_t model_seed) const {
  mf::MfConfig c = mf;
  c.rng_seed = model_seed;
  c.scale = scale;
  c.clamp_predictions = feedback != FeedbackMode::implicit_only;
  return c;
}

glm::GlmConfig ExperimentConfig::glm_config(std::uint64_t model_seed) const {
  glm::GlmConfig c = glm;
  c.rng_seed = model_seed;
  c.scale = scale;
  c.clamp_predictions = feedback != FeedbackMode::implicit_only;
  if (glm_mode == "lp")
    c.spec.mode = glm::LpNorm{glm_p, glm_epsilon};
  else
    c.spec.mode = glm::ElasticNet{glm_alpha};
  c.jobs = jobs;
  return c;
}

void ExperimentConfig::validate() const {
  if (!(scale.min < scale.max)) throw UsageError("rating_min must be below rating_max");
  if (session_gap <= 0) throw UsageError("session_gap must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train_fraction must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw UsageError("validation_fraction must lie in (0, 1)");
  if (negatives_per_positive < 1) throw UsageError("sampling.ratio must be >= 1");
  if (fallback_window < 0) throw UsageError("sampling.window must be >= 0");
  if (ks.empty()) throw UsageError("evaluation.ks must not be empty");
  if (!(w >= 0.0 && w <= 1.0)) throw UsageError("evaluation.w must lie in [0, 1]");
  if (!(decay_half_life > 0.0)) throw UsageError("decay.half_life must be > 0");
  if (jobs < 1) throw UsageError("jobs must be >= 1");
  mf_config(0).validate();
  glm_config(0).validate();
}

void set_value(ExperimentConfig& cfg, std::string_view section, std::string_view key,
               std::string_view value) {
  for (const auto& b : bindings()) {
    if (b.section == section && b.key == key) {
      b.set(cfg, trim(value));
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(section) + "." + std::string(key) + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError("line " + std::to_string(line_no) + ": bad section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw UsageError("line " + std::to_string(line_no) + ": key outside a [section]");
    try {
      set_value(cfg, section, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::string resolved_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& b : bindings()) {
    if (b.section != section) {
      if (!section.empty()) out << '\n';
      section = b.section;
      out << '[' << section << "]\n";
    }
    out << b.key << " = " << b.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace newsrec::harness
