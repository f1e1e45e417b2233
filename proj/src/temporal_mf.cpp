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

#include "newsrec/temporal_mf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "newsrec/rng.hpp"

namespace newsrec::mf {

namespace {

// Parameter slots an example touches; -1 means absent.
struct Resolved {
  std::int64_t user = -1;
  std::int64_t item = -1;
  std::array<int, 6> time{-1, -1, -1, -1, -1, -1};
  int category = -1;
  int subcategory = -1;
};

Resolved resolve(const MfModel& m, const std::string& user, const std::string& item, Timestamp ts) {
  Resolved r;
  r.user = m.users.find(user);
  r.item = m.items.find(item);
  if (!m.time_biases.empty()) {
    const auto t = corpus::decompose_timestamp(ts);
    for (std::size_t g = 0; g < m.time_biases.size(); ++g) r.time[g] = m.time_biases[g].index(t);
  }
  if (m.config.use_category || m.config.use_subcategory) {
    auto it = m.item_taxonomy.find(item);
    if (it != m.item_taxonomy.end()) {
      if (m.config.use_category) r.category = it->second.first;
      if (m.config.use_subcategory) r.subcategory = it->second.second;
    }
  }
  return r;
}

double dot_rows(const MfModel& m, std::int64_t u, std::int64_t i) {
  const auto k = static_cast<std::size_t>(m.config.n_factors);
  if (u < 0 || i < 0 || k == 0) return 0.0;
  const double* p = m.user_factors.data() + static_cast<std::size_t>(u) * k;
  const double* q = m.item_factors.data() + static_cast<std::size_t>(i) * k;
  double s = 0.0;
  for (std::size_t f = 0; f < k; ++f) s += p[f] * q[f];
  return s;
}

// Fixed summation order; a disabled or unknown term adds exactly 0.0.
double score_resolved(const MfModel& m, const Resolved& r) {
  double s = m.mu;
  s += r.user >= 0 ? m.user_bias[static_cast<std::size_t>(r.user)] : 0.0;
  s += r.item >= 0 ? m.item_bias[static_cast<std::size_t>(r.item)] : 0.0;
  for (std::size_t g = 0; g < m.time_biases.size(); ++g)
    s += r.time[g] >= 0 ? m.time_biases[g].bins[static_cast<std::size_t>(r.time[g])] : 0.0;
  s += r.category >= 0 ? m.category_bias[static_cast<std::size_t>(r.category)] : 0.0;
  s += r.subcategory >= 0 ? m.subcategory_bias[static_cast<std::size_t>(r.subcategory)] : 0.0;
  s += dot_rows(m, r.user, r.item);
  return s;
}

double regularizer(const MfModel& m, const Resolved& r) {
  const auto k = static_cast<std::size_t>(m.config.n_factors);
  double s = 0.0;
  if (r.user >= 0) {
    const auto u = static_cast<std::size_t>(r.user);
    s += m.user_bias[u] * m.user_bias[u];
    for (std::size_t f = 0; f < k; ++f) s += m.user_factors[u * k + f] * m.user_factors[u * k + f];
  }
  if (r.item >= 0) {
    const auto i = static_cast<std::size_t>(r.item);
    s += m.item_bias[i] * m.item_bias[i];
    for (std::size_t f = 0; f < k; ++f) s += m.item_factors[i * k + f] * m.item_factors[i * k + f];
  }
  for (std::size_t g = 0; g < m.time_biases.size(); ++g) {
    if (r.time[g] < 0) continue;
    const double c = m.time_biases[g].bins[static_cast<std::size_t>(r.time[g])];
    s += c * c;
  }
  if (r.category >= 0) s += std::pow(m.category_bias[static_cast<std::size_t>(r.category)], 2);
  if (r.subcategory >= 0)
    s += std::pow(m.subcategory_bias[static_cast<std::size_t>(r.subcategory)], 2);
  return s;
}

// Offsets of each parameter block inside MfModel::parameters().
struct Layout {
  std::size_t user_bias, item_bias, user_factors, item_factors, categories, subcategories, total;
  std::vector<std::size_t> time;
};

Layout layout_of(const MfModel& m) {
  Layout l;
  std::size_t o = 0;
  l.user_bias = o; o += m.user_bias.size();
  l.item_bias = o; o += m.item_bias.size();
  l.user_factors = o; o += m.user_factors.size();
  l.item_factors = o; o += m.item_factors.size();
  for (const auto& t : m.time_biases) {
    l.time.push_back(o);
    o += t.bins.size();
  }
  l.categories = o; o += m.category_bias.size();
  l.subcategories = o; o += m.subcategory_bias.size();
  l.total = o;
  return l;
}

// Adds d(0.5 e^2 + 0.5 lambda ||touched||^2)/d theta for one example into g.
void accumulate_gradient(const MfModel& m, const Layout& l, const Resolved& r, double target,
                         std::vector<double>& g) {
  const double lambda = m.config.l2_reg;
  const double e = target - score_resolved(m, r);
  const auto k = static_cast<std::size_t>(m.config.n_factors);
  if (r.user >= 0) {
    const auto u = static_cast<std::size_t>(r.user);
    g[l.user_bias + u] += -e + lambda * m.user_bias[u];
  }
  if (r.item >= 0) {
    const auto i = static_cast<std::size_t>(r.item);
    g[l.item_bias + i] += -e + lambda * m.item_bias[i];
  }
  for (std::size_t t = 0; t < m.time_biases.size(); ++t) {
    if (r.time[t] < 0) continue;
    const auto b = static_cast<std::size_t>(r.time[t]);
    g[l.time[t] + b] += -e + lambda * m.time_biases[t].bins[b];
  }
  if (r.category >= 0) {
    const auto c = static_cast<std::size_t>(r.category);
    g[l.categories + c] += -e + lambda * m.category_bias[c];
  }
  if (r.subcategory >= 0) {
    const auto c = static_cast<std::size_t>(r.subcategory);
    g[l.subcategories + c] += -e + lambda * m.subcategory_bias[c];
  }
  if (r.user >= 0) {
    const auto u = static_cast<std::size_t>(r.user);
    for (std::size_t f = 0; f < k; ++f) {
      const double p = m.user_factors[u * k + f];
      const double q = r.item >= 0 ? m.item_factors[static_cast<std::size_t>(r.item) * k + f] : 0.0;
      g[l.user_factors + u * k + f] += -e * q + lambda * p;
    }
  }
  if (r.item >= 0) {
    const auto i = static_cast<std::size_t>(r.item);
    for (std::size_t f = 0; f < k; ++f) {
      const double q = m.item_factors[i * k + f];
      const double p = r.user >= 0 ? m.user_factors[static_cast<std::size_t>(r.user) * k + f] : 0.0;
      g[l.item_factors + i * k + f] += -e * p + lambda * q;
    }
  }
}

void step_resolved(MfModel& m, const Resolved& r, double target) {
  const double eta = m.config.learning_rate;
  const double lambda = m.config.l2_reg;
  const double e = target - score_resolved(m, r);
  const auto k = static_cast<std::size_t>(m.config.n_factors);

  auto bump = [&](double& theta) { theta += eta * (e - lambda * theta); };
  if (r.user >= 0) bump(m.user_bias[static_cast<std::size_t>(r.user)]);
  if (r.item >= 0) bump(m.item_bias[static_cast<std::size_t>(r.item)]);
  for (std::size_t g = 0; g < m.time_biases.size(); ++g)
    if (r.time[g] >= 0) bump(m.time_biases[g].bins[static_cast<std::size_t>(r.time[g])]);
  if (r.category >= 0) bump(m.category_bias[static_cast<std::size_t>(r.category)]);
  if (r.subcategory >= 0) bump(m.subcategory_bias[static_cast<std::size_t>(r.subcategory)]);

  if (k == 0) return;
  if (r.user >= 0 && r.item >= 0) {
    double* p = m.user_factors.data() + static_cast<std::size_t>(r.user) * k;
    double* q = m.item_factors.data() + static_cast<std::size_t>(r.item) * k;
    for (std::size_t f = 0; f < k; ++f) {
      const double p_old = p[f];
      p[f] += eta * (e * q[f] - lambda * p[f]);
      q[f] += eta * (e * p_old - lambda * q[f]);
    }
  } else if (r.user >= 0) {
    double* p = m.user_factors.data() + static_cast<std::size_t>(r.user) * k;
    for (std::size_t f = 0; f < k; ++f) p[f] -= eta * lambda * p[f];
  } else if (r.item >= 0) {
    double* q = m.item_factors.data() + static_cast<std::size_t>(r.item) * k;
    for (std::size_t f = 0; f < k; ++f) q[f] -= eta * lambda * q[f];
  }
}

}  // namespace

void MfConfig::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (n_factors < 0) throw UsageError("n_factors must be >= 0");
  if (!(learning_rate > 0.0) || !finite(learning_rate)) throw UsageError("learning_rate must be > 0");
  if (!(l2_reg >= 0.0) || !finite(l2_reg)) throw UsageError("l2_reg must be >= 0");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (!(init_scale > 0.0) || !finite(init_scale)) throw UsageError("init_scale must be > 0");
  std::set<Granularity> seen(granularities.begin(), granularities.end());
  if (seen.size() != granularities.size()) throw UsageError("duplicate granularity");
}

int TimeBiasTable::index(const corpus::TimeDecomposition& t) const {
  int b = corpus::bin_of(t, granularity);
  if (granularity == Granularity::year) b -= first_year;
  return (b >= 0 && static_cast<std::size_t>(b) < bins.size()) ? b : -1;
}

double MfModel::score(const std::string& user, const std::string& item, Timestamp timestamp) const {
  return score_resolved(*this, resolve(*this, user, item, timestamp));
}

double MfModel::predict(const std::string& user, const std::string& item, Timestamp timestamp) const {
  const double s = score(user, item, timestamp);
  return config.clamp_predictions ? config.scale.clamp(s) : s;
}

std::vector<double*> MfModel::parameters() {
  std::vector<double*> out;
  for (auto& x : user_bias) out.push_back(&x);
  for (auto& x : item_bias) out.push_back(&x);
  for (auto& x : user_factors) out.push_back(&x);
  for (auto& x : item_factors) out.push_back(&x);
  for (auto& t : time_biases)
    for (auto& x : t.bins) out.push_back(&x);
  for (auto& x : category_bias) out.push_back(&x);
  for (auto& x : subcategory_bias) out.push_back(&x);
  return out;
}

MfModel initialize_model(const MfConfig& config, std::span<const RatingExample> train,
                         const corpus::Catalog* catalog) {
  config.validate();
  MfModel m;
  m.config = config;
  if (!train.empty()) {
    double sum = 0.0;
    for (const auto& ex : train) sum += ex.target;
    m.mu = sum / static_cast<double>(train.size());
  }
  for (const auto& ex : train) {
    m.users.add(ex.user_id);
    m.items.add(ex.item_id);
  }
  const auto k = static_cast<std::size_t>(config.n_factors);
  m.user_bias.assign(m.users.size(), 0.0);
  m.item_bias.assign(m.items.size(), 0.0);
  m.user_factors.resize(m.users.size() * k);
  m.item_factors.resize(m.items.size() * k);
  if (k > 0) {
    Rng rng(config.rng_seed);
    const double sd = config.init_scale / std::sqrt(static_cast<double>(k));
    for (auto& x : m.user_factors) x = sd * rng.normal();
    for (auto& x : m.item_factors) x = sd * rng.normal();
  }

  for (Granularity g : config.granularities) {
    TimeBiasTable table;
    table.granularity = g;
    if (auto n = corpus::bin_count(g)) {
      table.bins.assign(static_cast<std::size_t>(*n), 0.0);
    } else if (!train.empty()) {
      int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
      for (const auto& ex : train) {
        const int y = corpus::decompose_timestamp(ex.timestamp).year;
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
      table.first_year = lo;
      table.bins.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    }
    m.time_biases.push_back(std::move(table));
  }

  if (catalog && (config.use_category || config.use_subcategory)) {
    for (const auto& [id, item] : *catalog) {
      const int c = static_cast<int>(m.categories.add(item.category));
      const int s = item.subcategory.empty()
                        ? -1
                        : static_cast<int>(m.subcategories.add(item.category + "/" + item.subcategory));
      m.item_taxonomy.emplace(id, std::make_pair(c, s));
    }
  }
  m.category_bias.assign(config.use_category ? m.categories.size() : 0, 0.0);
  m.subcategory_bias.assign(config.use_subcategory ? m.subcategories.size() : 0, 0.0);
  return m;
}

double objective(const MfModel& model, std::span<const RatingExample> examples) {
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto r = resolve(model, ex.user_id, ex.item_id, ex.timestamp);
    const double e = ex.target - score_resolved(model, r);
    total += 0.5 * e * e + 0.5 * model.config.l2_reg * regularizer(model, r);
  }
  return total;
}

std::vector<double> gradient(const MfModel& model, std::span<const RatingExample> examples) {
  const Layout l = layout_of(model);
  std::vector<double> g(l.total, 0.0);
  for (const auto& ex : examples)
    accumulate_gradient(model, l, resolve(model, ex.user_id, ex.item_id, ex.timestamp), ex.target, g);
  return g;
}

void sgd_step(MfModel& model, const RatingExample& example) {
  step_resolved(model, resolve(model, example.user_id, example.item_id, example.timestamp),
                example.target);
}

void train_epochs(MfModel& model, std::span<const RatingExample> train) {
  if (train.empty()) throw DataError("empty training set");
  std::vector<Resolved> resolved;
  resolved.reserve(train.size());
  for (const auto& ex : train) resolved.push_back(resolve(model, ex.user_id, ex.item_id, ex.timestamp));

  auto mean_loss = [&] {
    double total = 0.0;
    for (std::size_t n = 0; n < train.size(); ++n) {
      const double e = train[n].target - score_resolved(model, resolved[n]);
      total += 0.5 * e * e + 0.5 * model.config.l2_reg * regularizer(model, resolved[n]);
    }
    return total / static_cast<double>(train.size());
  };

  double last_finite = mean_loss();
  Rng rng(derive_seed(model.config.rng_seed, "sgd-order"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  if (!model.config.reshuffle_each_epoch) rng.shuffle(order);

  for (int epoch = 1; epoch <= model.config.epochs; ++epoch) {
    if (model.config.reshuffle_each_epoch) rng.shuffle(order);
    for (std::size_t n : order) step_resolved(model, resolved[n], train[n].target);
    const double loss = mean_loss();
    if (!std::isfinite(loss)) throw DivergenceError(epoch, last_finite);
    model.epoch_loss.push_back(loss);
    last_finite = loss;
  }
}

MfModel train_sgd(const MfConfig& config, std::span<const RatingExample> train,
                  const corpus::Catalog* catalog) {
  if (train.empty()) throw DataError("empty training set");
  MfModel model = initialize_model(config, train, catalog);
  train_epochs(model, train);
  return model;
}

RankedList recommend_top_k(const MfModel& model, const std::string& user,
                           std::span<const std::string> candidates, Timestamp timestamp,
                           std::size_t k) {
  return rank_top_k(user, candidates,
                    [&](const std::string& item) { return model.score(user, item, timestamp); }, k);
}

// --- serialization -------------------------------------------------------

std::string to_json(const MfModel& m) {
  nlohmann::ordered_json j;
  j["type"] = "temporal-mf";
  auto& c = j["config"];
  c["n_factors"] = m.config.n_factors;
  c["learning_rate"] = m.config.learning_rate;
  c["l2_reg"] = m.config.l2_reg;
  c["epochs"] = m.config.epochs;
  std::vector<std::string> gs;
  for (auto g : m.config.granularities) gs.emplace_back(corpus::to_string(g));
  c["granularities"] = gs;
  c["use_category"] = m.config.use_category;
  c["use_subcategory"] = m.config.use_subcategory;
  c["rng_seed"] = m.config.rng_seed;
  c["init_scale"] = m.config.init_scale;
  c["rating_min"] = m.config.scale.min;
  c["rating_max"] = m.config.scale.max;
  c["clamp_predictions"] = m.config.clamp_predictions;
  c["reshuffle_each_epoch"] = m.config.reshuffle_each_epoch;

  j["mu"] = m.mu;
  j["users"] = m.users.ids();
  j["items"] = m.items.ids();
  j["user_bias"] = m.user_bias;
  j["item_bias"] = m.item_bias;
  j["user_factors"] = m.user_factors;
  j["item_factors"] = m.item_factors;
  auto tables = nlohmann::ordered_json::array();
  for (const auto& t : m.time_biases) {
    nlohmann::ordered_json tj;
    tj["granularity"] = corpus::to_string(t.granularity);
    tj["first_year"] = t.first_year;
    tj["bins"] = t.bins;
    tables.push_back(tj);
  }
  j["time_biases"] = tables;
  j["categories"] = m.categories.ids();
  j["subcategories"] = m.subcategories.ids();
  j["category_bias"] = m.category_bias;
  j["subcategory_bias"] = m.subcategory_bias;
  auto tax = nlohmann::ordered_json::array();
  for (const auto& [item, cs] : m.item_taxonomy) tax.push_back({item, cs.first, cs.second});
  j["item_taxonomy"] = tax;
  j["epoch_loss"] = m.epoch_loss;
  return j.dump();
}

MfModel mf_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("type", "") != "temporal-mf") throw DataError("not a temporal-mf model file");
  try {
    MfModel m;
    const auto& c = j.at("config");
    m.config.n_factors = c.at("n_factors").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.l2_reg = c.at("l2_reg").get<double>();
    m.config.epochs = c.at("epochs").get<int>();
    for (const auto& g : c.at("granularities")) {
      auto parsed = corpus::parse_granularity(g.get<std::string>());
      if (!parsed) throw DataError("unknown granularity in model file");
      m.config.granularities.push_back(*parsed);
    }
    m.config.use_category = c.at("use_category").get<bool>();
    m.config.use_subcategory = c.at("use_subcategory").get<bool>();
    m.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    m.config.init_scale = c.at("init_scale").get<double>();
    m.config.scale = {c.at("rating_min").get<double>(), c.at("rating_max").get<double>()};
    m.config.clamp_predictions = c.at("clamp_predictions").get<bool>();
    m.config.reshuffle_each_epoch = c.at("reshuffle_each_epoch").get<bool>();

    m.mu = j.at("mu").get<double>();
    for (const auto& id : j.at("users")) m.users.add(id.get<std::string>());
    for (const auto& id : j.at("items")) m.items.add(id.get<std::string>());
    m.user_bias = j.at("user_bias").get<std::vector<double>>();
    m.item_bias = j.at("item_bias").get<std::vector<double>>();
    m.user_factors = j.at("user_factors").get<std::vector<double>>();
    m.item_factors = j.at("item_factors").get<std::vector<double>>();
    for (const auto& tj : j.at("time_biases")) {
      TimeBiasTable t;
      t.granularity = *corpus::parse_granularity(tj.at("granularity").get<std::string>());
      t.first_year = tj.at("first_year").get<int>();
      t.bins = tj.at("bins").get<std::vector<double>>();
      m.time_biases.push_back(std::move(t));
    }
    for (const auto& id : j.at("categories")) m.categories.add(id.get<std::string>());
    for (const auto& id : j.at("subcategories")) m.subcategories.add(id.get<std::string>());
    m.category_bias = j.at("category_bias").get<std::vector<double>>();
    m.subcategory_bias = j.at("subcategory_bias").get<std::vector<double>>();
    for (const auto& row : j.at("item_taxonomy"))
      m.item_taxonomy.emplace(row.at(0).get<std::string>(),
                              std::make_pair(row.at(1).get<int>(), row.at(2).get<int>()));
    m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();

    const auto k = static_cast<std::size_t>(m.config.n_factors);
    if (m.user_bias.size() != m.users.size() || m.item_bias.size() != m.items.size() ||
        m.user_factors.size() != m.users.size() * k || m.item_factors.size() != m.items.size() * k ||
        m.time_biases.size() != m.config.granularities.size())
      throw DataError("inconsistent parameter shapes in model file");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

// --- decay baseline --------------------------------------------------------

double decay_weight(Timestamp t_now, Timestamp t_obs, double half_life_seconds) {
  if (!(half_life_seconds > 0.0)) throw std::invalid_argument("half_life must be > 0");
  if (t_now < t_obs) throw std::invalid_argument("t_now precedes t_obs");
  return std::exp2(-static_cast<double>(t_now - t_obs) / half_life_seconds);
}

DecayPopularity::DecayPopularity(std::span<const corpus::Interaction> history,
                                 double half_life_seconds)
    : half_life_(half_life_seconds) {
  if (!(half_life_seconds > 0.0)) throw std::invalid_argument("half_life must be > 0");
  for (const auto& x : history) times_[x.item_id].push_back(x.timestamp);
  for (auto& [item, ts] : times_) std::sort(ts.begin(), ts.end());
}

DecayPopularity::DecayPopularity(std::map<std::string, std::vector<Timestamp>> item_times,
                                 double half_life_seconds)
    : half_life_(half_life_seconds), times_(std::move(item_times)) {
  if (!(half_life_seconds > 0.0)) throw std::invalid_argument("half_life must be > 0");
  for (auto& [item, ts] : times_) std::sort(ts.begin(), ts.end());
}

std::string to_json(const DecayPopularity& model) {
  nlohmann::ordered_json j;
  j["type"] = "decay-baseline";
  j["half_life"] = model.half_life();
  nlohmann::ordered_json items = nlohmann::ordered_json::object();
  for (const auto& [item, ts] : model.item_times()) items[item] = ts;
  j["items"] = std::move(items);
  return j.dump();
}

DecayPopularity decay_model_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("type") != "decay-baseline") throw DataError("not a decay-baseline model file");
    std::map<std::string, std::vector<Timestamp>> times;
    for (const auto& [item, ts] : j.at("items").items()) times[item] = ts.get<std::vector<Timestamp>>();
    return DecayPopularity(std::move(times), j.at("half_life").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model file: ") + e.what());
  }
}

double DecayPopularity::score(const std::string& item, Timestamp now) const {
  auto it = times_.find(item);
  if (it == times_.end()) return 0.0;
  double s = 0.0;
  for (Timestamp t : it->second) {
    if (t > now) break;
    s += decay_weight(now, t, half_life_);
  }
  return s;
}

RankedList recommend_top_k(const DecayPopularity& model, const std::string& user,
                           std::span<const std::string> candidates, Timestamp timestamp,
                           std::size_t k) {
  return rank_top_k(user, candidates,
                    [&](const std::string& item) { return model.score(item, timestamp); }, k);
}

}  // namespace newsrec::mf
