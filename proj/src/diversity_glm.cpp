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

#include "newsrec/diversity_glm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "newsrec/rng.hpp"

namespace newsrec::glm {

void RegularizationSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (const auto* en = std::get_if<ElasticNet>(&mode)) {
    if (!(en->alpha >= 0.0 && en->alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  } else {
    const auto& lp = std::get<LpNorm>(mode);
    if (!(lp.p > 0.0 && lp.p <= 2.0)) throw UsageError("p must lie in (0, 2]");
    if (!(lp.epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  }
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, double lambda, double alpha) {
  const double n = static_cast<double>(X.rows());
  const double loss = (y - X * w).squaredNorm() / (2.0 * n);
  return loss + lambda * (alpha * w.lpNorm<1>() + 0.5 * (1.0 - alpha) * w.squaredNorm());
}

CdResult elastic_net_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        double alpha, const CdOptions& options, const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("elastic_net_cd needs n >= 1 and d >= 1");
  if (y.size() != n) throw std::invalid_argument("elastic_net_cd: X and y disagree on n");
  if (!(lambda >= 0.0) || !(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("elastic_net_cd: lambda >= 0 and alpha in [0, 1] required");

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd Xs;
  const Eigen::MatrixXd* design = &X;
  if (options.standardize) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double ms = X.col(j).squaredNorm() * inv_n;
      scale(j) = ms > 0.0 ? std::sqrt(ms) : 1.0;
    }
    Xs = X * scale.cwiseInverse().asDiagonal();
    design = &Xs;
  }
  const Eigen::MatrixXd& A = *design;

  CdResult res;
  res.coef = Eigen::VectorXd::Zero(d);
  if (warm_start) res.coef = warm_start->cwiseProduct(scale);

  Eigen::VectorXd col_ms(d);
  for (Eigen::Index j = 0; j < d; ++j) col_ms(j) = A.col(j).squaredNorm() * inv_n;

  Eigen::VectorXd resid = y - A * res.coef;
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);

  for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double old = res.coef(j);
      double updated = 0.0;
      if (col_ms(j) > 0.0) {
        const double rho = A.col(j).dot(resid) * inv_n + col_ms(j) * old;
        updated = soft_threshold(rho, l1) / (col_ms(j) + l2);
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        resid.noalias() -= delta * A.col(j);
        res.coef(j) = updated;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    res.sweeps = sweep;
    if (options.record_objective)
      res.objective_trace.push_back(elastic_net_objective(A, y, res.coef, lambda, alpha));
    if (max_delta < options.tol) {
      res.converged = true;
      break;
    }
  }
  res.coef = res.coef.cwiseQuotient(scale);
  return res;
}

double lp_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double p, double lambda, double epsilon) {
  const double n = static_cast<double>(X.rows());
  double pen = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) pen += std::pow(w(j) * w(j) + epsilon, p / 2.0);
  return (y - X * w).squaredNorm() / (2.0 * n) + lambda / p * pen;
}

namespace {

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, bool& jittered) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd x = llt.solve(b);
    if (x.allFinite()) return x;
  }
  jittered = true;
  Eigen::MatrixXd B = A;
  B.diagonal().array() += 1e-10;
  return B.ldlt().solve(b);
}

}  // namespace

IrlsResult irls_lp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p, double lambda,
                   double epsilon, int outer_iters) {
  if (X.rows() < 1 || X.cols() < 1 || y.size() != X.rows())
    throw std::invalid_argument("irls_lp: bad shapes");
  if (!(p > 0.0 && p <= 2.0) || !(epsilon > 0.0) || !(lambda >= 0.0))
    throw std::invalid_argument("irls_lp: need p in (0, 2], epsilon > 0, lambda >= 0");

  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd gram = X.transpose() * X / n;
  const Eigen::VectorXd rhs = X.transpose() * y / n;

  IrlsResult res;
  Eigen::MatrixXd A = gram;
  A.diagonal().array() += lambda;
  res.coef = solve_spd(A, rhs, res.jittered);

  const double exponent = (p - 2.0) / 2.0;
  for (int t = 0; t < outer_iters; ++t) {
    A = gram;
    for (Eigen::Index j = 0; j < res.coef.size(); ++j)
      A(j, j) += lambda * std::pow(res.coef(j) * res.coef(j) + epsilon, exponent);
    res.coef = solve_spd(A, rhs, res.jittered);
    res.iterations = t + 1;
  }
  return res;
}

void GlmConfig::validate() const {
  spec.validate();
  if (n_factors < 1) throw UsageError("n_factors must be >= 1");
  if (outer_iters < 1 || inner_max_iter < 1 || irls_iters < 0)
    throw UsageError("iteration counts must be positive");
  if (!(inner_tol > 0.0)) throw UsageError("inner_tol must be > 0");
  if (!(intercept_damping >= 0.0)) throw UsageError("intercept_damping must be >= 0");
  if (!(init_scale > 0.0)) throw UsageError("init_scale must be > 0");
  if (jobs < 1) throw UsageError("jobs must be >= 1");
}

double GlmModel::score(const std::string& user, const std::string& item) const {
  const auto u = users.find(user);
  const auto i = items.find(item);
  double s = mu;
  s += u >= 0 ? user_bias[static_cast<std::size_t>(u)] : 0.0;
  s += i >= 0 ? item_bias[static_cast<std::size_t>(i)] : 0.0;
  if (u >= 0 && i >= 0) s += P.row(u).dot(Q.row(i));
  return s;
}

double GlmModel::predict(const std::string& user, const std::string& item) const {
  const double s = score(user, item);
  return config.clamp_predictions ? config.scale.clamp(s) : s;
}

std::size_t GlmModel::zero_coefficients() const {
  return static_cast<std::size_t>((P.array() == 0.0).count() + (Q.array() == 0.0).count());
}

namespace {

struct Entry {
  std::size_t other;
  double residual;
};

double penalty(const RegularizationSpec& spec, const Eigen::VectorXd& w) {
  if (const auto* en = std::get_if<ElasticNet>(&spec.mode))
    return en->alpha * w.lpNorm<1>() + 0.5 * (1.0 - en->alpha) * w.squaredNorm();
  const auto& lp = std::get<LpNorm>(spec.mode);
  double s = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) s += std::pow(w(j) * w(j) + lp.epsilon, lp.p / 2.0);
  return s / lp.p;
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct Problem {
  std::vector<std::vector<Entry>> by_user;
  std::vector<std::vector<Entry>> by_item;
  std::size_t n_ratings = 0;
};

double objective_of(const GlmModel& m, const Problem& pr) {
  const double lambda = m.config.spec.lambda;
  double loss = 0.0, pen = 0.0;
  for (std::size_t u = 0; u < pr.by_user.size(); ++u) {
    for (const auto& e : pr.by_user[u]) {
      const double r = e.residual - m.P.row(static_cast<Eigen::Index>(u)).dot(
                                        m.Q.row(static_cast<Eigen::Index>(e.other)));
      loss += 0.5 * r * r;
    }
    pen += static_cast<double>(pr.by_user[u].size()) *
           penalty(m.config.spec, m.P.row(static_cast<Eigen::Index>(u)).transpose());
  }
  for (std::size_t i = 0; i < pr.by_item.size(); ++i)
    pen += static_cast<double>(pr.by_item[i].size()) *
           penalty(m.config.spec, m.Q.row(static_cast<Eigen::Index>(i)).transpose());
  return (loss + lambda * pen) / static_cast<double>(pr.n_ratings);
}

Problem build_problem(GlmModel& m, std::span<const RatingExample> train) {
  const double damping = m.config.intercept_damping;
  double sum = 0.0;
  for (const auto& ex : train) {
    sum += ex.target;
    m.users.add(ex.user_id);
    m.items.add(ex.item_id);
  }
  m.mu = sum / static_cast<double>(train.size());

  std::vector<double> acc(m.users.size(), 0.0), cnt(m.users.size(), 0.0);
  for (const auto& ex : train) {
    const auto u = static_cast<std::size_t>(m.users.find(ex.user_id));
    acc[u] += ex.target - m.mu;
    cnt[u] += 1.0;
  }
  m.user_bias.resize(m.users.size());
  for (std::size_t u = 0; u < acc.size(); ++u) m.user_bias[u] = acc[u] / (cnt[u] + damping);

  acc.assign(m.items.size(), 0.0);
  cnt.assign(m.items.size(), 0.0);
  for (const auto& ex : train) {
    const auto u = static_cast<std::size_t>(m.users.find(ex.user_id));
    const auto i = static_cast<std::size_t>(m.items.find(ex.item_id));
    acc[i] += ex.target - m.mu - m.user_bias[u];
    cnt[i] += 1.0;
  }
  m.item_bias.resize(m.items.size());
  for (std::size_t i = 0; i < acc.size(); ++i) m.item_bias[i] = acc[i] / (cnt[i] + damping);

  Problem pr;
  pr.n_ratings = train.size();
  pr.by_user.resize(m.users.size());
  pr.by_item.resize(m.items.size());
  for (const auto& ex : train) {
    const auto u = static_cast<std::size_t>(m.users.find(ex.user_id));
    const auto i = static_cast<std::size_t>(m.items.find(ex.item_id));
    const double r = ex.target - m.mu - m.user_bias[u] - m.item_bias[i];
    pr.by_user[u].push_back({i, r});
    pr.by_item[i].push_back({u, r});
  }
  return pr;
}

// Re-solves every row of `rows` against the frozen `other` block.
void half_sweep(const GlmConfig& cfg, const std::vector<std::vector<Entry>>& lists,
                const Eigen::MatrixXd& other, Eigen::MatrixXd& rows) {
  const auto k = other.cols();
  CdOptions opts;
  opts.tol = cfg.inner_tol;
  opts.max_iter = cfg.inner_max_iter;
  opts.standardize = cfg.standardize;
  parallel_for(lists.size(), cfg.jobs, [&](std::size_t r) {
    const auto& list = lists[r];
    if (list.empty()) return;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(list.size()), k);
    Eigen::VectorXd y(static_cast<Eigen::Index>(list.size()));
    for (std::size_t n = 0; n < list.size(); ++n) {
      X.row(static_cast<Eigen::Index>(n)) = other.row(static_cast<Eigen::Index>(list[n].other));
      y(static_cast<Eigen::Index>(n)) = list[n].residual;
    }
    const auto row = static_cast<Eigen::Index>(r);
    if (const auto* en = std::get_if<ElasticNet>(&cfg.spec.mode)) {
      const Eigen::VectorXd warm = rows.row(row).transpose();
      rows.row(row) = elastic_net_cd(X, y, cfg.spec.lambda, en->alpha, opts, &warm).coef.transpose();
    } else {
      const auto& lp = std::get<LpNorm>(cfg.spec.mode);
      rows.row(row) =
          irls_lp(X, y, lp.p, cfg.spec.lambda, lp.epsilon, cfg.irls_iters).coef.transpose();
    }
  });
}

}  // namespace

GlmModel train_als(const GlmConfig& config, std::span<const RatingExample> train) {
  config.validate();
  if (train.empty()) throw DataError("empty training set");

  GlmModel m;
  m.config = config;
  Problem pr = build_problem(m, train);

  const auto k = static_cast<Eigen::Index>(config.n_factors);
  m.P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.users.size()), k);
  m.Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.items.size()), k);
  Rng rng(config.rng_seed);
  const double sd = config.init_scale / std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < m.Q.rows(); ++i)
    for (Eigen::Index f = 0; f < k; ++f) m.Q(i, f) = sd * rng.normal();

  m.objective_trace.push_back(objective_of(m, pr));
  for (int it = 0; it < config.outer_iters; ++it) {
    half_sweep(config, pr.by_user, m.Q, m.P);
    m.objective_trace.push_back(objective_of(m, pr));
    half_sweep(config, pr.by_item, m.P, m.Q);
    m.objective_trace.push_back(objective_of(m, pr));
    if (!std::isfinite(m.objective_trace.back()))
      throw DivergenceError(it + 1, m.objective_trace[m.objective_trace.size() - 3]);
  }
  return m;
}

GlmModel train_als_elastic_net(const GlmConfig& config, std::span<const RatingExample> train) {
  if (!config.spec.is_elastic_net()) throw UsageError("train_als_elastic_net needs an elastic-net spec");
  return train_als(config, train);
}

double glm_objective(const GlmModel& model, std::span<const RatingExample> train) {
  const double lambda = model.config.spec.lambda;
  std::vector<double> user_n(model.users.size(), 0.0), item_n(model.items.size(), 0.0);
  double loss = 0.0;
  for (const auto& ex : train) {
    const auto u = model.users.find(ex.user_id);
    const auto i = model.items.find(ex.item_id);
    if (u < 0 || i < 0) continue;
    user_n[static_cast<std::size_t>(u)] += 1.0;
    item_n[static_cast<std::size_t>(i)] += 1.0;
    const double r = ex.target - model.score(ex.user_id, ex.item_id);
    loss += 0.5 * r * r;
  }
  double pen = 0.0;
  for (std::size_t u = 0; u < user_n.size(); ++u)
    pen += user_n[u] * penalty(model.config.spec, model.P.row(static_cast<Eigen::Index>(u)).transpose());
  for (std::size_t i = 0; i < item_n.size(); ++i)
    pen += item_n[i] * penalty(model.config.spec, model.Q.row(static_cast<Eigen::Index>(i)).transpose());
  return (loss + lambda * pen) / static_cast<double>(train.size());
}

RankedList recommend_top_k(const GlmModel& model, const std::string& user,
                           std::span<const std::string> candidates, std::size_t k) {
  return rank_top_k(user, candidates,
                    [&](const std::string& item) { return model.score(user, item); }, k);
}

// --- serialization -------------------------------------------------------

namespace {

std::vector<double> flatten(const Eigen::MatrixXd& M) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) v.push_back(M(r, c));
  return v;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw DataError("inconsistent factor shape in model file");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r * cols + c];
  return M;
}

}  // namespace

std::string to_json(const GlmModel& m) {
  nlohmann::ordered_json j;
  j["type"] = "diversity-glm";
  auto& c = j["config"];
  c["n_factors"] = m.config.n_factors;
  c["lambda"] = m.config.spec.lambda;
  if (const auto* en = std::get_if<ElasticNet>(&m.config.spec.mode)) {
    c["mode"] = "elastic_net";
    c["alpha"] = en->alpha;
  } else {
    const auto& lp = std::get<LpNorm>(m.config.spec.mode);
    c["mode"] = "lp";
    c["p"] = lp.p;
    c["epsilon"] = lp.epsilon;
  }
  c["outer_iters"] = m.config.outer_iters;
  c["inner_tol"] = m.config.inner_tol;
  c["inner_max_iter"] = m.config.inner_max_iter;
  c["irls_iters"] = m.config.irls_iters;
  c["intercept_damping"] = m.config.intercept_damping;
  c["init_scale"] = m.config.init_scale;
  c["standardize"] = m.config.standardize;
  c["rng_seed"] = m.config.rng_seed;
  c["rating_min"] = m.config.scale.min;
  c["rating_max"] = m.config.scale.max;
  c["clamp_predictions"] = m.config.clamp_predictions;

  j["mu"] = m.mu;
  j["users"] = m.users.ids();
  j["items"] = m.items.ids();
  j["user_bias"] = m.user_bias;
  j["item_bias"] = m.item_bias;
  j["P"] = flatten(m.P);
  j["Q"] = flatten(m.Q);
  j["objective_trace"] = m.objective_trace;
  return j.dump();
}

GlmModel glm_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("type", "") != "diversity-glm") throw DataError("not a diversity-glm model file");
  try {
    GlmModel m;
    const auto& c = j.at("config");
    m.config.n_factors = c.at("n_factors").get<int>();
    m.config.spec.lambda = c.at("lambda").get<double>();
    if (c.at("mode").get<std::string>() == "elastic_net")
      m.config.spec.mode = ElasticNet{c.at("alpha").get<double>()};
    else
      m.config.spec.mode = LpNorm{c.at("p").get<double>(), c.at("epsilon").get<double>()};
    m.config.outer_iters = c.at("outer_iters").get<int>();
    m.config.inner_tol = c.at("inner_tol").get<double>();
    m.config.inner_max_iter = c.at("inner_max_iter").get<int>();
    m.config.irls_iters = c.at("irls_iters").get<int>();
    m.config.intercept_damping = c.at("intercept_damping").get<double>();
    m.config.init_scale = c.at("init_scale").get<double>();
    m.config.standardize = c.at("standardize").get<bool>();
    m.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    m.config.scale = {c.at("rating_min").get<double>(), c.at("rating_max").get<double>()};
    m.config.clamp_predictions = c.at("clamp_predictions").get<bool>();

    m.mu = j.at("mu").get<double>();
    for (const auto& id : j.at("users")) m.users.add(id.get<std::string>());
    for (const auto& id : j.at("items")) m.items.add(id.get<std::string>());
    m.user_bias = j.at("user_bias").get<std::vector<double>>();
    m.item_bias = j.at("item_bias").get<std::vector<double>>();
    const auto k = static_cast<std::size_t>(m.config.n_factors);
    m.P = unflatten(j.at("P").get<std::vector<double>>(), m.users.size(), k);
    m.Q = unflatten(j.at("Q").get<std::vector<double>>(), m.items.size(), k);
    m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    if (m.user_bias.size() != m.users.size() || m.item_bias.size() != m.items.size())
      throw DataError("inconsistent bias shape in model file");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void write_objective_csv(std::ostream& out, const GlmModel& model) {
  out << "sweep,objective\n";
  char buf[64];
  for (std::size_t s = 0; s < model.objective_trace.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g", model.objective_trace[s]);
    out << s << ',' << buf << '\n';
  }
}

}  // namespace newsrec::glm
