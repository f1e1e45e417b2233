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

#ifndef NEWSREC_DIVERSITY_GLM_HPP
#define NEWSREC_DIVERSITY_GLM_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "newsrec/common.hpp"
#include "newsrec/id_index.hpp"
#include "newsrec/ranking.hpp"

namespace newsrec::glm {

// alpha = 0 is ridge, alpha = 1 is lasso.
struct ElasticNet {
  double alpha = 0.5;
};

// Penalty (lambda / p) * sum_j (w_j^2 + epsilon)^(p / 2); p = 2 is ridge
// and p = 1 approaches the lasso as epsilon -> 0.
struct LpNorm {
  double p = 1.0;
  double epsilon = 1e-6;
};

struct RegularizationSpec {
  double lambda = 0.1;
  std::variant<ElasticNet, LpNorm> mode = ElasticNet{};

  bool is_elastic_net() const { return std::holds_alternative<ElasticNet>(mode); }
  void validate() const;
};

// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

// (1/2n) ||y - Xw||^2 + lambda * (alpha ||w||_1 + (1 - alpha)/2 ||w||_2^2)
double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, double lambda, double alpha);

struct CdOptions {
  double tol = 1e-5;
  int max_iter = 1000;
  bool standardize = false;
  bool record_objective = false;
};

struct CdResult {
  Eigen::VectorXd coef;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> objective_trace;  // after each sweep, when requested
};

// Cyclic coordinate descent. All-zero columns keep a zero coefficient.
CdResult elastic_net_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        double alpha, const CdOptions& options = {},
                        const Eigen::VectorXd* warm_start = nullptr);

// (1/2n) ||y - Xw||^2 + (lambda / p) * sum_j (w_j^2 + epsilon)^(p/2)
double lp_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double p, double lambda, double epsilon);

struct IrlsResult {
  Eigen::VectorXd coef;
  bool jittered = false;  // a weighted system needed diagonal jitter
  int iterations = 0;
};

// Starts from the ridge solution and re-solves the weighted ridge
// (X'X/n + lambda * diag(omega)) w = X'y/n with
// omega_j = (w_j^2 + epsilon)^((p - 2)/2), outer_iters times.
IrlsResult irls_lp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double p, double lambda,
                   double epsilon, int outer_iters);

struct GlmConfig {
  int n_factors = 10;
  RegularizationSpec spec;
  int outer_iters = 15;
  double inner_tol = 1e-5;
  int inner_max_iter = 200;
  int irls_iters = 15;
  double intercept_damping = 10.0;
  double init_scale = 0.1;
  bool standardize = false;
  std::uint64_t rng_seed = 42;
  RatingScale scale;
  bool clamp_predictions = true;
  int jobs = 1;

  void validate() const;
};

struct GlmModel {
  GlmConfig config;
  double mu = 0.0;
  IdIndex users;
  IdIndex items;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  Eigen::MatrixXd P;  // users x n_factors
  Eigen::MatrixXd Q;  // items x n_factors
  // Initial objective, then one entry per half-sweep.
  std::vector<double> objective_trace;

  double score(const std::string& user, const std::string& item) const;
  double predict(const std::string& user, const std::string& item) const;

  // Exactly-zero entries across P and Q.
  std::size_t zero_coefficients() const;
};

// Alternating per-user / per-item penalized regressions on the residuals
// r - (mu + b_u + b_i). The global objective is
//   (1/N) [ 1/2 sum (y_ui - p_u.q_i)^2
//           + lambda (sum_u n_u pen(p_u) + sum_i n_i pen(q_i)) ]
// so each per-entity solve is an exact block minimization.
GlmModel train_als(const GlmConfig& config, std::span<const RatingExample> train);

// train_als restricted to the elastic-net penalty.
GlmModel train_als_elastic_net(const GlmConfig& config, std::span<const RatingExample> train);

double glm_objective(const GlmModel& model, std::span<const RatingExample> train);

inline double predict_glm(const GlmModel& model, const std::string& user, const std::string& item) {
  return model.predict(user, item);
}

RankedList recommend_top_k(const GlmModel& model, const std::string& user,
                           std::span<const std::string> candidates, std::size_t k);

std::string to_json(const GlmModel& model);
GlmModel glm_model_from_json(const std::string& text);

// sweep,objective
void write_objective_csv(std::ostream& out, const GlmModel& model);

}  // namespace newsrec::glm

#endif  // NEWSREC_DIVERSITY_GLM_HPP
