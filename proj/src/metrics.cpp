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

#include "newsrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "newsrec/common.hpp"

namespace newsrec::metrics {

namespace {

std::size_t hits_at_k(const RankedList& ranked, const ItemSet& relevant, std::size_t k) {
  const std::size_t n = std::min(k, ranked.items.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant.contains(ranked.items[i]) ? 1 : 0;
  return hits;
}

}  // namespace

double rmse(std::span<const std::pair<double, double>> predictions) {
  if (predictions.empty()) throw std::invalid_argument("rmse of an empty list");
  double ss = 0.0;
  for (const auto& [pred, actual] : predictions) ss += (pred - actual) * (pred - actual);
  return std::sqrt(ss / static_cast<double>(predictions.size()));
}

double precision_at_k(const RankedList& ranked, const ItemSet& relevant, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  return static_cast<double>(hits_at_k(ranked, relevant, k)) / static_cast<double>(k);
}

std::optional<double> recall_at_k(const RankedList& ranked, const ItemSet& relevant, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (relevant.empty()) return std::nullopt;
  return static_cast<double>(hits_at_k(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

double f1_at_k(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double intra_list_diversity(const RankedList& ranked, const FeatureSpace& features,
                            std::size_t* missing) {
  const std::size_t n = ranked.items.size();
  std::vector<const SparseVector*> vecs(n);
  std::size_t absent = 0;
  for (std::size_t i = 0; i < n; ++i) {
    vecs[i] = features.find(ranked.items[i]);
    if (!vecs[i]) ++absent;
  }
  if (missing) *missing = absent;
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += dissimilarity(vecs[i], vecs[j]);
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double novelty_score(const RankedList& ranked, const ItemSet& history) {
  if (ranked.items.empty()) throw std::invalid_argument("novelty of an empty list");
  std::size_t unseen = 0;
  for (const auto& item : ranked.items) unseen += history.contains(item) ? 0 : 1;
  return static_cast<double>(unseen) / static_cast<double>(ranked.items.size());
}

double composite_tradeoff(double f1, double diversity, double novelty, double w) {
  return w * f1 + (1.0 - w) * (diversity + novelty) / 2.0;
}

std::size_t EvaluationReport::k_index(std::size_t k) const {
  auto it = std::find(k_values.begin(), k_values.end(), k);
  if (it == k_values.end()) throw std::out_of_range("k not in report");
  return static_cast<std::size_t>(it - k_values.begin());
}

EvaluationReport evaluate_run(const EvalInput& input, const FeatureSpace& features,
                              const EvalOptions& options) {
  if (options.ks.empty()) throw UsageError("at least one k is required");
  for (auto k : options.ks)
    if (k == 0) throw UsageError("k must be >= 1");
  if (!(options.w >= 0.0 && options.w <= 1.0)) throw UsageError("w must lie in [0, 1]");

  EvaluationReport rep;
  rep.k_values = options.ks;
  rep.w = options.w;
  rep.candidate_policy = input.candidate_policy;
  rep.model = input.model;
  rep.counts.skipped_cold_start = input.skipped_cold_start;
  rep.counts.bad_lines = input.bad_lines;
  rep.counts.rmse_pairs = input.predictions.size();
  if (!input.predictions.empty()) rep.rmse = rmse(input.predictions);

  std::map<std::string, const UserRun*> ordered;
  for (const auto& u : input.users) ordered[u.user_id] = &u;

  const std::size_t nk = options.ks.size();
  for (const auto& [id, run] : ordered) {
    if (run->relevant.empty()) {
      ++rep.counts.skipped_no_relevant;
      continue;
    }
    UserMetrics um;
    um.user_id = id;
    for (std::size_t k : options.ks) {
      const RankedList top = run->ranking.truncated(k);
      const double p = precision_at_k(top, run->relevant, k);
      const double r = *recall_at_k(top, run->relevant, k);
      std::size_t missing = 0;
      um.precision.push_back(p);
      um.recall.push_back(r);
      um.f1.push_back(f1_at_k(p, r));
      um.diversity.push_back(intra_list_diversity(top, features, &missing));
      um.novelty.push_back(top.items.empty() ? 0.0 : novelty_score(top, run->history));
      if (k == options.ks.front()) rep.counts.missing_features += missing;
    }
    rep.per_user.push_back(std::move(um));
  }
  rep.counts.evaluated_users = rep.per_user.size();
  if (rep.per_user.empty()) throw DataError("no evaluable users");

  auto mean_of = [&](auto field, std::size_t ki) {
    double s = 0.0;
    for (const auto& um : rep.per_user) s += (um.*field)[ki];
    return s / static_cast<double>(rep.per_user.size());
  };
  for (std::size_t ki = 0; ki < nk; ++ki) {
    rep.precision.push_back(mean_of(&UserMetrics::precision, ki));
    rep.recall.push_back(mean_of(&UserMetrics::recall, ki));
    rep.f1.push_back(mean_of(&UserMetrics::f1, ki));
    rep.diversity.push_back(mean_of(&UserMetrics::diversity, ki));
    rep.novelty.push_back(mean_of(&UserMetrics::novelty, ki));
    rep.composite.push_back(
        composite_tradeoff(rep.f1[ki], rep.diversity[ki], rep.novelty[ki], options.w));
  }
  return rep;
}

std::string to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  if (r.rmse)
    j["rmse"] = *r.rmse;
  else
    j["rmse"] = nullptr;
  j["k_values"] = r.k_values;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["diversity"] = r.diversity;
  j["novelty"] = r.novelty;
  j["composite"] = r.composite;
  j["w"] = r.w;
  j["candidate_policy"] = r.candidate_policy;
  auto& c = j["counts"];
  c["evaluated_users"] = r.counts.evaluated_users;
  c["skipped_cold_start"] = r.counts.skipped_cold_start;
  c["skipped_no_relevant"] = r.counts.skipped_no_relevant;
  c["bad_lines"] = r.counts.bad_lines;
  c["rmse_pairs"] = r.counts.rmse_pairs;
  c["missing_features"] = r.counts.missing_features;
  return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvaluationReport r;
    r.model = j.value("model", "");
    if (!j.at("rmse").is_null()) r.rmse = j.at("rmse").get<double>();
    r.k_values = j.at("k_values").get<std::vector<std::size_t>>();
    r.precision = j.at("precision").get<std::vector<double>>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.f1 = j.at("f1").get<std::vector<double>>();
    r.diversity = j.at("diversity").get<std::vector<double>>();
    r.novelty = j.at("novelty").get<std::vector<double>>();
    r.composite = j.at("composite").get<std::vector<double>>();
    r.w = j.at("w").get<double>();
    r.candidate_policy = j.value("candidate_policy", "");
    const auto& c = j.at("counts");
    r.counts.evaluated_users = c.at("evaluated_users").get<std::size_t>();
    r.counts.skipped_cold_start = c.at("skipped_cold_start").get<std::size_t>();
    r.counts.skipped_no_relevant = c.value("skipped_no_relevant", std::size_t{0});
    r.counts.bad_lines = c.at("bad_lines").get<std::size_t>();
    r.counts.rmse_pairs = c.value("rmse_pairs", std::size_t{0});
    r.counts.missing_features = c.value("missing_features", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

void write_per_user_csv(std::ostream& out, const EvaluationReport& report) {
  out << "user,k,precision,recall,f1,diversity,novelty\n";
  char buf[256];
  for (const auto& um : report.per_user) {
    for (std::size_t ki = 0; ki < report.k_values.size(); ++ki) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g", report.k_values[ki],
                    um.precision[ki], um.recall[ki], um.f1[ki], um.diversity[ki], um.novelty[ki]);
      out << um.user_id << ',' << buf << '\n';
    }
  }
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace newsrec::metrics
