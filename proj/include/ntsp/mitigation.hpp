/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Iterative Hamming-neighbourhood reconstruction (iHAMMER) of sampled
// distributions, and the Bhattacharyya fidelity used to grade it.

#include "ntsp/distribution.hpp"
#include "ntsp/error.hpp"

#include <cmath>
#include <unordered_map>

namespace ntsp {

/// gamma = 1 - (frequency of the all-zeros string in the calibration run).
inline double calibration_gamma(const OutcomeDistribution &cal) {
  if (cal.shots <= 0) throw Error(ErrorKind::invalid_value, "calibration run has no shots");
  return 1.0 - static_cast<double>(cal.count(0)) / static_cast<double>(cal.shots);
}

enum class HammerRule {
  /// Mass-conserving: a string hands a fraction `alpha` of its mass to its
  /// distance-1 neighbours that are at least `dominance` times more likely,
  /// split in proportion to their probabilities.
  transfer,
  /// score_k = p_k * (1 + sum of distance-1 neighbour probabilities),
  /// renormalised.
  neighbourhood_score,
};

struct HammerConfig {
  HammerRule rule = HammerRule::transfer;
  double alpha = 0.5;
  double dominance = 8.0;
  std::size_t max_iterations = 50;
  double stop_fraction = 0.9;

  void validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorKind::invalid_value, "hammer alpha must lie in (0, 1]");
    if (!(dominance >= 1)) throw Error(ErrorKind::invalid_value, "hammer dominance ratio must be >= 1");
  }
};

namespace detail {

/// For every entry, indices of observed strings at Hamming distance 1.
inline std::vector<std::vector<std::size_t>> hamming1_neighbours(const ProbabilityMap &dist) {
  std::unordered_map<Bitstring, std::size_t> index;
  index.reserve(dist.entries.size() * 2);
  for (std::size_t k = 0; k < dist.entries.size(); ++k) index.emplace(dist.entries[k].first, k);
  std::vector<std::vector<std::size_t>> out(dist.entries.size());
  for (std::size_t k = 0; k < dist.entries.size(); ++k)
    for (std::size_t q = 0; q < dist.n; ++q) {
      auto it = index.find(dist.entries[k].first ^ (Bitstring{1} << q));
      if (it != index.end()) out[k].push_back(it->second);
    }
  return out;
}

inline ProbabilityMap hammer_step(const ProbabilityMap &dist, const std::vector<std::vector<std::size_t>> &nbrs,
                                  const HammerConfig &cfg) {
  ProbabilityMap out = dist;
  const auto &e = dist.entries;
  if (cfg.rule == HammerRule::neighbourhood_score) {
    double total = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      double h = 0;
      for (auto j : nbrs[k]) h += e[j].second;
      out.entries[k].second = e[k].second * (1 + h);
      total += out.entries[k].second;
    }
    if (total > 0)
      for (auto &[_, p] : out.entries) p /= total;
    return out;
  }
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double pk = e[k].second;
    if (pk <= 0) continue;
    double receivers = 0;
    for (auto j : nbrs[k])
      if (e[j].second > cfg.dominance * pk) receivers += e[j].second;
    if (receivers <= 0) continue;
    const double given = cfg.alpha * pk;
    out.entries[k].second -= given;
    for (auto j : nbrs[k])
      if (e[j].second > cfg.dominance * pk) out.entries[j].second += given * e[j].second / receivers;
  }
  return out;
}

} // namespace detail

/// One reconstruction step over the observed support.
inline ProbabilityMap hammer_step(const ProbabilityMap &dist, const HammerConfig &cfg = {}) {
  cfg.validate();
  return detail::hammer_step(dist, detail::hamming1_neighbours(dist), cfg);
}

struct MitigationReport {
  ProbabilityMap corrected;
  double gamma = 0;
  std::size_t iterations = 0;
  double absorbed = 0; // A_i in samples
  bool hit_cap = false;
};

/// Repeats hammer_step until the samples absorbed from their original
/// strings, A_i = S * sum_k max(p_k - p_{k,i}, 0), reach stop_fraction * S *
/// gamma, or until max_iterations.
inline MitigationReport ihammer(const OutcomeDistribution &dist, double gamma, const HammerConfig &cfg = {}) {
  if (!(gamma >= 0 && gamma <= 1)) throw Error(ErrorKind::invalid_value, "gamma must lie in [0, 1]");
  cfg.validate();
  MitigationReport r;
  r.gamma = gamma;
  const auto original = dist.probabilities();
  r.corrected = original;
  const double shots = static_cast<double>(dist.shots);
  const double threshold = cfg.stop_fraction * shots * gamma;
  if (threshold <= 0) return r;
  const auto nbrs = detail::hamming1_neighbours(original);
  while (r.iterations < cfg.max_iterations) {
    r.corrected = detail::hammer_step(r.corrected, nbrs, cfg);
    ++r.iterations;
    double a = 0;
    for (std::size_t k = 0; k < original.entries.size(); ++k)
      a += std::max(0.0, original.entries[k].second - r.corrected.entries[k].second);
    r.absorbed = shots * a;
    if (r.absorbed >= threshold) return r;
  }
  r.hit_cap = true;
  return r;
}

/// (sum_x sqrt(p(x) q(x)))^2.
inline double fidelity(const ProbabilityMap &p_est, const ProbabilityMap &p_true) {
  p_est.require_normalized();
  p_true.require_normalized();
  double s = 0;
  auto a = p_est.entries.begin(), b = p_true.entries.begin();
  while (a != p_est.entries.end() && b != p_true.entries.end()) {
    if (a->first < b->first) ++a;
    else if (b->first < a->first) ++b;
    else {
      s += std::sqrt(std::max(0.0, a->second) * std::max(0.0, b->second));
      ++a;
      ++b;
    }
  }
  return std::min(1.0, s * s);
}

} // namespace ntsp
