/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Unconstrained settlement cost: payoff minus saturating logistic penalties
// on the canonical-form violations of the balance and after-link constraints.
// Collateral limits carry no penalty; compute_collateral never breaks them.

#include "ntsp/collateral.hpp"
#include "ntsp/distribution.hpp"
#include "ntsp/model.hpp"

#include <cmath>
#include <unordered_map>

namespace ntsp {

/// h(v) = 0 for v <= 0, else beta * (b(v) - b(T)) / (1 - b(T)) with
/// b(v) = 1 / (1 + exp(-slope * v)).
struct ActivationParams {
  double beta = 1.0;
  double slope = 1.0;
  double threshold = 0.0;

  void validate() const {
    if (!(beta > 0) || !(slope > 0) || !std::isfinite(threshold))
      throw Error(ErrorKind::invalid_value, "activation needs beta > 0, slope > 0");
  }
};

struct PenaltyConfig {
  double lambda = 0.5;
  ActivationParams cash{100.0, 0.025, 0.0};
  ActivationParams security{10.0, 0.025, 0.0};
  ActivationParams after_link{5.0, 10.0, -0.5};

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw Error(ErrorKind::invalid_value, "lambda must lie in [0, 1]");
    cash.validate();
    security.validate();
    after_link.validate();
  }
};

/// 1 / (1 + exp(-z)) without overflow.
inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double activation(const ActivationParams &p, double violation) {
  if (!(violation > 0)) return 0.0;
  const double b_t = logistic(p.slope * p.threshold);
  const double one_minus_b_t = logistic(-p.slope * p.threshold);
  if (violation == INFINITY) return p.beta;
  const double h = p.beta * (logistic(p.slope * violation) - b_t) / one_minus_b_t;
  return std::max(0.0, h);
}

/// g_v(x, y) + b_v. Cash entries are in euros, security entries in units.
struct CanonicalViolation {
  ConstraintClass constraint;
  std::size_t index; // balance, position or after-link index
  double value;
};

inline std::vector<CanonicalViolation> canonical_violations(const Instance &inst, const Settlement &x,
                                                            const CollateralVector &y) {
  const auto nf = net_flows(inst, x, y);
  std::vector<CanonicalViolation> out;
  for (std::size_t b = 0; b < inst.balances().size(); ++b)
    if (!inst.balances()[b].is_central_bank)
      out.push_back({ConstraintClass::cash, b, static_cast<double>(-nf.cash[b]) / cents_per_euro});
  for (std::size_t s = 0; s < inst.positions().size(); ++s)
    if (!inst.positions()[s].is_issuer)
      out.push_back({ConstraintClass::security, s, static_cast<double>(-nf.securities[s])});
  for (std::size_t a = 0; a < inst.after_links().size(); ++a) {
    const auto &link = inst.after_links()[a];
    out.push_back({ConstraintClass::after_link, a,
                   static_cast<double>(x[link.second]) - static_cast<double>(x[link.first])});
  }
  return out;
}

inline double total_penalty(const std::vector<CanonicalViolation> &violations, const PenaltyConfig &cfg) {
  double sum = 0;
  for (const auto &v : violations) {
    switch (v.constraint) {
    case ConstraintClass::cash: sum += activation(cfg.cash, v.value); break;
    case ConstraintClass::security: sum += activation(cfg.security, v.value); break;
    case ConstraintClass::after_link: sum += activation(cfg.after_link, v.value); break;
    default: break;
    }
  }
  return sum;
}

/// C(x, y) = payoff(x) - sum of activations. Positive cost certifies the
/// balance and after-link constraints whenever every possible violation is
/// large enough for its activation to exceed the maximal payoff (see
/// min_certified_violation).
inline double unconstrained_cost(const Instance &inst, const Settlement &x, const CollateralVector &y,
                                 const PenaltyConfig &cfg) {
  return payoff(inst, x, cfg.lambda) - total_penalty(canonical_violations(inst, x, y), cfg);
}

/// Smallest violation whose activation is at least `payoff_max`; violations
/// below it can hide behind the payoff. Returns +inf when beta <= payoff_max.
inline double min_certified_violation(const ActivationParams &p, double payoff_max = 1.0) {
  if (p.beta <= payoff_max) return INFINITY;
  double lo = 0, hi = 1;
  while (activation(p, hi) < payoff_max) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (activation(p, mid) < payoff_max ? lo : hi) = mid;
  }
  return hi;
}

struct ScoredSettlement {
  double cost = 0;
  double payoff = 0;
  CollateralVector lots;

  bool valid() const { return cost > 0; }
};

inline ScoredSettlement score_settlement(const Instance &inst, const Settlement &x, const PenaltyConfig &cfg) {
  ScoredSettlement s;
  s.lots = compute_collateral(inst, x).lots;
  s.payoff = payoff(inst, x, cfg.lambda);
  s.cost = s.payoff - total_penalty(canonical_violations(inst, x, s.lots), cfg);
  return s;
}

/// Memo of bitstring -> scored settlement. Collateral depends only on the
/// bitstring, so caching never changes a value. Confined to one run driver.
class CostCache {
public:
  CostCache(const Instance &inst, PenaltyConfig cfg) : inst_(&inst), cfg_(cfg) {
    if (inst.num_transactions() > max_register_width)
      throw Error(ErrorKind::capacity, "cost cache supports at most 64 transactions");
  }

  const ScoredSettlement &get(Bitstring x) {
    auto it = memo_.find(x);
    if (it != memo_.end()) return it->second;
    return memo_.emplace(x, score_settlement(*inst_, to_settlement(x, inst_->num_transactions()), cfg_))
        .first->second;
  }

  std::size_t size() const { return memo_.size(); }
  const PenaltyConfig &config() const { return cfg_; }
  const Instance &instance() const { return *inst_; }

private:
  const Instance *inst_;
  PenaltyConfig cfg_;
  std::unordered_map<Bitstring, ScoredSettlement> memo_;
};

inline double expected_cost(const ProbabilityMap &dist, CostCache &cache) {
  require_length(dist.n, cache.instance().num_transactions(), "bitstring");
  dist.require_normalized();
  double c = 0;
  for (const auto &[x, p] : dist.entries) c += p * cache.get(x).cost;
  return c;
}

inline double expected_cost(const ProbabilityMap &dist, const Instance &inst, const PenaltyConfig &cfg) {
  CostCache cache(inst, cfg);
  return expected_cost(dist, cache);
}

} // namespace ntsp
