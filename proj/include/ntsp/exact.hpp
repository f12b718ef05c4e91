/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Exact reference solver. Collateral is always derived with
// compute_collateral, so "optimal" means optimal within the same pipeline the
// variational solvers use.

#include "ntsp/collateral.hpp"
#include "ntsp/model.hpp"

#include <numeric>
#include <optional>

namespace ntsp {

struct ExactSolution {
  Settlement x_star;
  CollateralVector y_star;
  double payoff_star = 0;
  std::uint64_t explored = 0; // leaves evaluated
  bool lower_bound = false;   // evaluation budget ran out
};

inline constexpr std::size_t exact_unbudgeted_limit = 30;
inline constexpr double payoff_tie_tolerance = 1e-12;

/// True when (X, compute_collateral(X)) satisfies every constraint.
inline bool feasible_with_greedy_collateral(const Instance &inst, const Settlement &x) {
  return check_feasibility(inst, x, compute_collateral(inst, x).lots).feasible;
}

namespace detail {

class BranchAndBound {
public:
  BranchAndBound(const Instance &inst, double lambda, std::optional<std::uint64_t> budget)
      : inst_(inst), lambda_(lambda), budget_(budget), n_(inst.num_transactions()),
        current_(n_), decided_(n_, 0), links_of_(n_) {
    const auto &txs = inst.transactions();
    wa_.assign(n_, 0.0);
    w_.assign(n_, 0.0);
    for (std::size_t t = 0; t < n_; ++t) {
      wa_[t] = txs[t].weight * static_cast<double>(txs[t].amount());
      w_[t] = txs[t].weight;
    }
    for (std::size_t t = 0; t < n_; ++t) {
      wa_all_ += wa_[t];
      w_all_ += w_[t];
    }
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      if (wa_[a] != wa_[b]) return wa_[a] > wa_[b];
      return w_[a] > w_[b];
    });
    for (std::size_t k = 0; k < inst.after_links().size(); ++k) {
      links_of_[inst.after_links()[k].first].push_back(k);
      links_of_[inst.after_links()[k].second].push_back(k);
    }
    best_.x_star = Settlement(n_);
    best_.y_star = CollateralVector(inst.num_spls());
    best_.payoff_star = 0;
  }

  ExactSolution run() {
    double wa_rem = 0, w_rem = 0;
    for (std::size_t t = 0; t < n_; ++t) {
      wa_rem += wa_[t];
      w_rem += w_[t];
    }
    descend(0, 0, 0, wa_rem, w_rem);
    return best_;
  }

private:
  double blend(double wa, double w) const {
    return lambda_ * (wa_all_ > 0 ? wa / wa_all_ : 0.0) + (1 - lambda_) * (w_all_ > 0 ? w / w_all_ : 0.0);
  }

  bool links_ok(std::size_t t) const {
    for (auto k : links_of_[t]) {
      const auto &l = inst_.after_links()[k];
      if (decided_[l.first] && decided_[l.second] && current_[l.second] > current_[l.first]) return false;
    }
    return true;
  }

  bool out_of_budget() {
    if (budget_ && best_.explored >= *budget_) {
      best_.lower_bound = true;
      return true;
    }
    return false;
  }

  void descend(std::size_t depth, double wa_set, double w_set, double wa_rem, double w_rem) {
    if (stop_) return;
    if (blend(wa_set + wa_rem, w_set + w_rem) < best_.payoff_star - payoff_tie_tolerance) return;
    if (depth == n_) {
      leaf();
      return;
    }
    const auto t = order_[depth];
    decided_[t] = 1;
    for (int v = 1; v >= 0 && !stop_; --v) {
      current_.set(t, v == 1);
      if (links_ok(t)) {
        if (v == 1)
          descend(depth + 1, wa_set + wa_[t], w_set + w_[t], wa_rem - wa_[t], w_rem - w_[t]);
        else
          descend(depth + 1, wa_set, w_set, wa_rem - wa_[t], w_rem - w_[t]);
      }
    }
    current_.set(t, false);
    decided_[t] = 0;
  }

  void leaf() {
    if (out_of_budget()) {
      stop_ = true;
      return;
    }
    ++best_.explored;
    const double p = payoff(inst_, current_, lambda_);
    const bool better = p > best_.payoff_star + payoff_tie_tolerance;
    const bool tie = !better && p >= best_.payoff_star - payoff_tie_tolerance && current_ < best_.x_star;
    if (!better && !tie) return;
    auto collateral = compute_collateral(inst_, current_);
    if (!check_feasibility(inst_, current_, collateral.lots).feasible) return;
    best_.x_star = current_;
    best_.y_star = std::move(collateral.lots);
    best_.payoff_star = p;
  }

  const Instance &inst_;
  double lambda_;
  std::optional<std::uint64_t> budget_;
  std::size_t n_;
  Settlement current_;
  std::vector<std::uint8_t> decided_;
  std::vector<std::vector<std::size_t>> links_of_;
  std::vector<std::size_t> order_;
  std::vector<double> wa_, w_;
  double wa_all_ = 0, w_all_ = 0;
  ExactSolution best_;
  bool stop_ = false;
};

} // namespace detail

/// Maximum payoff over all settlements that are feasible with greedy
/// collateral. Depth-first branch and bound over transactions ordered by
/// descending weighted amount, pruning on the optimistic bound "settle every
/// undecided transaction" (payoff is monotone for non-negative weights) and on
/// after-links. Equal-payoff optima resolve to the lexicographically smallest
/// X. Without a budget, at most 30 transactions are accepted.
inline ExactSolution solve_exact(const Instance &inst, double lambda,
                                 std::optional<std::uint64_t> budget = std::nullopt) {
  if (!budget && inst.num_transactions() > exact_unbudgeted_limit)
    throw Error(ErrorKind::capacity, "exact search over more than 30 transactions needs a budget");
  return detail::BranchAndBound(inst, lambda, budget).run();
}

/// candidate / optimal clamped to [0, 1].
inline double payoff_ratio(double candidate_payoff, double optimal_payoff) {
  if (!(optimal_payoff > 0))
    throw Error(ErrorKind::degenerate, "optimal payoff is zero; payoff ratio undefined");
  return std::clamp(candidate_payoff / optimal_payoff, 0.0, 1.0);
}

struct JointAuditResult {
  ExactSolution greedy;
  Settlement x_joint;
  CollateralVector y_joint;
  double payoff_joint = 0;
  double gap() const { return payoff_joint - greedy.payoff_star; }
};

/// Audit of the greedy-collateral restriction: brute force over X and over
/// every Y in [0, max_lots]^|SPL| with the strict collateral checks. Only for
/// tiny instances (|T| <= 16, |SPL| <= 3).
inline JointAuditResult audit_joint_optimum(const Instance &inst, double lambda, Units max_lots) {
  if (inst.num_transactions() > 16 || inst.num_spls() > 3)
    throw Error(ErrorKind::capacity, "joint audit supports |T| <= 16 and |SPL| <= 3");
  if (max_lots < 0) throw Error(ErrorKind::invalid_value, "max_lots < 0");
  JointAuditResult r;
  r.greedy = solve_exact(inst, lambda);
  const auto n = inst.num_transactions(), m = inst.num_spls();
  r.x_joint = Settlement(n);
  r.y_joint = CollateralVector(m);
  std::uint64_t y_combos = 1;
  for (std::size_t l = 0; l < m; ++l) y_combos *= static_cast<std::uint64_t>(max_lots + 1);
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) {
    const auto x = Settlement::from_word(w, n);
    const double p = payoff(inst, x, lambda);
    if (p <= r.payoff_joint + payoff_tie_tolerance) continue;
    for (std::uint64_t c = 0; c < y_combos; ++c) {
      CollateralVector y(m);
      auto rest = c;
      for (std::size_t l = 0; l < m; ++l) {
        y.lots[l] = static_cast<Units>(rest % static_cast<std::uint64_t>(max_lots + 1));
        rest /= static_cast<std::uint64_t>(max_lots + 1);
      }
      if (check_feasibility(inst, x, y, true).feasible) {
        r.x_joint = x;
        r.y_joint = y;
        r.payoff_joint = p;
        break;
      }
    }
  }
  return r;
}

} // namespace ntsp
