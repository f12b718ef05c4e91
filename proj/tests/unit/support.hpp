/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "ntsp/ntsp.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <string>

namespace ntsp::test {

template <class F>
void expect_error(ErrorKind kind, F &&f) {
  try {
    std::forward<F>(f)();
    ADD_FAILURE() << "expected error " << to_string(kind);
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

/// Small instances built in code: parties own balance "B<p>" and positions
/// "P<p>_S<k>".
class Builder {
public:
  std::size_t security(Units lot, Cents valuation) {
    d_.securities.push_back({"S" + std::to_string(d_.securities.size()), lot, valuation});
    return d_.securities.size() - 1;
  }
  std::size_t balance(Cents initial, bool central = false) {
    d_.balances.push_back({"B" + std::to_string(d_.balances.size()), "o", initial, central});
    return d_.balances.size() - 1;
  }
  std::size_t position(std::size_t sec, Units initial, bool issuer = false) {
    d_.positions.push_back({"P" + std::to_string(d_.positions.size()), "o", sec, initial, issuer});
    return d_.positions.size() - 1;
  }
  std::size_t dvp(Cents amount, std::size_t pay_from, std::size_t pay_to, Units qty, std::size_t deliver_from,
                  std::size_t deliver_to, double weight = 1.0) {
    Transaction t;
    t.id = "t" + std::to_string(d_.transactions.size());
    t.kind = TransactionKind::dvp;
    t.cash = CashLeg{amount, pay_from, pay_to};
    t.security = SecurityLeg{qty, d_.positions[deliver_from].security, deliver_from, deliver_to};
    t.weight = weight;
    d_.transactions.push_back(t);
    return d_.transactions.size() - 1;
  }
  std::size_t pfod(Cents amount, std::size_t from, std::size_t to, double weight = 1.0) {
    Transaction t;
    t.id = "t" + std::to_string(d_.transactions.size());
    t.kind = TransactionKind::pfod;
    t.cash = CashLeg{amount, from, to};
    t.weight = weight;
    d_.transactions.push_back(t);
    return d_.transactions.size() - 1;
  }
  std::size_t fop(Units qty, std::size_t from, std::size_t to, double weight = 1.0) {
    Transaction t;
    t.id = "t" + std::to_string(d_.transactions.size());
    t.kind = TransactionKind::fop;
    t.security = SecurityLeg{qty, d_.positions[from].security, from, to};
    t.weight = weight;
    d_.transactions.push_back(t);
    return d_.transactions.size() - 1;
  }
  void after(std::size_t first, std::size_t second) { d_.after_links.push_back({first, second}); }
  std::size_t cmb(std::size_t client, std::size_t provider, Cents limit) {
    d_.cmbs.push_back({"C" + std::to_string(d_.cmbs.size()), client, provider, limit});
    return d_.cmbs.size() - 1;
  }
  std::size_t spl(std::size_t cmb, std::size_t position, Units qmin) {
    d_.spls.push_back({"L" + std::to_string(d_.spls.size()), cmb, position, qmin});
    return d_.spls.size() - 1;
  }

  InstanceData &data() { return d_; }
  Instance build() const { return Instance(d_); }

private:
  InstanceData d_;
};

/// Settlement from text, transaction 0 first.
inline Settlement bits(const std::string &s) {
  std::vector<std::uint8_t> v;
  for (char c : s) v.push_back(c == '1');
  return Settlement(std::move(v));
}

inline std::string data_path(const std::string &name) { return std::string(NTSP_DATA_DIR) + "/" + name; }
inline std::string profile_path(const std::string &name) { return std::string(NTSP_PROFILES_DIR) + "/" + name; }

/// Unpruned 2^n enumeration: best payoff among settlements feasible with
/// greedy collateral, ties to the lexicographically smallest X.
struct NaiveOptimum {
  Settlement x;
  double payoff = 0;
};

inline NaiveOptimum naive_optimum(const Instance &inst, double lambda) {
  const auto n = inst.num_transactions();
  NaiveOptimum best{Settlement(n), 0.0};
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) {
    const auto x = Settlement::from_word(w, n);
    if (!check_feasibility(inst, x, compute_collateral(inst, x).lots).feasible) continue;
    const double p = payoff(inst, x, lambda);
    if (p > best.payoff + 1e-12 || (std::abs(p - best.payoff) <= 1e-12 && x < best.x)) best = {x, p};
  }
  return best;
}

/// Seeded small synthetic instance; tightness below 1 keeps constraints binding.
inline Instance small_instance(std::size_t n, std::uint64_t seed, double tightness = 0.7) {
  GeneratorSpec spec;
  spec.n = n;
  spec.securities = 2;
  spec.parties = 4;
  spec.after_links = std::min<std::size_t>(n * (n - 1) / 2, n / 3);
  spec.tightness = tightness;
  spec.cushion = 0.2;
  spec.seed = seed;
  return generate_instance(spec);
}

} // namespace ntsp::test
