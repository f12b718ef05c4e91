/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Seeded synthetic settlement batches.
//
// Every party owns one cash balance and one position per security; a single
// central-bank balance provides credit. Cash amounts are whole euros,
// valuations whole euros per unit and quantities and lot sizes multiples of
// ten units, so every possible violation is at least 1 euro or 10 units and
// therefore always outweighs the payoff under the default penalties.
//
// Initial holdings are a `tightness` fraction of each account's net outflow
// under the all-ones settlement, plus a random cushion. tightness >= 1
// keeps the all-ones settlement feasible; below 1 the generator retries with
// derived seeds until the all-ones settlement is infeasible.

#include "ntsp/collateral.hpp"
#include "ntsp/error.hpp"
#include "ntsp/instance_io.hpp"
#include "ntsp/model.hpp"
#include "ntsp/random.hpp"

#include <cmath>
#include <set>

namespace ntsp {

struct GeneratorSpec {
  std::size_t n = 20;
  std::size_t securities = 3;
  std::size_t parties = 6;
  std::size_t after_links = 6;
  double collateral_fraction = 0.5; // parties with a credit line
  double tightness = 0.9;
  double cushion = 0.5; // extra holdings: up to this fraction of gross outflow
  std::uint64_t seed = 7;

  void validate() const {
    if (n < 1 || securities < 1) throw Error(ErrorKind::invalid_value, "generator needs n >= 1 and securities >= 1");
    if (parties < 2) throw Error(ErrorKind::invalid_value, "generator needs at least two parties");
    if (after_links > n * (n - 1) / 2) throw Error(ErrorKind::invalid_value, "too many after-links for n");
    if (!(collateral_fraction >= 0 && collateral_fraction <= 1))
      throw Error(ErrorKind::invalid_value, "collateral_fraction must lie in [0, 1]");
    if (!(tightness > 0 && tightness <= 2)) throw Error(ErrorKind::invalid_value, "tightness must lie in (0, 2]");
    if (!(cushion >= 0 && cushion <= 1)) throw Error(ErrorKind::invalid_value, "cushion must lie in [0, 1]");
  }
};

inline GeneratorSpec parse_generator_spec(const nlohmann::json &j) {
  detail::ObjectReader r(j, "generator spec");
  r.allow_only({"n", "securities", "parties", "after_links", "collateral_fraction", "tightness", "cushion", "seed"});
  GeneratorSpec s;
  auto count = [&](const char *key, std::size_t fallback) {
    if (!r.has(key)) return fallback;
    const auto v = r.integer(key);
    if (v < 0) r.fail(std::string("field '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  s.n = count("n", s.n);
  s.securities = count("securities", s.securities);
  s.parties = count("parties", s.parties);
  s.after_links = count("after_links", s.after_links);
  if (r.has("collateral_fraction")) s.collateral_fraction = r.number("collateral_fraction");
  if (r.has("tightness")) s.tightness = r.number("tightness");
  if (r.has("cushion")) s.cushion = r.number("cushion");
  if (r.has("seed")) {
    const auto &v = r.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      r.fail("field 'seed' must be a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  s.validate();
  return s;
}

namespace detail {

inline constexpr Units generator_quantum = 10;

inline InstanceData generate_candidate(const GeneratorSpec &spec, std::uint64_t seed) {
  Rng rng(seed);
  InstanceData d;
  const std::size_t ns = spec.securities, np = spec.parties;

  for (std::size_t k = 0; k < ns; ++k) {
    const Units lot = generator_quantum * rng.between(1, 3);
    const Cents valuation = 100 * rng.between(1, 20);
    d.securities.push_back({"SEC" + std::to_string(k + 1), lot, valuation});
  }
  // Balance 0 is the central bank; party p owns balance p + 1 and positions
  // p * ns + k.
  d.balances.push_back({"CB", "central_bank", 0, true});
  for (std::size_t p = 0; p < np; ++p) {
    const auto owner = "P" + std::to_string(p + 1);
    d.balances.push_back({"B" + std::to_string(p + 1), owner, 0, false});
    for (std::size_t k = 0; k < ns; ++k)
      d.positions.push_back({owner + "_SEC" + std::to_string(k + 1), owner, k, 0, false});
  }
  auto balance_of = [](std::size_t p) { return p + 1; };
  auto position_of = [ns](std::size_t p, std::size_t k) { return p * ns + k; };

  for (std::size_t t = 0; t < spec.n; ++t) {
    Transaction tx;
    tx.id = "t" + std::to_string(t + 1);
    const auto from = static_cast<std::size_t>(rng.below(np));
    auto to = static_cast<std::size_t>(rng.below(np - 1));
    if (to >= from) ++to;
    const double kind_draw = rng.uniform();
    tx.kind = kind_draw < 0.70 ? TransactionKind::dvp : kind_draw < 0.85 ? TransactionKind::fop : TransactionKind::pfod;
    const auto k = static_cast<std::size_t>(rng.below(ns));
    const Units qty = generator_quantum * rng.between(1, 20);
    if (tx.kind != TransactionKind::pfod)
      tx.security = SecurityLeg{qty, k, position_of(from, k), position_of(to, k)};
    if (tx.kind == TransactionKind::dvp) {
      const double price = static_cast<double>(d.securities[k].valuation) / cents_per_euro * rng.uniform(0.8, 1.2);
      const auto euros = std::max<Cents>(1, static_cast<Cents>(std::llround(price * static_cast<double>(qty))));
      tx.cash = CashLeg{euros * 100, balance_of(to), balance_of(from)};
    } else if (tx.kind == TransactionKind::pfod) {
      tx.cash = CashLeg{100 * rng.between(50, 3000), balance_of(from), balance_of(to)};
    }
    tx.weight = 1.0;
    d.transactions.push_back(std::move(tx));
  }

  std::set<std::pair<std::size_t, std::size_t>> links;
  while (links.size() < spec.after_links) {
    auto a = static_cast<std::size_t>(rng.below(spec.n));
    auto b = static_cast<std::size_t>(rng.below(spec.n));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    links.emplace(a, b);
  }
  for (auto [a, b] : links) d.after_links.push_back({a, b});

  // Net outflow of every account under the all-ones settlement.
  std::vector<Cents> cash_out(d.balances.size(), 0), cash_gross(d.balances.size(), 0);
  std::vector<Units> sec_out(d.positions.size(), 0), sec_gross(d.positions.size(), 0);
  for (const auto &tx : d.transactions) {
    if (tx.cash) {
      cash_out[tx.cash->debtor] += tx.cash->amount;
      cash_gross[tx.cash->debtor] += tx.cash->amount;
      cash_out[tx.cash->creditor] -= tx.cash->amount;
    }
    if (tx.security) {
      sec_out[tx.security->debtor] += tx.security->quantity;
      sec_gross[tx.security->debtor] += tx.security->quantity;
      sec_out[tx.security->creditor] -= tx.security->quantity;
    }
  }
  const double t = spec.tightness;
  for (std::size_t b = 1; b < d.balances.size(); ++b) {
    const double base = t * static_cast<double>(std::max<Cents>(0, cash_out[b]));
    const double cushion = rng.uniform(0.0, spec.cushion) * static_cast<double>(cash_gross[b]);
    d.balances[b].initial = 100 * static_cast<Cents>(std::floor((base + cushion) / 100.0));
  }
  for (std::size_t s = 0; s < d.positions.size(); ++s) {
    const double base = t * static_cast<double>(std::max<Units>(0, sec_out[s]));
    const double cushion = rng.uniform(0.0, spec.cushion) * static_cast<double>(sec_gross[s]);
    d.positions[s].initial = generator_quantum * static_cast<Units>(std::floor((base + cushion) / generator_quantum));
  }

  // Credit lines: a CMB per selected party, one link per security that party
  // buys through a DvP.
  const auto n_cmb = static_cast<std::size_t>(std::llround(spec.collateral_fraction * static_cast<double>(np)));
  std::vector<std::size_t> order(np);
  for (std::size_t p = 0; p < np; ++p) order[p] = p;
  for (std::size_t i = np; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  std::vector<std::size_t> cmb_parties(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_cmb));
  std::sort(cmb_parties.begin(), cmb_parties.end());
  for (auto p : cmb_parties) {
    const auto b = balance_of(p);
    const double gross_euros = static_cast<double>(cash_gross[b]) / cents_per_euro;
    const auto limit_euros = std::max<Cents>(100, static_cast<Cents>(std::ceil(rng.uniform(0.3, 0.8) * gross_euros)));
    const auto c = d.cmbs.size();
    d.cmbs.push_back({"CMB" + std::to_string(c + 1), b, 0, limit_euros * 100});
    for (std::size_t k = 0; k < ns; ++k) {
      bool buys = false;
      for (const auto &tx : d.transactions)
        buys = buys || (tx.kind == TransactionKind::dvp && tx.cash->debtor == b && tx.security->security == k);
      if (!buys) continue;
      const Units qmin = generator_quantum * rng.between(0, 3);
      d.spls.push_back({"SPL" + std::to_string(d.spls.size() + 1), c, position_of(p, k), qmin});
    }
  }
  return d;
}

} // namespace detail

inline constexpr int generator_max_attempts = 64;

/// Deterministic under spec.seed.
inline Instance generate_instance(const GeneratorSpec &spec) {
  spec.validate();
  for (int attempt = 0; attempt < generator_max_attempts; ++attempt) {
    const auto seed = attempt == 0 ? spec.seed : derive_seed(spec.seed, static_cast<std::uint64_t>(attempt));
    Instance inst(detail::generate_candidate(spec, seed));
    if (spec.tightness >= 1) return inst;
    if (!check_feasibility(inst, Settlement::all(inst.num_transactions()),
                           compute_collateral(inst, Settlement::all(inst.num_transactions())).lots)
             .feasible)
      return inst;
  }
  throw Error(ErrorKind::invalid_value, "could not generate an instance with a binding constraint");
}

} // namespace ntsp
