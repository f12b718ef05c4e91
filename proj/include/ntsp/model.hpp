/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "ntsp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ntsp {

/// Money is carried as exact integer cents, security quantities as exact
/// integer units. Nothing on the feasibility path touches floating point.
using Cents = std::int64_t;
using Units = std::int64_t;

inline constexpr double cents_per_euro = 100.0;

enum class TransactionKind { dvp, fop, pfod };

inline const char *to_string(TransactionKind k) {
  switch (k) {
  case TransactionKind::dvp: return "DvP";
  case TransactionKind::fop: return "FoP";
  case TransactionKind::pfod: return "PfoD";
  }
  return "?";
}

struct SecurityType {
  std::string id;
  Units lot_size = 1;
  Cents valuation = 0; // cents per unit
};

struct CashBalance {
  std::string id;
  std::string owner;
  Cents initial = 0;
  bool is_central_bank = false;
};

struct SecurityPosition {
  std::string id;
  std::string owner;
  std::size_t security = 0;
  Units initial = 0;
  bool is_issuer = false;
};

struct CashLeg {
  Cents amount = 0;
  std::size_t debtor = 0;   // balance index
  std::size_t creditor = 0; // balance index
};

struct SecurityLeg {
  Units quantity = 0;
  std::size_t security = 0;
  std::size_t debtor = 0;   // position index
  std::size_t creditor = 0; // position index
};

struct Transaction {
  std::string id;
  TransactionKind kind = TransactionKind::dvp;
  std::optional<CashLeg> cash;
  std::optional<SecurityLeg> security;
  double weight = 1.0;

  Cents amount() const { return cash ? cash->amount : 0; }
  Units quantity() const { return security ? security->quantity : 0; }
};

/// x[second] <= x[first]
struct AfterLink {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct Cmb {
  std::string id;
  std::size_t client = 0;   // balance eligible for credit
  std::size_t provider = 0; // central-bank balance
  Cents credit_limit = 0;
};

struct SplLink {
  std::string id;
  std::size_t cmb = 0;
  std::size_t position = 0;
  Units qmin = 0;
};

/// Raw instance content with references already resolved to indices.
struct InstanceData {
  std::vector<SecurityType> securities;
  std::vector<CashBalance> balances;
  std::vector<SecurityPosition> positions;
  std::vector<Transaction> transactions;
  std::vector<AfterLink> after_links;
  std::vector<Cmb> cmbs;
  std::vector<SplLink> spls;
};

/// Validated, indexed and immutable settlement batch.
class Instance {
public:
  explicit Instance(InstanceData data) : d_(std::move(data)) {
    validate();
    build_indices();
  }

  const std::vector<SecurityType> &securities() const { return d_.securities; }
  const std::vector<CashBalance> &balances() const { return d_.balances; }
  const std::vector<SecurityPosition> &positions() const { return d_.positions; }
  const std::vector<Transaction> &transactions() const { return d_.transactions; }
  const std::vector<AfterLink> &after_links() const { return d_.after_links; }
  const std::vector<Cmb> &cmbs() const { return d_.cmbs; }
  const std::vector<SplLink> &spls() const { return d_.spls; }
  const InstanceData &data() const { return d_; }

  std::size_t num_transactions() const { return d_.transactions.size(); }
  std::size_t num_spls() const { return d_.spls.size(); }

  const std::vector<std::size_t> &balance_debits(std::size_t b) const { return bal_debit_[b]; }
  const std::vector<std::size_t> &balance_credits(std::size_t b) const { return bal_credit_[b]; }
  const std::vector<std::size_t> &position_debits(std::size_t s) const { return pos_debit_[s]; }
  const std::vector<std::size_t> &position_credits(std::size_t s) const { return pos_credit_[s]; }

  /// Transactions that may trigger collateral on flow through link l.
  const std::vector<std::size_t> &eligible_transactions(std::size_t l) const { return link_tx_[l]; }

  /// CMB whose client is balance b, if any.
  std::optional<std::size_t> cmb_of_balance(std::size_t b) const {
    return cmb_of_balance_[b] == npos ? std::nullopt : std::optional(cmb_of_balance_[b]);
  }
  /// Links feeding credit to CMB c, in declaration order.
  const std::vector<std::size_t> &spls_of_cmb(std::size_t c) const { return cmb_links_[c]; }
  std::optional<std::size_t> spl_of_position(std::size_t s) const {
    return spl_of_position_[s] == npos ? std::nullopt : std::optional(spl_of_position_[s]);
  }

  std::optional<std::size_t> find_transaction(const std::string &id) const {
    for (std::size_t i = 0; i < d_.transactions.size(); ++i)
      if (d_.transactions[i].id == id)
        return i;
    return std::nullopt;
  }

private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void validate() const;
  void build_indices();

  InstanceData d_;
  std::vector<std::vector<std::size_t>> bal_debit_, bal_credit_, pos_debit_,
      pos_credit_, link_tx_, cmb_links_;
  std::vector<std::size_t> cmb_of_balance_, spl_of_position_;
};

inline void Instance::validate() const {
  const auto nb = d_.balances.size(), np = d_.positions.size(),
             ns = d_.securities.size(), nt = d_.transactions.size();
  auto dangling = [](const std::string &what) {
    throw Error(ErrorKind::dangling_reference, what);
  };
  auto invalid = [](const std::string &what) {
    throw Error(ErrorKind::invalid_value, what);
  };
  auto unique_ids = [](const auto &items, const char *what) {
    std::unordered_set<std::string> seen;
    for (const auto &item : items)
      if (!seen.insert(item.id).second)
        throw Error(ErrorKind::duplicate, std::string(what) + " id '" + item.id + "'");
  };
  unique_ids(d_.securities, "security");
  unique_ids(d_.balances, "balance");
  unique_ids(d_.positions, "position");
  unique_ids(d_.transactions, "transaction");
  unique_ids(d_.cmbs, "cmb");
  unique_ids(d_.spls, "spl");

  for (const auto &s : d_.securities) {
    if (s.lot_size < 1) invalid("security '" + s.id + "' lot_size < 1");
    if (s.valuation < 0) invalid("security '" + s.id + "' valuation < 0");
  }
  for (const auto &b : d_.balances)
    if (b.initial < 0) invalid("balance '" + b.id + "' initial < 0");
  for (const auto &p : d_.positions) {
    if (p.security >= ns) dangling("position '" + p.id + "' security");
    if (p.initial < 0) invalid("position '" + p.id + "' initial < 0");
  }
  for (const auto &t : d_.transactions) {
    const bool want_cash = t.kind != TransactionKind::fop;
    const bool want_sec = t.kind != TransactionKind::pfod;
    if (want_cash != t.cash.has_value() || want_sec != t.security.has_value())
      invalid("transaction '" + t.id + "' legs do not match kind " + to_string(t.kind));
    if (!std::isfinite(t.weight) || t.weight < 0.0)
      invalid("transaction '" + t.id + "' weight must be finite and non-negative");
    if (t.cash) {
      if (t.cash->debtor >= nb || t.cash->creditor >= nb)
        dangling("transaction '" + t.id + "' cash leg balance");
      if (t.cash->debtor == t.cash->creditor)
        invalid("transaction '" + t.id + "' cash debtor equals creditor");
      if (t.cash->amount < 0) invalid("transaction '" + t.id + "' amount < 0");
    }
    if (t.security) {
      const auto &leg = *t.security;
      if (leg.security >= ns) dangling("transaction '" + t.id + "' security");
      if (leg.debtor >= np || leg.creditor >= np)
        dangling("transaction '" + t.id + "' security leg position");
      if (leg.debtor == leg.creditor)
        invalid("transaction '" + t.id + "' security debtor equals creditor");
      if (leg.quantity < 1) invalid("transaction '" + t.id + "' quantity < 1");
      if (d_.positions[leg.debtor].security != leg.security ||
          d_.positions[leg.creditor].security != leg.security)
        invalid("transaction '" + t.id + "' positions hold a different security");
    }
  }
  for (const auto &l : d_.after_links) {
    if (l.first >= nt || l.second >= nt) dangling("after-link transaction");
    if (l.first == l.second)
      invalid("after-link from transaction '" + d_.transactions[l.first].id + "' to itself");
  }
  std::unordered_set<std::size_t> clients;
  for (const auto &c : d_.cmbs) {
    if (c.client >= nb || c.provider >= nb) dangling("cmb '" + c.id + "' balance");
    if (!d_.balances[c.provider].is_central_bank)
      invalid("cmb '" + c.id + "' provider is not a central-bank balance");
    if (c.client == c.provider) invalid("cmb '" + c.id + "' client equals provider");
    if (c.credit_limit < 0) invalid("cmb '" + c.id + "' credit_limit < 0");
    if (!clients.insert(c.client).second)
      throw Error(ErrorKind::duplicate,
                  "balance '" + d_.balances[c.client].id + "' has more than one credit provider");
  }
  std::unordered_set<std::size_t> targeted;
  for (const auto &l : d_.spls) {
    if (l.cmb >= d_.cmbs.size()) dangling("spl '" + l.id + "' cmb");
    if (l.position >= np) dangling("spl '" + l.id + "' position");
    if (l.qmin < 0) invalid("spl '" + l.id + "' qmin < 0");
    if (!targeted.insert(l.position).second)
      throw Error(ErrorKind::duplicate,
                  "position '" + d_.positions[l.position].id + "' is targeted by more than one spl");
  }

  // Kahn's algorithm on the after-link graph.
  std::vector<std::vector<std::size_t>> out(nt);
  std::vector<std::size_t> indegree(nt, 0);
  for (const auto &l : d_.after_links) {
    out[l.first].push_back(l.second);
    ++indegree[l.second];
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < nt; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (auto w : out[v])
      if (--indegree[w] == 0) ready.push_back(w);
  }
  if (visited != nt) throw Error(ErrorKind::cycle, "after-link graph contains a cycle");
}

inline void Instance::build_indices() {
  const auto nb = d_.balances.size(), np = d_.positions.size();
  bal_debit_.assign(nb, {});
  bal_credit_.assign(nb, {});
  pos_debit_.assign(np, {});
  pos_credit_.assign(np, {});
  for (std::size_t t = 0; t < d_.transactions.size(); ++t) {
    const auto &tx = d_.transactions[t];
    if (tx.cash) {
      bal_debit_[tx.cash->debtor].push_back(t);
      bal_credit_[tx.cash->creditor].push_back(t);
    }
    if (tx.security) {
      pos_debit_[tx.security->debtor].push_back(t);
      pos_credit_[tx.security->creditor].push_back(t);
    }
  }
  cmb_of_balance_.assign(nb, npos);
  for (std::size_t c = 0; c < d_.cmbs.size(); ++c)
    cmb_of_balance_[d_.cmbs[c].client] = c;
  spl_of_position_.assign(np, npos);
  cmb_links_.assign(d_.cmbs.size(), {});
  link_tx_.assign(d_.spls.size(), {});
  for (std::size_t l = 0; l < d_.spls.size(); ++l) {
    const auto &link = d_.spls[l];
    spl_of_position_[link.position] = l;
    cmb_links_[link.cmb].push_back(l);
    const auto client = d_.cmbs[link.cmb].client;
    for (std::size_t t = 0; t < d_.transactions.size(); ++t) {
      const auto &tx = d_.transactions[t];
      if (tx.cash && tx.security && tx.cash->debtor == client &&
          tx.security->creditor == link.position)
        link_tx_[l].push_back(t);
    }
  }
}

/// Settlement status per transaction (1 = settled).
class Settlement {
public:
  Settlement() = default;
  explicit Settlement(std::size_t n, std::uint8_t value = 0) : bits_(n, value) {}
  explicit Settlement(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto &b : bits_) b = b ? 1 : 0;
  }

  static Settlement all(std::size_t n) { return Settlement(n, 1); }

  /// Bit i of `word` is the status of transaction i.
  static Settlement from_word(std::uint64_t word, std::size_t n) {
    Settlement s(n);
    for (std::size_t i = 0; i < n; ++i) s.bits_[i] = (word >> i) & 1U;
    return s;
  }
  std::uint64_t to_word() const {
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < bits_.size() && i < 64; ++i)
      w |= std::uint64_t{bits_[i]} << i;
    return w;
  }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  std::string to_string() const {
    std::string s;
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const Settlement &, const Settlement &) = default;
  friend auto operator<=>(const Settlement &, const Settlement &) = default;

private:
  std::vector<std::uint8_t> bits_;
};

/// Lots pledged per SPL link.
struct CollateralVector {
  std::vector<Units> lots;

  CollateralVector() = default;
  explicit CollateralVector(std::size_t n) : lots(n, 0) {}
  explicit CollateralVector(std::vector<Units> v) : lots(std::move(v)) {}

  std::size_t size() const { return lots.size(); }
  bool is_zero() const {
    return std::all_of(lots.begin(), lots.end(), [](Units v) { return v == 0; });
  }
  friend bool operator==(const CollateralVector &, const CollateralVector &) = default;
};

/// Eq-level objective: weighted volume of settled cash blended with the
/// weighted count of settled transactions. A term whose denominator vanishes
/// contributes 0.
inline double payoff(const Instance &inst, const Settlement &x, double lambda) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  double wa_all = 0, wa_set = 0, w_all = 0, w_set = 0;
  const auto &txs = inst.transactions();
  for (std::size_t t = 0; t < txs.size(); ++t) {
    const double w = txs[t].weight;
    const double wa = w * static_cast<double>(txs[t].amount());
    wa_all += wa;
    w_all += w;
    if (x[t]) {
      wa_set += wa;
      w_set += w;
    }
  }
  const double cash_term = wa_all > 0 ? wa_set / wa_all : 0.0;
  const double count_term = w_all > 0 ? w_set / w_all : 0.0;
  return lambda * cash_term + (1.0 - lambda) * count_term;
}

/// Collateral quantities implied by Y: pledged units per link and position,
/// credit per balance.
struct CollateralAmounts {
  std::vector<Units> link_quantity;    // qCo_l
  std::vector<Units> position_pledged; // qCo_s
  std::vector<Cents> balance_credit;   // aCo_b
};

inline CollateralAmounts collateral_amounts(const Instance &inst,
                                            const CollateralVector &y) {
  require_length(y.size(), inst.num_spls(), "collateral vector");
  CollateralAmounts out;
  out.link_quantity.assign(inst.num_spls(), 0);
  out.position_pledged.assign(inst.positions().size(), 0);
  out.balance_credit.assign(inst.balances().size(), 0);
  for (std::size_t l = 0; l < inst.num_spls(); ++l) {
    const auto &link = inst.spls()[l];
    const auto &pos = inst.positions()[link.position];
    const auto &sec = inst.securities()[pos.security];
    const Units q = sec.lot_size * y.lots[l];
    out.link_quantity[l] = q;
    out.position_pledged[link.position] += q;
    out.balance_credit[inst.cmbs()[link.cmb].client] += q * sec.valuation;
  }
  return out;
}

struct NetFlows {
  std::vector<Cents> cash;       // initial + credit + inflow - outflow
  std::vector<Units> securities; // initial - pledged + inflow - outflow
  CollateralAmounts collateral;
};

/// Settled cash moved out of and into balance b under X.
inline std::pair<Cents, Cents> cash_movement(const Instance &inst,
                                             const Settlement &x, std::size_t b) {
  Cents out = 0, in = 0;
  for (auto t : inst.balance_debits(b))
    if (x[t]) out += inst.transactions()[t].amount();
  for (auto t : inst.balance_credits(b))
    if (x[t]) in += inst.transactions()[t].amount();
  return {out, in};
}

inline std::pair<Units, Units> security_movement(const Instance &inst,
                                                 const Settlement &x, std::size_t s) {
  Units out = 0, in = 0;
  for (auto t : inst.position_debits(s))
    if (x[t]) out += inst.transactions()[t].quantity();
  for (auto t : inst.position_credits(s))
    if (x[t]) in += inst.transactions()[t].quantity();
  return {out, in};
}

inline NetFlows net_flows(const Instance &inst, const Settlement &x,
                          const CollateralVector &y) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  NetFlows nf;
  nf.collateral = collateral_amounts(inst, y);
  nf.cash.resize(inst.balances().size());
  nf.securities.resize(inst.positions().size());
  for (std::size_t b = 0; b < inst.balances().size(); ++b) {
    const auto [out, in] = cash_movement(inst, x, b);
    nf.cash[b] = inst.balances()[b].initial + nf.collateral.balance_credit[b] + in - out;
  }
  for (std::size_t s = 0; s < inst.positions().size(); ++s) {
    const auto [out, in] = security_movement(inst, x, s);
    nf.securities[s] = inst.positions()[s].initial - nf.collateral.position_pledged[s] + in - out;
  }
  return nf;
}

enum class ConstraintClass {
  cash,         // balance non-negativity
  security,     // position non-negativity
  after_link,
  credit_limit, // aNe <= aCo <= aLi
  pledge_range, // qMi <= qCo <= qLi
};

inline const char *to_string(ConstraintClass c) {
  switch (c) {
  case ConstraintClass::cash: return "cash";
  case ConstraintClass::security: return "security";
  case ConstraintClass::after_link: return "after_link";
  case ConstraintClass::credit_limit: return "credit_limit";
  case ConstraintClass::pledge_range: return "pledge_range";
  }
  return "?";
}

/// Magnitudes: euros for cash classes, units for security classes, 1 for
/// an after-link.
struct Violation {
  ConstraintClass constraint;
  std::string id;
  double magnitude = 0;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;

  std::size_t count(ConstraintClass c) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [c](const Violation &v) { return v.constraint == c; }));
  }
};

/// Credit still required by balance b after settling X (aNe), cents.
inline Cents credit_shortfall(const Instance &inst, const Settlement &x, std::size_t b) {
  const auto [out, in] = cash_movement(inst, x, b);
  return std::max<Cents>(0, out - in - inst.balances()[b].initial);
}

/// Upper pledge bound of link l (qLi), units.
inline Units link_pledge_cap(const Instance &inst, const Settlement &x, std::size_t l) {
  const auto client = inst.cmbs()[inst.spls()[l].cmb].client;
  if (credit_shortfall(inst, x, client) <= 0) return 0;
  Units cap = 0;
  for (auto t : inst.eligible_transactions(l))
    if (x[t]) cap += inst.transactions()[t].quantity();
  return cap;
}

inline FeasibilityReport check_feasibility(const Instance &inst, const Settlement &x,
                                           const CollateralVector &y,
                                           bool strict_collateral = false) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  require_length(y.size(), inst.num_spls(), "collateral vector");
  FeasibilityReport report;
  const auto nf = net_flows(inst, x, y);
  for (std::size_t b = 0; b < inst.balances().size(); ++b)
    if (!inst.balances()[b].is_central_bank && nf.cash[b] < 0)
      report.violations.push_back({ConstraintClass::cash, inst.balances()[b].id,
                                   static_cast<double>(-nf.cash[b]) / cents_per_euro});
  for (std::size_t s = 0; s < inst.positions().size(); ++s)
    if (!inst.positions()[s].is_issuer && nf.securities[s] < 0)
      report.violations.push_back({ConstraintClass::security, inst.positions()[s].id,
                                   static_cast<double>(-nf.securities[s])});
  for (const auto &link : inst.after_links())
    if (x[link.second] > x[link.first])
      report.violations.push_back(
          {ConstraintClass::after_link,
           inst.transactions()[link.first].id + "->" + inst.transactions()[link.second].id, 1.0});
  if (strict_collateral) {
    for (const auto &cmb : inst.cmbs()) {
      const Cents credit = nf.collateral.balance_credit[cmb.client];
      if (credit == 0) continue;
      const Cents needed = credit_shortfall(inst, x, cmb.client);
      if (credit < needed)
        report.violations.push_back({ConstraintClass::credit_limit, cmb.id,
                                     static_cast<double>(needed - credit) / cents_per_euro});
      if (credit > cmb.credit_limit)
        report.violations.push_back({ConstraintClass::credit_limit, cmb.id,
                                     static_cast<double>(credit - cmb.credit_limit) / cents_per_euro});
    }
    for (std::size_t l = 0; l < inst.num_spls(); ++l) {
      const Units q = nf.collateral.link_quantity[l];
      if (q == 0) continue;
      const auto &link = inst.spls()[l];
      const Units cap = link_pledge_cap(inst, x, l);
      if (q < link.qmin)
        report.violations.push_back({ConstraintClass::pledge_range, link.id,
                                     static_cast<double>(link.qmin - q)});
      if (q > cap)
        report.violations.push_back({ConstraintClass::pledge_range, link.id,
                                     static_cast<double>(q - cap)});
    }
  }
  report.feasible = report.violations.empty();
  return report;
}

} // namespace ntsp
