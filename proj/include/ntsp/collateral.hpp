/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Greedy auto-collateralization on flow: given a settlement proposal X,
// decide how many lots each CMB-position link pledges.

#include "ntsp/model.hpp"

#include <limits>

namespace ntsp {

struct CollateralOutcome {
  CollateralVector lots;
  std::vector<Cents> credit_granted; // aCo per balance
  std::vector<Cents> credit_needed;  // aNe per balance
  std::vector<std::uint8_t> covered; // final balance + credit >= 0
};

/// aNe of a CMB client balance, cents.
inline Cents credit_needed(const Instance &inst, const Settlement &x, std::size_t balance) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  if (balance >= inst.balances().size())
    throw Error(ErrorKind::dangling_reference, "balance index out of range");
  if (!inst.cmb_of_balance(balance))
    throw Error(ErrorKind::invalid_value,
                "balance '" + inst.balances()[balance].id + "' has no credit memorandum balance");
  return credit_shortfall(inst, x, balance);
}

/// qLi of a link, units.
inline Units pledge_cap(const Instance &inst, const Settlement &x, std::size_t link) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  if (link >= inst.num_spls()) throw Error(ErrorKind::dangling_reference, "spl index out of range");
  return link_pledge_cap(inst, x, link);
}

/// Algorithm: for every CMB client balance that ends negative but within its
/// credit limit, fill its links in declaration order with the largest lot
/// count allowed by the remaining limit, the link's pledge cap and the units
/// actually present on the position; a link is used only if the pledged
/// quantity reaches its minimum. The balance's pledges are kept only when the
/// credit collected covers the deficit.
inline CollateralOutcome compute_collateral(const Instance &inst, const Settlement &x) {
  require_length(x.size(), inst.num_transactions(), "settlement");
  const auto nb = inst.balances().size(), np = inst.positions().size();
  const auto &txs = inst.transactions();

  // One pass over the transactions gives every account's movement.
  std::vector<Cents> cash_final(nb);
  std::vector<Units> pos_final(np);
  for (std::size_t b = 0; b < nb; ++b) cash_final[b] = inst.balances()[b].initial;
  for (std::size_t s = 0; s < np; ++s) pos_final[s] = inst.positions()[s].initial;
  for (std::size_t t = 0; t < txs.size(); ++t) {
    if (!x[t]) continue;
    if (txs[t].cash) {
      cash_final[txs[t].cash->debtor] -= txs[t].cash->amount;
      cash_final[txs[t].cash->creditor] += txs[t].cash->amount;
    }
    if (txs[t].security) {
      pos_final[txs[t].security->debtor] -= txs[t].security->quantity;
      pos_final[txs[t].security->creditor] += txs[t].security->quantity;
    }
  }

  CollateralOutcome out;
  out.lots = CollateralVector(inst.num_spls());
  out.credit_granted.assign(nb, 0);
  out.credit_needed.assign(nb, 0);
  out.covered.assign(nb, 1);
  for (std::size_t b = 0; b < nb; ++b) {
    const Cents val = cash_final[b];
    out.credit_needed[b] = std::max<Cents>(0, -val);
    if (inst.balances()[b].is_central_bank) continue;
    out.covered[b] = val >= 0;
    if (val >= 0) continue; // no additional credit required
    const auto cmb_index = inst.cmb_of_balance(b);
    if (!cmb_index) continue;
    const auto &cmb = inst.cmbs()[*cmb_index];
    if (-val > cmb.credit_limit) continue; // credit required exceeds limit

    std::vector<std::pair<std::size_t, Units>> tentative;
    Cents credit = 0;
    Cents limit_left = cmb.credit_limit;
    for (auto l : inst.spls_of_cmb(*cmb_index)) {
      const auto &link = inst.spls()[l];
      const auto &sec = inst.securities()[inst.positions()[link.position].security];
      Units cap = 0;
      for (auto t : inst.eligible_transactions(l))
        if (x[t]) cap += txs[t].quantity();
      const Units on_hand = std::max<Units>(0, pos_final[link.position]);
      Units lot_max = std::min(cap, on_hand) / sec.lot_size;
      const Cents lot_value = sec.lot_size * sec.valuation;
      if (lot_value > 0) lot_max = std::min(lot_max, limit_left / lot_value);
      if (lot_max <= 0 || link.qmin > lot_max * sec.lot_size) continue;
      tentative.emplace_back(l, lot_max);
      credit += lot_max * lot_value;
      limit_left -= lot_max * lot_value;
    }
    if (val + credit >= 0) {
      for (const auto &[l, lots] : tentative) out.lots.lots[l] += lots;
      out.credit_granted[b] = credit;
      out.covered[b] = 1;
    }
  }
  return out;
}

} // namespace ntsp
