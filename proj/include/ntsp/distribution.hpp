/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "ntsp/error.hpp"
#include "ntsp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ntsp {

/// Measurement outcome of an n-qubit register; bit i is qubit i, which
/// encodes transaction i. Registers are limited to 64 qubits.
using Bitstring = std::uint64_t;

inline constexpr std::size_t max_register_width = 64;

inline std::string bitstring_text(Bitstring x, std::size_t n) {
  std::string s(n, '0');
  for (std::size_t i = 0; i < n; ++i)
    if ((x >> i) & 1U) s[i] = '1';
  return s;
}

inline Bitstring parse_bitstring(const std::string &s) {
  if (s.size() > max_register_width)
    throw Error(ErrorKind::capacity, "bitstring longer than 64");
  Bitstring x = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') x |= Bitstring{1} << i;
    else if (s[i] != '0') throw Error(ErrorKind::invalid_value, "bitstring must contain only 0/1");
  }
  return x;
}

inline Settlement to_settlement(Bitstring x, std::size_t n) { return Settlement::from_word(x, n); }

/// Probability per observed bitstring, sorted by bitstring.
struct ProbabilityMap {
  std::size_t n = 0;
  std::vector<std::pair<Bitstring, double>> entries;

  double total() const {
    double s = 0;
    for (const auto &[_, p] : entries) s += p;
    return s;
  }
  double at(Bitstring x) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), x,
                               [](const auto &e, Bitstring v) { return e.first < v; });
    return (it != entries.end() && it->first == x) ? it->second : 0.0;
  }
  std::size_t size() const { return entries.size(); }

  void require_normalized(double tol = 1e-9) const {
    if (std::abs(total() - 1.0) > tol)
      throw Error(ErrorKind::not_normalized,
                  "probabilities sum to " + std::to_string(total()));
  }

  static ProbabilityMap from_unordered(std::size_t n, const std::unordered_map<Bitstring, double> &m) {
    ProbabilityMap pm;
    pm.n = n;
    pm.entries.assign(m.begin(), m.end());
    std::sort(pm.entries.begin(), pm.entries.end());
    return pm;
  }
};

/// Shot counts per observed bitstring, sorted by bitstring.
struct OutcomeDistribution {
  std::size_t n = 0;
  std::int64_t shots = 0;
  std::vector<std::pair<Bitstring, std::int64_t>> counts;

  std::int64_t count(Bitstring x) const {
    auto it = std::lower_bound(counts.begin(), counts.end(), x,
                               [](const auto &e, Bitstring v) { return e.first < v; });
    return (it != counts.end() && it->first == x) ? it->second : 0;
  }

  ProbabilityMap probabilities() const {
    if (shots <= 0) throw Error(ErrorKind::invalid_value, "distribution has no shots");
    ProbabilityMap pm;
    pm.n = n;
    pm.entries.reserve(counts.size());
    for (const auto &[x, c] : counts)
      pm.entries.emplace_back(x, static_cast<double>(c) / static_cast<double>(shots));
    return pm;
  }

  static OutcomeDistribution from_samples(std::size_t n, const std::vector<Bitstring> &samples) {
    std::unordered_map<Bitstring, std::int64_t> m;
    for (auto s : samples) ++m[s];
    OutcomeDistribution d;
    d.n = n;
    d.shots = static_cast<std::int64_t>(samples.size());
    d.counts.assign(m.begin(), m.end());
    std::sort(d.counts.begin(), d.counts.end());
    return d;
  }
};

} // namespace ntsp
