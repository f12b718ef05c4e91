/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Classical simulation of the hardware-efficient ansatz: blocks of one R_y
// rotation layer followed by nearest-neighbour CNOT layers, measured in the
// computational basis.
//
// Two simulation paths:
//  * product path: with a single rotation layer the CNOT network only
//    permutes basis states, so a shot is n independent Bernoulli bits pushed
//    through the network as XOR updates. Works up to 64 qubits.
//  * statevector path: full real-amplitude simulation (every gate here is
//    real), up to 26 qubits. Required for two or more blocks.

#include "ntsp/distribution.hpp"
#include "ntsp/error.hpp"
#include "ntsp/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ntsp {

inline constexpr double pi = std::numbers::pi;
inline constexpr std::size_t statevector_max_qubits = 26;

using EntanglerLayer = std::vector<std::pair<std::size_t, std::size_t>>; // (control, target)

struct AnsatzConfig {
  std::size_t n = 1;
  std::size_t layers = 1; // 0: single rotation layer, no entanglers
  std::vector<EntanglerLayer> entanglers; // applied after every rotation layer

  /// Even pairs (0,1),(2,3),... then odd pairs (1,2),(3,4),...
  static std::vector<EntanglerLayer> nearest_neighbour(std::size_t n) {
    EntanglerLayer even, odd;
    for (std::size_t q = 0; q + 1 < n; q += 2) even.emplace_back(q, q + 1);
    for (std::size_t q = 1; q + 1 < n; q += 2) odd.emplace_back(q, q + 1);
    return {even, odd};
  }

  static AnsatzConfig hardware_efficient(std::size_t n, std::size_t layers = 1) {
    return AnsatzConfig{n, layers, nearest_neighbour(n)};
  }

  static AnsatzConfig unentangled(std::size_t n) { return AnsatzConfig{n, 0, {}}; }

  std::size_t rotation_layers() const { return layers == 0 ? 1 : layers; }
  std::size_t num_params() const { return n * rotation_layers(); }
  bool entangled() const { return layers > 0 && !entanglers.empty(); }
  bool product_path_applicable() const { return rotation_layers() == 1; }

  void validate() const {
    if (n < 1) throw Error(ErrorKind::invalid_value, "ansatz needs at least one qubit");
    for (const auto &layer : entanglers)
      for (auto [c, t] : layer)
        if (c >= n || t >= n || c == t)
          throw Error(ErrorKind::invalid_value, "entangler pair out of range");
  }
};

struct MappingConfig {
  double sigma = 0.35587;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Integral over [a, b] of the normal density with mean mu and std sigma.
inline double gaussian_mass(double a, double b, double mu, double sigma) {
  return normal_cdf((b - mu) / sigma) - normal_cdf((a - mu) / sigma);
}

} // namespace detail

/// Angle mapping G: [0, pi] -> [0, pi]. Gaussian CDFs centred at 0 and pi,
/// integrated from 0 to theta + pi/2, normalised by (2/pi) times the mass of
/// the 0-centred Gaussian on [0, pi], shifted by -pi/2. Angles are pushed
/// towards the nearer end point; pi/2 is a fixed point.
inline double map_angle(double theta, double sigma) {
  if (!(sigma > 0)) throw Error(ErrorKind::invalid_value, "mapping sigma must be positive");
  theta = std::clamp(theta, 0.0, pi);
  const double upper = theta + pi / 2;
  const double num = detail::gaussian_mass(0, upper, 0, sigma) + detail::gaussian_mass(0, upper, pi, sigma);
  const double den = (2 / pi) * detail::gaussian_mass(0, pi, 0, sigma);
  return std::clamp(num / den - pi / 2, 0.0, pi);
}

inline std::vector<double> map_params(std::span<const double> theta, const MappingConfig &cfg) {
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = map_angle(theta[i], cfg.sigma);
  return out;
}

/// P(X <= k) for X ~ Binomial(n, p).
inline double binomial_cdf(std::size_t n, double p, std::size_t k) {
  if (k >= n) return 1.0;
  if (p <= 0) return 1.0;
  if (p >= 1) return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  double s = 0;
  for (std::size_t j = 0; j <= k; ++j) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(j) + 1) -
                            std::lgamma(static_cast<double>(n - j) + 1) + static_cast<double>(j) * lp +
                            static_cast<double>(n - j) * lq;
    s += std::exp(log_term);
  }
  return std::min(1.0, s);
}

/// Per-qubit flip probability associated with a mapping width sigma.
inline double sparsity_flip_probability(double sigma) { return (1 - std::exp(-sigma / 2)) / 2; }

/// Smallest k with 2^k >= delta.
inline std::size_t ceil_log2(std::uint64_t delta) {
  std::size_t k = 0;
  while ((std::uint64_t{1} << k) < delta) ++k;
  return k;
}

/// sigma >= 0 such that, with flip probability (1 - e^{-sigma/2}) / 2 per
/// qubit, at most ceil(log2 delta) flips occur with probability 1 - 1/S.
/// Bisection to 1e-10 absolute.
inline double solve_sigma(std::size_t n, std::uint64_t shots, std::uint64_t delta) {
  if (n < 1 || shots < 2 || delta < 1)
    throw Error(ErrorKind::invalid_value, "solve_sigma needs n >= 1, shots >= 2, delta >= 1");
  const std::size_t k = ceil_log2(delta);
  const double target = 1.0 - 1.0 / static_cast<double>(shots);
  auto f = [&](double sigma) { return binomial_cdf(n, sparsity_flip_probability(sigma), k) - target; };
  double lo = 0.0, hi = 1.0;
  // f(0) = 1 - target > 0 and f decreases in sigma towards P(Bin(n, 1/2) <= k) - target.
  while (f(hi) > 0) {
    hi *= 2;
    if (hi > 1e3)
      throw Error(ErrorKind::no_root, "no sigma reaches the requested sparsity (delta too large for n)");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Synthetic readout channel applied per shot and per qubit.
struct ReadoutNoise {
  std::vector<double> flip01; // P(read 0 | state 1)
  std::vector<double> flip10; // P(read 1 | state 0)
  std::uint64_t seed = 0;

  static ReadoutNoise uniform(std::size_t n, double p01, double p10, std::uint64_t seed = 0) {
    return ReadoutNoise{std::vector<double>(n, p01), std::vector<double>(n, p10), seed};
  }

  /// Noisier preset modelled on previous-generation devices.
  static ReadoutNoise eagle_like(std::size_t n, std::uint64_t seed = 0) { return uniform(n, 0.030, 0.015, seed); }
  /// Less noisy preset modelled on current-generation devices.
  static ReadoutNoise heron_like(std::size_t n, std::uint64_t seed = 0) { return uniform(n, 0.015, 0.008, seed); }

  static std::optional<ReadoutNoise> preset(const std::string &name, std::size_t n, std::uint64_t seed = 0) {
    if (name == "eagle-like") return eagle_like(n, seed);
    if (name == "heron-like") return heron_like(n, seed);
    return std::nullopt;
  }

  void validate(std::size_t n) const {
    if (flip01.size() != n || flip10.size() != n)
      throw Error(ErrorKind::length_mismatch, "readout noise must list one probability per qubit");
    for (std::size_t i = 0; i < n; ++i)
      if (!(flip01[i] >= 0 && flip01[i] < 1 && flip10[i] >= 0 && flip10[i] < 1))
        throw Error(ErrorKind::invalid_value, "readout flip probabilities must lie in [0, 1)");
  }
};

enum class SimulationPath { automatic, product, statevector };

namespace detail {

inline Bitstring apply_entanglers(Bitstring x, const std::vector<EntanglerLayer> &layers) {
  for (const auto &layer : layers)
    for (auto [c, t] : layer)
      if ((x >> c) & 1U) x ^= Bitstring{1} << t;
  return x;
}

inline Bitstring apply_readout(Bitstring x, std::size_t n, const ReadoutNoise &noise, Rng &rng) {
  for (std::size_t q = 0; q < n; ++q) {
    const bool one = (x >> q) & 1U;
    const double p = one ? noise.flip01[q] : noise.flip10[q];
    if (p > 0 && rng.uniform() < p) x ^= Bitstring{1} << q;
  }
  return x;
}

inline void check_angles(const AnsatzConfig &cfg, std::span<const double> angles) {
  cfg.validate();
  require_length(angles.size(), cfg.num_params(), "parameter vector");
  if (cfg.n > max_register_width) throw Error(ErrorKind::capacity, "registers are limited to 64 qubits");
}

} // namespace detail

/// Exact output probabilities of the ansatz at the given (already mapped)
/// angles. Index bit q is qubit q.
inline std::vector<double> statevector_probabilities(const AnsatzConfig &cfg, std::span<const double> angles) {
  detail::check_angles(cfg, angles);
  if (cfg.n > statevector_max_qubits)
    throw Error(ErrorKind::capacity, "statevector simulation is limited to 26 qubits");
  const std::size_t dim = std::size_t{1} << cfg.n;
  std::vector<double> amp(dim, 0.0);
  amp[0] = 1.0;
  for (std::size_t block = 0; block < cfg.rotation_layers(); ++block) {
    for (std::size_t q = 0; q < cfg.n; ++q) {
      const double theta = angles[block * cfg.n + q];
      const double c = std::cos(theta / 2), s = std::sin(theta / 2);
      const std::size_t bit = std::size_t{1} << q;
      for (std::size_t i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const double a0 = amp[i], a1 = amp[i | bit];
        amp[i] = c * a0 - s * a1;
        amp[i | bit] = s * a0 + c * a1;
      }
    }
    if (cfg.layers == 0) continue;
    for (const auto &layer : cfg.entanglers)
      for (auto [ctl, tgt] : layer) {
        const std::size_t cb = std::size_t{1} << ctl, tb = std::size_t{1} << tgt;
        for (std::size_t i = 0; i < dim; ++i)
          if ((i & cb) && !(i & tb)) std::swap(amp[i], amp[i | tb]);
      }
  }
  for (auto &a : amp) a *= a;
  return amp;
}

/// Exact output distribution of a single-rotation-layer circuit, enumerating
/// only the qubits with fractional excitation probability (at most 24).
inline ProbabilityMap product_distribution(const AnsatzConfig &cfg, std::span<const double> angles) {
  detail::check_angles(cfg, angles);
  if (!cfg.product_path_applicable())
    throw Error(ErrorKind::capacity, "product distribution needs a single rotation layer");
  Bitstring fixed = 0;
  std::vector<std::size_t> free_qubits;
  std::vector<double> p_one;
  for (std::size_t q = 0; q < cfg.n; ++q) {
    const double s = std::sin(angles[q] / 2), p = s * s;
    if (p <= 0) continue;
    if (p >= 1) {
      fixed |= Bitstring{1} << q;
      continue;
    }
    free_qubits.push_back(q);
    p_one.push_back(p);
  }
  if (free_qubits.size() > 24) throw Error(ErrorKind::capacity, "too many fractional qubits to enumerate");
  const std::vector<EntanglerLayer> none;
  const auto &network = cfg.layers == 0 ? none : cfg.entanglers;
  std::unordered_map<Bitstring, double> m;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << free_qubits.size()); ++w) {
    Bitstring x = fixed;
    double pr = 1;
    for (std::size_t k = 0; k < free_qubits.size(); ++k) {
      if ((w >> k) & 1U) {
        x |= Bitstring{1} << free_qubits[k];
        pr *= p_one[k];
      } else {
        pr *= 1 - p_one[k];
      }
    }
    m[detail::apply_entanglers(x, network)] += pr;
  }
  return ProbabilityMap::from_unordered(cfg.n, m);
}

/// Draw `shots` measurements at the given (already mapped) angles.
inline OutcomeDistribution sample_angles(const AnsatzConfig &cfg, std::span<const double> angles, std::int64_t shots,
                                         const std::optional<ReadoutNoise> &noise, std::uint64_t seed,
                                         SimulationPath path = SimulationPath::automatic) {
  detail::check_angles(cfg, angles);
  if (shots < 1) throw Error(ErrorKind::invalid_value, "shots must be positive");
  if (noise) noise->validate(cfg.n);
  if (path == SimulationPath::automatic)
    path = cfg.product_path_applicable() ? SimulationPath::product : SimulationPath::statevector;
  if (path == SimulationPath::product && !cfg.product_path_applicable())
    throw Error(ErrorKind::capacity, "product path needs a single rotation layer");

  Rng state_rng(derive_seed(seed, 1));
  Rng noise_rng(derive_seed(seed ^ (noise ? noise->seed : 0), 2));
  std::vector<Bitstring> samples(static_cast<std::size_t>(shots));

  if (path == SimulationPath::product) {
    std::vector<double> p_one(cfg.n);
    for (std::size_t q = 0; q < cfg.n; ++q) {
      const double s = std::sin(angles[q] / 2);
      p_one[q] = s * s;
    }
    const std::vector<EntanglerLayer> none;
    const auto &network = cfg.layers == 0 ? none : cfg.entanglers;
    for (auto &out : samples) {
      Bitstring x = 0;
      for (std::size_t q = 0; q < cfg.n; ++q) {
        const double p = p_one[q];
        if (p <= 0) continue;
        if (p >= 1 || state_rng.uniform() < p) x |= Bitstring{1} << q;
      }
      out = detail::apply_entanglers(x, network);
    }
  } else {
    const auto probs = statevector_probabilities(cfg, angles);
    std::vector<double> cdf(probs.size());
    double acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) cdf[i] = (acc += probs[i]);
    for (auto &out : samples) {
      const double u = state_rng.uniform() * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      out = static_cast<Bitstring>(it - cdf.begin());
    }
  }
  if (noise)
    for (auto &out : samples) out = detail::apply_readout(out, cfg.n, *noise, noise_rng);
  return OutcomeDistribution::from_samples(cfg.n, samples);
}

/// Sample the ansatz at optimizer parameters theta (mapped through G).
/// Out-of-range parameters are clamped to [0, pi].
inline OutcomeDistribution sample(const AnsatzConfig &cfg, std::span<const double> theta, const MappingConfig &mapping,
                                  std::int64_t shots, const std::optional<ReadoutNoise> &noise, std::uint64_t seed) {
  return sample_angles(cfg, map_params(theta, mapping), shots, noise, seed);
}

/// Same circuit with every parameter at zero: ideally only the all-zeros string.
inline OutcomeDistribution calibration_sample(const AnsatzConfig &cfg, std::int64_t shots,
                                              const std::optional<ReadoutNoise> &noise, std::uint64_t seed) {
  const std::vector<double> zeros(cfg.num_params(), 0.0);
  return sample_angles(cfg, zeros, shots, noise, seed);
}

} // namespace ntsp
