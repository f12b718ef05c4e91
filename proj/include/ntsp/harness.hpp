/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Solver drivers, run configuration and run records.
//
//   qtsa    entangled ansatz, simulated readout noise, optional iHAMMER
//   qinsp   single unentangled rotation layer
//   sampler uniform random search without replacement
//   exact   branch-and-bound reference
//
// A RunRecord depends only on the instance, the configuration and the seed;
// its JSON serialisation is byte-for-byte reproducible.

#include "ntsp/bayesopt.hpp"
#include "ntsp/circuit.hpp"
#include "ntsp/exact.hpp"
#include "ntsp/instance_io.hpp"
#include "ntsp/mitigation.hpp"
#include "ntsp/penalty.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace ntsp {

enum class SolverKind { qtsa, qinsp, sampler, exact };

inline std::string to_string(SolverKind s) {
  switch (s) {
  case SolverKind::qtsa: return "qtsa";
  case SolverKind::qinsp: return "qinsp";
  case SolverKind::sampler: return "sampler";
  case SolverKind::exact: return "exact";
  }
  return "?";
}

inline SolverKind parse_solver_kind(const std::string &s) {
  if (s == "qtsa") return SolverKind::qtsa;
  if (s == "qinsp") return SolverKind::qinsp;
  if (s == "sampler") return SolverKind::sampler;
  if (s == "exact") return SolverKind::exact;
  throw Error(ErrorKind::invalid_value, "unknown solver '" + s + "'");
}

/// Evaluation counts for uniform random search on 20..40 transactions.
inline std::optional<std::uint64_t> tabulated_sampler_budget(std::size_t n) {
  switch (n) {
  case 20: return 282000;
  case 25: return 453000;
  case 30: return 676500;
  case 35: return 925500;
  case 40: return 1080000;
  default: return std::nullopt;
  }
}

struct NoiseConfig {
  std::string preset; // "eagle-like", "heron-like" or empty for explicit rates
  std::vector<double> flip01, flip10; // one entry broadcasts to all qubits
  std::uint64_t seed = 0;

  ReadoutNoise resolve(std::size_t n) const {
    if (!preset.empty()) {
      auto r = ReadoutNoise::preset(preset, n, seed);
      if (!r) throw Error(ErrorKind::invalid_value, "unknown noise preset '" + preset + "'");
      return *r;
    }
    auto widen = [n](const std::vector<double> &v, const char *what) {
      if (v.size() == 1) return std::vector<double>(n, v[0]);
      if (v.size() != n) throw Error(ErrorKind::length_mismatch, std::string(what) + " needs 1 or n entries");
      return v;
    };
    ReadoutNoise r{widen(flip01, "flip01"), widen(flip10, "flip10"), seed};
    r.validate(n);
    return r;
  }

  std::string label() const {
    if (!preset.empty()) return preset;
    std::ostringstream s;
    s << "flip01=" << (flip01.empty() ? 0.0 : flip01[0]) << ",flip10=" << (flip10.empty() ? 0.0 : flip10[0]);
    return s.str();
  }
};

struct RunConfig {
  SolverKind solver = SolverKind::qinsp;
  std::size_t iterations = 300;
  std::int64_t shots = 10000;
  double lambda = 0.5;
  std::optional<double> sigma; // derived from (n, shots, delta) when absent
  std::uint64_t delta = 128;
  std::size_t layers = 1; // qtsa ansatz repetitions
  AcquisitionConfig acquisition{AcquisitionKind::ucb, 2.576, 0.0};
  std::size_t bo_initial_points = 5;
  std::size_t bo_refit_every = 10;
  std::size_t bo_random_starts = 64;
  KernelKind bo_kernel = KernelKind::squared_exponential;
  OutputWarp bo_warp = OutputWarp::symlog;
  std::optional<NoiseConfig> noise;
  bool mitigation = false;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> sampler_budget; // absent: tabulated value for n
  std::optional<std::vector<double>> initial_theta; // first evaluated point
  std::optional<std::uint64_t> exact_budget;
  ActivationParams cash_penalty = PenaltyConfig{}.cash;
  ActivationParams security_penalty = PenaltyConfig{}.security;
  ActivationParams after_link_penalty = PenaltyConfig{}.after_link;

  PenaltyConfig penalty() const { return PenaltyConfig{lambda, cash_penalty, security_penalty, after_link_penalty}; }

  void validate() const {
    if (iterations < 1) throw Error(ErrorKind::invalid_value, "iterations must be >= 1");
    if (shots < 1) throw Error(ErrorKind::invalid_value, "shots must be >= 1");
    if (sigma && !(*sigma > 0)) throw Error(ErrorKind::invalid_value, "sigma must be positive");
    if (delta < 1) throw Error(ErrorKind::invalid_value, "delta must be >= 1");
    if (sampler_budget && *sampler_budget < 1) throw Error(ErrorKind::invalid_value, "sampler_budget must be >= 1");
    acquisition.validate();
    penalty().validate();
  }
};

namespace detail {

inline ActivationParams parse_activation(const nlohmann::json &j, const std::string &where, ActivationParams p) {
  ObjectReader r(j, where);
  r.allow_only({"beta", "slope", "threshold"});
  if (r.has("beta")) p.beta = r.number("beta");
  if (r.has("slope")) p.slope = r.number("slope");
  if (r.has("threshold")) p.threshold = r.number("threshold");
  return p;
}

inline std::uint64_t unsigned_field(const ObjectReader &r, const char *key) {
  const auto &v = r.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    r.fail(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> number_or_array(const ObjectReader &r, const char *key) {
  const auto &v = r.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) r.fail(std::string("field '") + key + "' must be a number or an array");
  std::vector<double> out;
  for (const auto &e : v) {
    if (!e.is_number()) r.fail(std::string("field '") + key + "' must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json &j) {
  detail::ObjectReader r(j, "run config");
  r.allow_only({"solver", "iterations", "shots", "lambda", "sigma", "delta", "layers", "acquisition", "bo", "noise",
                "mitigation", "seed", "sampler_budget", "initial_theta", "exact_budget", "penalty"});
  RunConfig c;
  if (r.has("solver")) c.solver = parse_solver_kind(r.str("solver"));
  if (r.has("iterations")) c.iterations = static_cast<std::size_t>(detail::unsigned_field(r, "iterations"));
  if (r.has("shots")) c.shots = static_cast<std::int64_t>(detail::unsigned_field(r, "shots"));
  if (r.has("lambda")) c.lambda = r.number("lambda");
  if (r.has("sigma")) c.sigma = r.number("sigma");
  if (r.has("delta")) c.delta = detail::unsigned_field(r, "delta");
  if (r.has("layers")) c.layers = static_cast<std::size_t>(detail::unsigned_field(r, "layers"));
  if (r.has("acquisition")) {
    detail::ObjectReader a(r.at("acquisition"), "run config acquisition");
    a.allow_only({"kind", "kappa", "xi"});
    if (a.has("kind")) c.acquisition.kind = parse_acquisition_kind(a.str("kind"));
    if (a.has("kappa")) c.acquisition.kappa = a.number("kappa");
    if (a.has("xi")) c.acquisition.xi = a.number("xi");
  }
  if (r.has("bo")) {
    detail::ObjectReader b(r.at("bo"), "run config bo");
    b.allow_only({"initial_points", "refit_every", "random_starts", "kernel", "warp"});
    if (b.has("initial_points")) c.bo_initial_points = static_cast<std::size_t>(detail::unsigned_field(b, "initial_points"));
    if (b.has("refit_every")) c.bo_refit_every = static_cast<std::size_t>(detail::unsigned_field(b, "refit_every"));
    if (b.has("random_starts")) c.bo_random_starts = static_cast<std::size_t>(detail::unsigned_field(b, "random_starts"));
    if (b.has("kernel")) {
      const auto k = b.str("kernel");
      if (k == "squared_exponential") c.bo_kernel = KernelKind::squared_exponential;
      else if (k == "matern52") c.bo_kernel = KernelKind::matern52;
      else b.fail("kernel must be squared_exponential or matern52");
    }
    if (b.has("warp")) {
      const auto w = b.str("warp");
      if (w == "symlog") c.bo_warp = OutputWarp::symlog;
      else if (w == "none") c.bo_warp = OutputWarp::none;
      else b.fail("warp must be symlog or none");
    }
  }
  if (r.has("noise")) {
    detail::ObjectReader nr(r.at("noise"), "run config noise");
    nr.allow_only({"preset", "flip01", "flip10", "seed"});
    NoiseConfig nc;
    if (nr.has("preset")) {
      nc.preset = nr.str("preset");
    } else {
      nc.flip01 = detail::number_or_array(nr, "flip01");
      nc.flip10 = detail::number_or_array(nr, "flip10");
    }
    if (nr.has("seed")) nc.seed = detail::unsigned_field(nr, "seed");
    c.noise = nc;
  }
  c.mitigation = r.boolean("mitigation", false);
  if (r.has("seed")) c.seed = detail::unsigned_field(r, "seed");
  if (r.has("sampler_budget")) {
    const auto &v = r.at("sampler_budget");
    if (!(v.is_string() && v.get<std::string>() == "auto")) c.sampler_budget = detail::unsigned_field(r, "sampler_budget");
  }
  if (r.has("initial_theta")) c.initial_theta = detail::number_or_array(r, "initial_theta");
  if (r.has("exact_budget")) c.exact_budget = detail::unsigned_field(r, "exact_budget");
  if (r.has("penalty")) {
    detail::ObjectReader p(r.at("penalty"), "run config penalty");
    p.allow_only({"cash", "security", "after_link"});
    if (p.has("cash")) c.cash_penalty = detail::parse_activation(p.at("cash"), "penalty cash", c.cash_penalty);
    if (p.has("security"))
      c.security_penalty = detail::parse_activation(p.at("security"), "penalty security", c.security_penalty);
    if (p.has("after_link"))
      c.after_link_penalty = detail::parse_activation(p.at("after_link"), "penalty after_link", c.after_link_penalty);
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open run config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::schema, "run config '" + path + "': " + e.what());
  }
  return parse_run_config(j);
}

struct RunRecord {
  std::string solver;
  std::string instance;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t iterations = 0;
  std::int64_t shots = 0;
  std::optional<double> sigma;
  std::string ansatz;
  std::string noise;
  bool mitigation = false;
  std::vector<std::string> warnings;

  // per iteration
  std::vector<double> expected_cost;
  std::vector<double> best_payoff;
  std::vector<double> valid_mass;
  std::vector<double> gamma;
  std::vector<std::size_t> mitigation_iterations;

  // final
  bool found_valid = false;
  std::string best_x;
  std::vector<Units> best_y;
  double payoff = 0;
  double best_cost = 0;
  std::optional<double> reference_payoff;
  bool reference_lower_bound = false;
  std::optional<double> rho;
  std::size_t distinct_explored = 0;
  std::optional<std::size_t> first_valid_iteration; // 1-based
  std::optional<std::uint64_t> sampler_budget;
  std::string budget_source;
};

inline nlohmann::ordered_json to_json(const RunRecord &r) {
  nlohmann::ordered_json j;
  auto opt = [](const auto &v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  j["solver"] = r.solver;
  j["instance"] = r.instance;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["iterations"] = r.iterations;
  j["shots"] = r.shots;
  j["sigma"] = opt(r.sigma);
  j["ansatz"] = r.ansatz;
  j["noise"] = r.noise;
  j["mitigation"] = r.mitigation;
  j["warnings"] = r.warnings;
  j["traces"] = {{"expected_cost", r.expected_cost},
                 {"best_payoff", r.best_payoff},
                 {"valid_mass", r.valid_mass},
                 {"gamma", r.gamma},
                 {"mitigation_iterations", r.mitigation_iterations}};
  j["found_valid"] = r.found_valid;
  j["best_x"] = r.best_x;
  j["best_y"] = r.best_y;
  j["payoff"] = r.payoff;
  j["best_cost"] = r.best_cost;
  j["reference_payoff"] = opt(r.reference_payoff);
  j["reference_lower_bound"] = r.reference_lower_bound;
  j["rho"] = opt(r.rho);
  j["distinct_explored"] = r.distinct_explored;
  j["first_valid_iteration"] = opt(r.first_valid_iteration);
  j["sampler_budget"] = opt(r.sampler_budget);
  j["budget_source"] = r.budget_source;
  return j;
}

inline std::string serialize_record(const RunRecord &r) { return to_json(r).dump(2) + "\n"; }

inline RunRecord parse_record(const nlohmann::json &j) {
  RunRecord r;
  try {
    r.solver = j.at("solver").get<std::string>();
    r.instance = j.at("instance").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n = j.at("n").get<std::size_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.shots = j.at("shots").get<std::int64_t>();
    if (!j.at("sigma").is_null()) r.sigma = j.at("sigma").get<double>();
    r.ansatz = j.at("ansatz").get<std::string>();
    r.noise = j.at("noise").get<std::string>();
    r.mitigation = j.at("mitigation").get<bool>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    const auto &t = j.at("traces");
    r.expected_cost = t.at("expected_cost").get<std::vector<double>>();
    r.best_payoff = t.at("best_payoff").get<std::vector<double>>();
    r.valid_mass = t.at("valid_mass").get<std::vector<double>>();
    r.gamma = t.at("gamma").get<std::vector<double>>();
    r.mitigation_iterations = t.at("mitigation_iterations").get<std::vector<std::size_t>>();
    r.found_valid = j.at("found_valid").get<bool>();
    r.best_x = j.at("best_x").get<std::string>();
    r.best_y = j.at("best_y").get<std::vector<Units>>();
    r.payoff = j.at("payoff").get<double>();
    r.best_cost = j.at("best_cost").get<double>();
    if (!j.at("reference_payoff").is_null()) r.reference_payoff = j.at("reference_payoff").get<double>();
    r.reference_lower_bound = j.at("reference_lower_bound").get<bool>();
    if (!j.at("rho").is_null()) r.rho = j.at("rho").get<double>();
    r.distinct_explored = j.at("distinct_explored").get<std::size_t>();
    if (!j.at("first_valid_iteration").is_null())
      r.first_valid_iteration = j.at("first_valid_iteration").get<std::size_t>();
    if (!j.at("sampler_budget").is_null()) r.sampler_budget = j.at("sampler_budget").get<std::uint64_t>();
    r.budget_source = j.at("budget_source").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::schema, std::string("run record: ") + e.what());
  }
  return r;
}

/// Exact optimum used for payoff ratios; computed once per instance and shared.
struct Reference {
  double payoff = 0;
  bool lower_bound = false;
};

inline Reference reference_for(const Instance &inst, double lambda, std::optional<std::uint64_t> budget = {}) {
  if (!budget && inst.num_transactions() > exact_unbudgeted_limit) budget = 50'000'000;
  const auto sol = solve_exact(inst, lambda, budget);
  return Reference{sol.payoff_star, sol.lower_bound};
}

namespace detail {

inline RunRecord record_header(const Instance &inst, const RunConfig &cfg, const std::string &label) {
  RunRecord r;
  r.solver = to_string(cfg.solver);
  r.instance = label;
  r.seed = cfg.seed;
  r.n = inst.num_transactions();
  r.mitigation = cfg.mitigation;
  r.noise = cfg.noise ? cfg.noise->label() : "none";
  r.best_x = bitstring_text(0, r.n);
  r.best_y.assign(inst.num_spls(), 0);
  return r;
}

inline void finish_with_reference(RunRecord &r, const Instance &inst, const RunConfig &cfg,
                                  const std::optional<Reference> &ref) {
  const auto use = ref ? *ref : reference_for(inst, cfg.lambda, cfg.exact_budget);
  r.reference_payoff = use.payoff;
  r.reference_lower_bound = use.lower_bound;
  if (use.payoff > 0) r.rho = payoff_ratio(r.found_valid ? r.payoff : 0.0, use.payoff);
}

/// Best valid candidate: higher payoff wins, ties go to the smaller string.
struct BestTracker {
  bool found = false;
  Bitstring x = 0;
  double payoff = 0, cost = 0;
  CollateralVector lots;

  void offer(Bitstring cand, const ScoredSettlement &s) {
    if (!s.valid()) return;
    if (!found || s.payoff > payoff + payoff_tie_tolerance ||
        (s.payoff >= payoff - payoff_tie_tolerance && cand < x)) {
      found = true;
      x = cand;
      payoff = s.payoff;
      cost = s.cost;
      lots = s.lots;
    }
  }
};

} // namespace detail

/// Variational loop: suggest parameters, map, sample evaluation (and
/// calibration) circuits, optionally mitigate, score the distribution and
/// feed the expected cost back to the optimiser.
inline RunRecord run_variational(const Instance &inst, const RunConfig &cfg, const std::string &label = "instance",
                                 const std::optional<Reference> &ref = std::nullopt) {
  cfg.validate();
  if (cfg.solver != SolverKind::qtsa && cfg.solver != SolverKind::qinsp)
    throw Error(ErrorKind::invalid_value, "run_variational needs solver qtsa or qinsp");
  const auto n = inst.num_transactions();
  if (n > max_register_width) throw Error(ErrorKind::capacity, "at most 64 transactions per run");
  const auto ansatz =
      cfg.solver == SolverKind::qinsp ? AnsatzConfig::unentangled(n) : AnsatzConfig::hardware_efficient(n, cfg.layers);
  if (!ansatz.product_path_applicable() && n > statevector_max_qubits)
    throw Error(ErrorKind::capacity, "multi-layer ansatz beyond 26 qubits exceeds simulator capacity");
  const double sigma = cfg.sigma ? *cfg.sigma : solve_sigma(n, static_cast<std::uint64_t>(cfg.shots), cfg.delta);
  const MappingConfig mapping{sigma};
  std::optional<ReadoutNoise> noise;
  if (cfg.noise) noise = cfg.noise->resolve(n);

  RunRecord r = detail::record_header(inst, cfg, label);
  r.iterations = cfg.iterations;
  r.shots = cfg.shots;
  r.sigma = sigma;
  r.ansatz = cfg.solver == SolverKind::qinsp ? "ry" : "ry+cnot:" + std::to_string(cfg.layers);
  if (cfg.mitigation && !noise) r.warnings.push_back("mitigation enabled without readout noise");

  BayesOptConfig bo;
  bo.acquisition = cfg.acquisition;
  bo.initial_points = cfg.bo_initial_points;
  bo.refit_every = cfg.bo_refit_every;
  bo.random_starts = cfg.bo_random_starts;
  bo.kernel = cfg.bo_kernel;
  bo.warp = cfg.bo_warp;
  bo.seed = derive_seed(cfg.seed, 0xB0);
  BayesianOptimizer opt(Bounds::uniform(ansatz.num_params(), 0.0, pi), bo);
  if (cfg.initial_theta) require_length(cfg.initial_theta->size(), ansatz.num_params(), "initial_theta");

  CostCache cache(inst, cfg.penalty());
  detail::BestTracker best;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::vector<double> theta = (it == 0 && cfg.initial_theta) ? *cfg.initial_theta : opt.next();
    for (auto &v : theta) v = std::clamp(v, 0.0, pi);
    const auto angles = map_params(theta, mapping);
    const auto it_seed = derive_seed(cfg.seed, 1000 + it);
    const auto dist = sample_angles(ansatz, angles, cfg.shots, noise, derive_seed(it_seed, 1));
    ProbabilityMap probs;
    if (cfg.mitigation) {
      const auto cal = calibration_sample(ansatz, cfg.shots, noise, derive_seed(it_seed, 2));
      const double g = calibration_gamma(cal);
      auto rep = ihammer(dist, g);
      r.gamma.push_back(g);
      r.mitigation_iterations.push_back(rep.iterations);
      probs = std::move(rep.corrected);
    } else {
      probs = dist.probabilities();
    }
    double cost = 0, valid = 0;
    for (const auto &[x, p] : probs.entries) {
      const auto &s = cache.get(x);
      cost += p * s.cost;
      if (s.valid()) valid += p;
      best.offer(x, s);
    }
    if (best.found && !r.first_valid_iteration) r.first_valid_iteration = it + 1;
    r.expected_cost.push_back(cost);
    r.best_payoff.push_back(best.found ? best.payoff : 0.0);
    r.valid_mass.push_back(std::clamp(valid, 0.0, 1.0));
    opt.observe(theta, cost);
  }
  r.found_valid = best.found;
  if (best.found) {
    r.best_x = bitstring_text(best.x, n);
    r.best_y = best.lots.lots;
    r.payoff = best.payoff;
    r.best_cost = best.cost;
  }
  r.distinct_explored = cache.size();
  detail::finish_with_reference(r, inst, cfg, ref);
  return r;
}

/// Uniform random search over distinct settlements; exhaustive when the
/// budget covers the whole space.
inline RunRecord run_sampler(const Instance &inst, const RunConfig &cfg, const std::string &label = "instance",
                             const std::optional<Reference> &ref = std::nullopt) {
  cfg.validate();
  const auto n = inst.num_transactions();
  if (n > 63) throw Error(ErrorKind::capacity, "sampler supports at most 63 transactions");
  RunRecord r = detail::record_header(inst, cfg, label);
  r.solver = to_string(SolverKind::sampler);
  r.ansatz = "none";
  r.noise = "none";
  r.mitigation = false;
  std::uint64_t budget = 0;
  if (cfg.sampler_budget) {
    budget = *cfg.sampler_budget;
    r.budget_source = "explicit";
  } else if (auto t = tabulated_sampler_budget(n)) {
    budget = *t;
    r.budget_source = "tabulated:n=" + std::to_string(n);
  } else {
    throw Error(ErrorKind::invalid_value,
                "no tabulated sampler budget for n = " + std::to_string(n) + "; set sampler_budget");
  }
  const std::uint64_t space = std::uint64_t{1} << n;
  if (budget >= space) {
    budget = space;
    r.budget_source += ",exhaustive";
  }
  r.sampler_budget = budget;
  const auto penalty = cfg.penalty();
  detail::BestTracker best;
  std::uint64_t evaluated = 0;
  auto score = [&](Bitstring x) {
    ++evaluated;
    const auto s = score_settlement(inst, to_settlement(x, n), penalty);
    best.offer(x, s);
    if (best.found && !r.first_valid_iteration) r.first_valid_iteration = static_cast<std::size_t>(evaluated);
  };
  if (budget == space) {
    for (Bitstring x = 0; x < space; ++x) score(x);
  } else {
    Rng rng(derive_seed(cfg.seed, 0x5A));
    std::unordered_set<Bitstring> seen;
    seen.reserve(static_cast<std::size_t>(budget) * 2);
    while (seen.size() < budget) {
      const Bitstring x = rng.next() & (space - 1);
      if (seen.insert(x).second) score(x);
    }
  }
  r.found_valid = best.found;
  if (best.found) {
    r.best_x = bitstring_text(best.x, n);
    r.best_y = best.lots.lots;
    r.payoff = best.payoff;
    r.best_cost = best.cost;
  }
  r.distinct_explored = static_cast<std::size_t>(evaluated);
  detail::finish_with_reference(r, inst, cfg, ref);
  return r;
}

inline RunRecord run_exact(const Instance &inst, const RunConfig &cfg, const std::string &label = "instance") {
  cfg.validate();
  RunRecord r = detail::record_header(inst, cfg, label);
  r.solver = to_string(SolverKind::exact);
  r.ansatz = "none";
  r.noise = "none";
  r.mitigation = false;
  auto budget = cfg.exact_budget;
  if (!budget && inst.num_transactions() > exact_unbudgeted_limit) budget = 50'000'000;
  const auto sol = solve_exact(inst, cfg.lambda, budget);
  r.found_valid = true;
  r.best_x = sol.x_star.to_string();
  r.best_y = sol.y_star.lots;
  r.payoff = sol.payoff_star;
  r.best_cost = sol.payoff_star;
  r.distinct_explored = static_cast<std::size_t>(sol.explored);
  r.reference_payoff = sol.payoff_star;
  r.reference_lower_bound = sol.lower_bound;
  if (sol.payoff_star > 0) r.rho = 1.0;
  return r;
}

inline RunRecord run(const Instance &inst, const RunConfig &cfg, const std::string &label = "instance",
                     const std::optional<Reference> &ref = std::nullopt) {
  switch (cfg.solver) {
  case SolverKind::qtsa:
  case SolverKind::qinsp: return run_variational(inst, cfg, label, ref);
  case SolverKind::sampler: return run_sampler(inst, cfg, label, ref);
  case SolverKind::exact: return run_exact(inst, cfg, label);
  }
  throw Error(ErrorKind::invalid_value, "unknown solver");
}

/// Long-format CSV. Columns:
///   row_type,solver,instance,seed,iteration,expected_cost,best_payoff,valid_mass,
///   rho,first_valid_iteration,distinct_explored,count,mean_rho,std_rho
/// row_type "run": one per record; "trace": one per record and iteration;
/// "summary": one per (solver, instance) with the sample standard deviation
/// of rho (0 for a single run). Records without a defined rho count as 0.
inline std::string report_csv(const std::vector<RunRecord> &records) {
  if (records.empty()) throw Error(ErrorKind::invalid_value, "report needs at least one record");
  std::ostringstream out;
  out.precision(17);
  out << "row_type,solver,instance,seed,iteration,expected_cost,best_payoff,valid_mass,rho,first_valid_iteration,"
         "distinct_explored,count,mean_rho,std_rho\n";
  auto opt_num = [](const auto &v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v;
    return s.str();
  };
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto &r : records) {
    out << "run," << r.solver << ',' << r.instance << ',' << r.seed << ",,,,," << opt_num(r.rho) << ','
        << opt_num(r.first_valid_iteration) << ',' << r.distinct_explored << ",,,\n";
    groups[{r.solver, r.instance}].push_back(r.rho.value_or(0.0));
  }
  for (const auto &r : records)
    for (std::size_t i = 0; i < r.expected_cost.size(); ++i)
      out << "trace," << r.solver << ',' << r.instance << ',' << r.seed << ',' << i + 1 << ',' << r.expected_cost[i]
          << ',' << r.best_payoff[i] << ',' << r.valid_mass[i] << ",,,,,,\n";
  for (const auto &[key, rhos] : groups) {
    double mean = 0;
    for (double v : rhos) mean += v;
    mean /= static_cast<double>(rhos.size());
    double var = 0;
    for (double v : rhos) var += (v - mean) * (v - mean);
    const double sd = rhos.size() > 1 ? std::sqrt(var / static_cast<double>(rhos.size() - 1)) : 0.0;
    out << "summary," << key.first << ',' << key.second << ",,,,,,,,," << rhos.size() << ',' << mean << ',' << sd
        << '\n';
  }
  return out.str();
}

/// All *.json run records in a directory, in file-name order.
inline std::vector<RunRecord> load_records(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto &f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::schema, f.string() + ": " + e.what());
    }
    out.push_back(parse_record(j));
  }
  return out;
}

struct SparseBenchConfig {
  std::size_t n = 12;
  std::size_t peaks_log2 = 8; // qubits rotated away from |0>
  double peak_angle = pi / 3;
  bool entangled = true;
  std::int64_t shots = 10000;
  double flip_min = 0.01, flip_max = 0.02; // per-qubit rates drawn uniformly
  std::string preset;                       // overrides the uniform draw
  std::uint64_t seed = 0;
  HammerConfig hammer;
};

struct SparseBenchResult {
  std::size_t n = 0;
  std::size_t trial = 0;
  double raw_fidelity = 0;
  double mitigated_fidelity = 0;
  double gamma = 0;
  std::size_t iterations = 0;
};

/// One known sparse state: peaks_log2 random qubits at peak_angle, the rest at
/// zero, measured through seeded readout noise and reconstructed by iHAMMER.
inline SparseBenchResult sparse_state_trial(const SparseBenchConfig &cfg, std::size_t trial) {
  if (cfg.peaks_log2 > cfg.n) throw Error(ErrorKind::invalid_value, "more peak qubits than qubits");
  Rng rng(derive_seed(cfg.seed, cfg.n * 100000 + trial));
  const auto ansatz = cfg.entangled ? AnsatzConfig::hardware_efficient(cfg.n, 1) : AnsatzConfig::unentangled(cfg.n);
  std::vector<std::size_t> qubits(cfg.n);
  for (std::size_t q = 0; q < cfg.n; ++q) qubits[q] = q;
  for (std::size_t i = 0; i < cfg.peaks_log2; ++i)
    std::swap(qubits[i], qubits[i + static_cast<std::size_t>(rng.below(cfg.n - i))]);
  std::vector<double> angles(cfg.n, 0.0);
  for (std::size_t i = 0; i < cfg.peaks_log2; ++i) angles[qubits[i]] = cfg.peak_angle;
  ReadoutNoise noise;
  if (!cfg.preset.empty()) {
    auto r = ReadoutNoise::preset(cfg.preset, cfg.n, rng.next());
    if (!r) throw Error(ErrorKind::invalid_value, "unknown noise preset '" + cfg.preset + "'");
    noise = *r;
  } else {
    for (std::size_t q = 0; q < cfg.n; ++q) {
      noise.flip01.push_back(rng.uniform(cfg.flip_min, cfg.flip_max));
      noise.flip10.push_back(rng.uniform(cfg.flip_min, cfg.flip_max));
    }
    noise.seed = rng.next();
  }
  const auto truth = product_distribution(ansatz, angles);
  const auto sample_seed = rng.next();
  const auto raw = sample_angles(ansatz, angles, cfg.shots, noise, sample_seed);
  const auto cal = calibration_sample(ansatz, cfg.shots, noise, derive_seed(sample_seed, 7));
  SparseBenchResult res;
  res.n = cfg.n;
  res.trial = trial;
  res.gamma = calibration_gamma(cal);
  const auto rep = ihammer(raw, res.gamma, cfg.hammer);
  res.iterations = rep.iterations;
  res.raw_fidelity = fidelity(raw.probabilities(), truth);
  res.mitigated_fidelity = fidelity(rep.corrected, truth);
  return res;
}

} // namespace ntsp
