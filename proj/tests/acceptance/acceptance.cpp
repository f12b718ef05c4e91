/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. Pass one or more criterion numbers
// to run a subset.

#include "../common/stats.hpp"
#include "ntsp/ntsp.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace ntsp;

namespace {

std::string data_path(const std::string &name) { return std::string(NTSP_DATA_DIR) + "/" + name; }
std::string profile_path(const std::string &name) { return std::string(NTSP_PROFILES_DIR) + "/" + name; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Unpruned enumeration, ties to the lexicographically smallest X.
std::pair<Settlement, double> naive_optimum(const Instance &inst, double lambda) {
  const auto n = inst.num_transactions();
  Settlement best_x(n);
  double best = 0;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) {
    const auto x = Settlement::from_word(w, n);
    if (!check_feasibility(inst, x, compute_collateral(inst, x).lots).feasible) continue;
    const double p = payoff(inst, x, lambda);
    if (p > best + 1e-12 || (std::abs(p - best) <= 1e-12 && x < best_x)) best_x = x, best = p;
  }
  return {best_x, best};
}

GeneratorSpec varied_spec(Rng &rng, std::size_t n, std::uint64_t seed) {
  GeneratorSpec s;
  s.n = n;
  s.securities = 1 + static_cast<std::size_t>(rng.below(3));
  s.parties = 3 + static_cast<std::size_t>(rng.below(4));
  s.after_links = std::min<std::size_t>(n * (n - 1) / 2, static_cast<std::size_t>(rng.below(n / 2 + 1)));
  s.collateral_fraction = rng.uniform(0.2, 0.8);
  s.tightness = rng.uniform(0.4, 0.99);
  s.cushion = rng.uniform(0.0, 0.5);
  s.seed = seed;
  return s;
}

double sustained_run(const std::vector<double> &mass, double level) {
  std::size_t run = 0, best = 0;
  for (double v : mass) {
    run = v >= level ? run + 1 : 0;
    best = std::max(best, run);
  }
  return static_cast<double>(best);
}

Outcome criterion1() {
  const std::pair<std::size_t, double> table[] = {
      {20, 0.35587}, {25, 0.26877}, {30, 0.21609}, {35, 0.18074}, {40, 0.15536}};
  double worst = 0;
  for (auto [n, sigma] : table) worst = std::max(worst, std::abs(solve_sigma(n, 10000, 128) - sigma));
  worst = std::max(worst, std::abs(solve_sigma(20, 2000, 16) - 0.14361));
  return {worst <= 1e-4, fmt("max |sigma - tabulated| = %.2e (tol 1e-4)", worst)};
}

Outcome criterion2() {
  Rng rng(2024);
  std::size_t mismatches = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const std::size_t n = 6 + k % 9;
    const auto inst = generate_instance(varied_spec(rng, n, 10'000 + k));
    const auto sol = solve_exact(inst, 0.5);
    const auto [x, p] = naive_optimum(inst, 0.5);
    if (sol.payoff_star != p || !(sol.x_star == x)) ++mismatches;
  }
  return {mismatches == 0, fmt("100 instances, n in [6, 14], %zu mismatches", mismatches)};
}

Outcome criterion3() {
  Rng rng(77);
  const PenaltyConfig cfg;
  std::size_t pairs = 0, counterexamples = 0, valid = 0, null_settlements = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const std::size_t n = 6 + static_cast<std::size_t>(rng.below(15));
    const auto inst = generate_instance(varied_spec(rng, n, 50'000 + k));
    const double density = rng.uniform(0.2, 0.95);
    const auto optimum = solve_exact(inst, cfg.lambda).x_star;
    for (int j = 0; j < 100; ++j, ++pairs) {
      // Half uniform draws, half one- or two-bit perturbations of the optimum near the feasibility boundary.
      std::vector<std::uint8_t> bits(n);
      if (j % 2 == 0) {
        for (auto &b : bits) b = rng.bernoulli(density);
      } else {
        for (std::size_t i = 0; i < n; ++i) bits[i] = optimum[i];
        for (int f = 0; f <= j % 4 / 3; ++f) bits[rng.below(n)] ^= 1;
      }
      const Settlement x(bits);
      const auto s = score_settlement(inst, x, cfg);
      const bool feasible = check_feasibility(inst, x, s.lots).feasible;
      if (x.count() == 0) {
        // Trivially feasible with zero payoff; the strict criterion C > 0 cannot hold.
        ++null_settlements;
        if (!feasible || s.cost != 0) ++counterexamples;
        continue;
      }
      valid += s.valid();
      if (s.valid() != feasible) ++counterexamples;
    }
  }
  return {counterexamples == 0 && pairs == 100000,
          fmt("%zu pairs, %zu valid, %zu empty settlements, %zu counterexamples", pairs, valid, null_settlements,
              counterexamples)};
}

Outcome criterion4() {
  const auto inst = load_instance(data_path("fig3.json"));
  const auto sol = solve_exact(inst, 0.5);
  const auto col = compute_collateral(inst, sol.x_star);
  Cents credit = 0;
  for (Cents c : col.credit_granted) credit += c;
  const bool ok = sol.x_star.to_string() == "1101" && sol.y_star.lots == std::vector<Units>{600} && credit == 54000 &&
                  check_feasibility(inst, sol.x_star, sol.y_star).feasible;
  return {ok, fmt("X = %s, pledged %lld units, credit %lld cents", sol.x_star.to_string().c_str(),
                  static_cast<long long>(sol.y_star.lots.empty() ? -1 : sol.y_star.lots[0]),
                  static_cast<long long>(credit))};
}

Outcome criterion5() {
  Rng rng(5);
  const auto cfg4 = AnsatzConfig::hardware_efficient(4, 1);
  std::vector<double> angles(4);
  for (auto &a : angles) a = rng.uniform(0, pi);
  const auto exact = statevector_probabilities(cfg4, angles);
  double tv = 0;
  for (auto path : {SimulationPath::product, SimulationPath::statevector})
    tv = std::max(tv, stats::tv_distance(sample_angles(cfg4, angles, 100000, std::nullopt, 1, path), exact));
  double min_p = 1;
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto cfg = AnsatzConfig::hardware_efficient(n, 1);
    std::vector<double> a(n);
    for (auto &v : a) v = rng.uniform(0, pi);
    const auto fast = sample_angles(cfg, a, 20000, std::nullopt, 10 + n, SimulationPath::product);
    const auto sv = sample_angles(cfg, a, 20000, std::nullopt, 20 + n, SimulationPath::statevector);
    min_p = std::min(min_p, stats::two_sample_p_value(fast, sv));
  }
  return {tv < 0.02 && min_p > 0.01, fmt("TV (n=4) = %.4f (< 0.02), min two-sample p (n=2..10) = %.3f (> 0.01)", tv, min_p)};
}

Outcome criterion6() {
  bool ok = true;
  std::string detail;
  std::vector<double> all_raw, all_mit;
  for (std::size_t n : {12, 16}) {
    SparseBenchConfig cfg;
    cfg.n = n;
    cfg.peaks_log2 = 8;
    cfg.flip_min = 0.01;
    cfg.flip_max = 0.02;
    std::vector<double> raw, mit;
    for (std::size_t t = 0; t < 20; ++t) {
      const auto r = sparse_state_trial(cfg, t);
      raw.push_back(r.raw_fidelity);
      mit.push_back(r.mitigated_fidelity);
    }
    const auto test = stats::paired_one_sided(raw, mit);
    ok = ok && test.p_value < 0.05 && test.mean_difference >= 0.02;
    detail += fmt("n=%zu gain %.4f p %.2e; ", n, test.mean_difference, test.p_value);
    all_raw.insert(all_raw.end(), raw.begin(), raw.end());
    all_mit.insert(all_mit.end(), mit.begin(), mit.end());
  }
  const auto pooled = stats::paired_one_sided(all_raw, all_mit);
  ok = ok && pooled.p_value < 0.05;
  detail += fmt("pooled p %.2e", pooled.p_value);
  return {ok, detail};
}

Outcome criterion7() {
  const auto inst = load_instance(data_path("gs20.json"));
  auto cfg = load_run_config(profile_path("convergence.json"));
  std::size_t converged = 0;
  std::string runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto r = run_variational(inst, cfg, "gs20");
    const double longest = sustained_run(r.valid_mass, 0.9);
    converged += longest >= 10;
    runs += fmt(" %.0f", longest);
  }
  return {converged >= 3, fmt("%zu/5 runs sustain valid mass >= 0.9 for 10 iterations (longest runs:%s)", converged,
                              runs.c_str())};
}

Outcome criterion8() {
  const auto qinsp_cfg = load_run_config(profile_path("default.json"));
  const auto qtsa_cfg = load_run_config(profile_path("qtsa.json"));
  bool ok = true;
  std::string detail;
  auto mean_rho = [](const std::vector<RunRecord> &rs) {
    double s = 0;
    for (const auto &r : rs) s += r.rho.value_or(0.0);
    return s / static_cast<double>(rs.size());
  };
  for (const char *name : {"gs16", "gs20"}) {
    const auto inst = load_instance(data_path(std::string(name) + ".json"));
    const auto ref = reference_for(inst, qinsp_cfg.lambda);
    std::vector<RunRecord> qinsp, sampler;
    double explored = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto cfg = qinsp_cfg;
      cfg.seed = seed;
      qinsp.push_back(run_variational(inst, cfg, name, ref));
      explored += static_cast<double>(qinsp.back().distinct_explored);
    }
    const auto matched = static_cast<std::uint64_t>(std::llround(explored / 10));
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      RunConfig cfg = qinsp_cfg;
      cfg.solver = SolverKind::sampler;
      cfg.sampler_budget = matched;
      cfg.seed = seed;
      sampler.push_back(run_sampler(inst, cfg, name, ref));
    }
    RunConfig ex = qinsp_cfg;
    ex.solver = SolverKind::exact;
    const auto exact = run_exact(inst, ex, name);
    RunConfig full = qinsp_cfg;
    full.solver = SolverKind::sampler;
    full.sampler_budget = std::uint64_t{1} << inst.num_transactions();
    const auto exhaustive = run_sampler(inst, full, name, ref);
    const double rq = mean_rho(qinsp), rs = mean_rho(sampler), re = exact.rho.value_or(0.0),
                 rx = exhaustive.rho.value_or(0.0);
    ok = ok && re == 1.0 && !exact.reference_lower_bound && re >= rs && rs > 0 && rq > 0 && rx == 1.0;
    detail += fmt("%s: exact %.3f, sampler@%llu %.3f, qinsp %.3f, exhaustive %.3f; ", name, re,
                  static_cast<unsigned long long>(matched), rs, rq, rx);
    if (std::string(name) == "gs20") {
      std::size_t valid_runs = 0;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto cfg = qtsa_cfg;
        cfg.seed = seed;
        const auto r = run_variational(inst, cfg, name, ref);
        valid_runs += r.rho && *r.rho > 0;
      }
      ok = ok && valid_runs >= 4;
      detail += fmt("qtsa eagle-like+mitigation rho > 0 in %zu/5", valid_runs);
    }
  }
  return {ok, detail};
}

Outcome criterion9() {
  const auto inst = load_instance(data_path("gs16.json"));
  std::vector<RunConfig> cfgs;
  auto q = load_run_config(profile_path("qtsa.json"));
  q.iterations = 20;
  q.seed = 3;
  cfgs.push_back(q);
  auto c = load_run_config(profile_path("convergence.json"));
  c.iterations = 20;
  cfgs.push_back(c);
  RunConfig s = c;
  s.solver = SolverKind::sampler;
  s.sampler_budget = 5000;
  cfgs.push_back(s);
  std::size_t identical = 0;
  for (const auto &cfg : cfgs) identical += serialize_record(run(inst, cfg, "gs16")) == serialize_record(run(inst, cfg, "gs16"));
  return {identical == cfgs.size(), fmt("%zu/%zu configurations byte-identical on rerun", identical, cfgs.size())};
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && !selected.count(k + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu: %s  %s [%.1fs]\n", k + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
