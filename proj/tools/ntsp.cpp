/*******************************************************************************
 * Copyright (c) 2026 The ntsp contributors.                                   *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/

#include "ntsp/ntsp.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ntsp::Error(ntsp::ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ntsp::Error(ntsp::ErrorKind::io, "write failed for '" + path.string() + "'");
}

nlohmann::json read_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ntsp::Error(ntsp::ErrorKind::io, "cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception &e) {
    throw ntsp::Error(ntsp::ErrorKind::schema, path + ": " + e.what());
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Night-time settlement optimisation toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_path;
  auto *gen = app.add_subcommand("gen", "Generate a synthetic instance from a generator spec");
  gen->add_option("--spec", spec_path, "Generator spec (JSON)")->required();
  gen->add_option("--out", out_path, "Instance document to write")->required();

  std::string solver, instance_path, config_path, out_dir, label;
  std::optional<std::uint64_t> seed_override;
  auto *solve = app.add_subcommand("solve", "Run one solver and write its run record");
  solve->add_option("--solver", solver, "qtsa | qinsp | sampler | exact")
      ->required()
      ->check(CLI::IsMember({"qtsa", "qinsp", "sampler", "exact"}));
  solve->add_option("--instance", instance_path, "Instance document")->required();
  solve->add_option("--config", config_path, "Run configuration (JSON)")->required();
  solve->add_option("--out", out_dir, "Directory for the run record")->required();
  solve->add_option("--seed", seed_override, "Override the configured seed");
  solve->add_option("--label", label, "Instance label (default: file stem)");

  std::size_t sigma_n = 0;
  std::uint64_t sigma_shots = 0, sigma_delta = 0;
  auto *sigma = app.add_subcommand("sigma", "Mapping width for a target support size");
  sigma->add_option("--n", sigma_n, "Qubits")->required();
  sigma->add_option("--shots", sigma_shots, "Shots per circuit")->required();
  sigma->add_option("--delta", sigma_delta, "Expected number of distinct outcomes")->required();

  std::vector<std::size_t> bench_sizes{12, 16};
  std::size_t bench_trials = 20;
  ntsp::SparseBenchConfig bench;
  std::string bench_out;
  auto *mbench = app.add_subcommand("mitigate-bench", "Raw vs iHAMMER fidelity on known sparse states (CSV)");
  mbench->add_option("--sizes", bench_sizes, "Register sizes")->delimiter(',');
  mbench->add_option("--trials", bench_trials, "Trials per size");
  mbench->add_option("--shots", bench.shots, "Shots per circuit");
  mbench->add_option("--peak-qubits", bench.peaks_log2, "Rotated qubits (2^k peaks)");
  mbench->add_option("--flip-min", bench.flip_min, "Lower per-qubit flip rate");
  mbench->add_option("--flip-max", bench.flip_max, "Upper per-qubit flip rate");
  mbench->add_option("--preset", bench.preset, "Noise preset instead of uniform rates")
      ->check(CLI::IsMember({"eagle-like", "heron-like"}));
  mbench->add_option("--seed", bench.seed, "Seed");
  mbench->add_flag("!--no-entanglers", bench.entangled, "Product state without CNOT layers");
  mbench->add_option("--out", bench_out, "CSV file (default: stdout)");

  std::string runs_dir, report_out;
  auto *report = app.add_subcommand("report", "Aggregate run records into CSV");
  report->add_option("--runs", runs_dir, "Directory of run records")->required();
  report->add_option("--out", report_out, "CSV file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto spec = ntsp::parse_generator_spec(read_json(spec_path));
      write_file(out_path, ntsp::serialize_instance(ntsp::generate_instance(spec)));
    } else if (*solve) {
      const auto inst = ntsp::load_instance(instance_path);
      auto cfg = ntsp::load_run_config(config_path);
      cfg.solver = ntsp::parse_solver_kind(solver);
      if (seed_override) cfg.seed = *seed_override;
      if (label.empty()) label = fs::path(instance_path).stem().string();
      const auto record = ntsp::run(inst, cfg, label);
      const auto file = fs::path(out_dir) / (label + "_" + solver + "_seed" + std::to_string(cfg.seed) + ".json");
      write_file(file, ntsp::serialize_record(record));
      std::cout << file.string() << "\n";
    } else if (*sigma) {
      std::printf("%.5f\n", ntsp::solve_sigma(sigma_n, sigma_shots, sigma_delta));
    } else if (*mbench) {
      std::ostringstream csv;
      csv.precision(10);
      csv << "row_type,n,trial,raw_fidelity,mitigated_fidelity,gamma,iterations\n";
      for (auto n : bench_sizes) {
        bench.n = n;
        double raw = 0, mit = 0;
        for (std::size_t t = 0; t < bench_trials; ++t) {
          const auto r = ntsp::sparse_state_trial(bench, t);
          raw += r.raw_fidelity;
          mit += r.mitigated_fidelity;
          csv << "trial," << n << ',' << t << ',' << r.raw_fidelity << ',' << r.mitigated_fidelity << ','
              << r.gamma << ',' << r.iterations << '\n';
        }
        if (bench_trials > 0)
          csv << "mean," << n << ",," << raw / static_cast<double>(bench_trials) << ','
              << mit / static_cast<double>(bench_trials) << ",,\n";
      }
      if (bench_out.empty()) std::cout << csv.str();
      else write_file(bench_out, csv.str());
    } else if (*report) {
      write_file(report_out, ntsp::report_csv(ntsp::load_records(runs_dir)));
    }
  } catch (const ntsp::Error &e) {
    std::cerr << "error (" << ntsp::to_string(e.kind()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
