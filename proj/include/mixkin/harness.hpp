#pragma once

#include <string>
#include <vector>

#include "mixkin/mixture.hpp"
#include "mixkin/report.hpp"
#include "mixkin/simulator.hpp"

namespace mixkin {

struct HarnessOptions {
  std::string out_dir;
  int workers = 0;       // 0 = hardware concurrency
  bool write_plots = true;
  bool write_files = true;
  double scale = 1.0;    // multiplies particle counts / instance counts (CI shrink)
};

// Named experiments.  Each builds its own initial data and simulation window
// on top of the supplied model (kernel, masses, eps, seed), runs, and emits a
// structured report with per-check pass/fail/inconclusive verdicts.
Report exp_conservation_entropy(const MixtureConfig& cfg, const HarnessOptions& opt);  // e1
Report exp_moment_generation(const MixtureConfig& cfg, const HarnessOptions& opt);     // e2
Report exp_moment_propagation(const MixtureConfig& cfg, const HarnessOptions& opt);    // e3
Report exp_exponential_moments(const MixtureConfig& cfg, const HarnessOptions& opt);   // e4
Report exp_lp_boundedness(const MixtureConfig& cfg, const HarnessOptions& opt);        // e5
Report exp_inequality_suite(const MixtureConfig& cfg, const HarnessOptions& opt);      // e6
Report exp_fourier_suite(const MixtureConfig& cfg, const HarnessOptions& opt);         // e7

const std::vector<std::string>& experiment_names();  // {"e1",...,"e7"}

// Run the named experiments (or all), optionally in parallel processes of the
// worker pool; reports are written to opt.out_dir together with summary.md.
std::vector<Report> run_experiments(const MixtureConfig& cfg,
                                    const std::vector<std::string>& names,
                                    const HarnessOptions& opt);

// Standalone Bernoulli comparison battery (also the moments-ode subcommand).
Report bernoulli_battery(std::uint64_t seed, int instances);

// Shared helpers.
double auto_grid_half_width(const ParticleEnsemble& ens);

}  // namespace mixkin
