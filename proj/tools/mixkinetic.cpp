// mixkinetic: homogeneous kinetic mixture simulator and verification harness.
//
// Subcommands: simulate, verify <experiment|all>, moments-ode, report, schema.
// Exit codes: 0 ok, 1 verification failure, 2 missing config, 3 invalid config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixkin/harness.hpp"
#include "mixkin/log.hpp"
#include "mixkin/mixture.hpp"
#include "mixkin/moments.hpp"
#include "mixkin/report.hpp"
#include "mixkin/simulator.hpp"
#include "mixkin/spectral.hpp"

namespace fs = std::filesystem;
using namespace mixkin;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  double eps = 0.0;
};

MixtureConfig load_or_exit(const CommonArgs& a) {
  if (a.config_path.empty() || !fs::exists(a.config_path)) {
    std::cerr << "error: config file missing: '" << a.config_path << "'\n";
    std::exit(2);
  }
  try {
    MixtureConfig cfg = load_config_file(a.config_path);
    if (a.seed_set) cfg.sim.seed = a.seed;
    if (a.eps > 0.0) cfg.sim.angular_cutoff = a.eps;
    return cfg;
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid config at " << e.field << ": " << e.what() << "\n";
    std::exit(3);
  } catch (const std::exception& e) {
    std::cerr << "error: invalid config: " << e.what() << "\n";
    std::exit(3);
  }
}

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
  auto* copt = cmd->add_option("--config", a.config_path, "model/config JSON");
  if (config_required) copt->required();
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--seed", a.seed, "seed override")->each([&](const std::string&) {
    a.seed_set = true;
  });
  cmd->add_option("--workers", a.workers, "worker count (default: cores)");
  cmd->add_option("--eps", a.eps, "angular cutoff override");
}

void write_grid_snapshot(const std::string& path, const GridDensity& g) {
  // flat little-endian doubles; header: species count, grid dims, half-width L
  std::ofstream out(path, std::ios::binary);
  std::uint64_t ns = g.species.size();
  std::uint64_t dims[3] = {static_cast<std::uint64_t>(g.n), static_cast<std::uint64_t>(g.n),
                           static_cast<std::uint64_t>(g.n)};
  out.write(reinterpret_cast<const char*>(&ns), 8);
  out.write(reinterpret_cast<const char*>(dims), 24);
  out.write(reinterpret_cast<const char*>(&g.L), 8);
  for (const auto& sp : g.species)
    out.write(reinterpret_cast<const char*>(sp.values.data()),
              static_cast<std::streamsize>(sp.values.size() * sizeof(double)));
}

int cmd_simulate(const CommonArgs& a) {
  MixtureConfig cfg = load_or_exit(a);
  fs::create_directories(a.out_dir);
  double L = cfg.sim.grid.half_width;
  auto cb = [&](double t, const ParticleEnsemble& ens) {
    double l = L > 0.0 ? L : auto_grid_half_width(ens) * 1.3;
    char name[64];
    std::snprintf(name, sizeof(name), "grid_%.6f.bin", t);
    write_grid_snapshot(a.out_dir + "/" + name, grid_project(ens, cfg.sim.grid.n, l));
  };
  RunResult rr = run(cfg, cfg.sim.grid_times.empty()
                              ? std::function<void(double, const ParticleEnsemble&)>{}
                              : cb);
  rr.table.write_csv(a.out_dir + "/moments.csv");
  std::ofstream(a.out_dir + "/audit.json") << audit_json(rr.audit) << "\n";
  // config-hash sidecar for provenance
  nlohmann::json side = {{"config_hash", config_hash(cfg)},
                         {"seed", cfg.sim.seed},
                         {"code_version", MIXKIN_VERSION}};
  std::ofstream(a.out_dir + "/moments.csv.meta.json") << side.dump(2) << "\n";
  std::cout << "simulate: " << rr.table.times.size() << " output rows, "
            << rr.audit.accepted << " collisions, energy drift "
            << rr.audit.max_energy_drift << "\n";
  return 0;
}

int cmd_verify(const CommonArgs& a, const std::string& which) {
  MixtureConfig cfg = load_or_exit(a);
  fs::create_directories(a.out_dir);
  std::vector<std::string> names;
  if (which == "all") {
    names = experiment_names();
  } else {
    const auto& valid = experiment_names();
    if (std::find(valid.begin(), valid.end(), which) == valid.end()) {
      std::cerr << "error: unknown experiment '" << which << "'; valid:";
      for (const auto& n : valid) std::cerr << " " << n;
      std::cerr << " all\n";
      return 1;
    }
    names = {which};
  }
  HarnessOptions opt;
  opt.out_dir = a.out_dir;
  opt.workers = a.workers;
  auto reports = run_experiments(cfg, names, opt);
  bool fail = false;
  int inconclusive = 0;
  for (const auto& r : reports) {
    fail = fail || r.any_fail();
    inconclusive += r.count("inconclusive");
    std::cout << r.name << ": " << (r.any_fail() ? "FAIL" : "PASS") << " ("
              << r.count("pass") << " pass, " << r.count("fail") << " fail, "
              << r.count("inconclusive") << " inconclusive)\n";
  }
  std::cout << "summary written to " << a.out_dir << "/summary.md";
  if (inconclusive) std::cout << " (" << inconclusive << " inconclusive rows)";
  std::cout << "\n";
  return fail ? 1 : 0;
}

int cmd_moments_ode(const CommonArgs& a) {
  fs::create_directories(a.out_dir);
  std::uint64_t seed = a.seed_set ? a.seed : 1;
  Report rep = bernoulli_battery(seed, 100);
  rep.code_version = MIXKIN_VERSION;
  rep.seed = seed;
  rep.write(a.out_dir);
  // example trajectory vs super solution
  BernoulliODE ode{1.0, 1.0, 1.0, 10.0};
  Trajectory tr = integrate_bernoulli(ode, 3.0, 1e-4);
  std::ofstream csv(a.out_dir + "/bernoulli_example.csv");
  csv << "t,x,super_solution,propagation_bound\n";
  for (std::size_t k = 0; k < tr.t.size(); k += 100) {
    double t = tr.t[k];
    csv << t << "," << tr.x[k] << "," << (t > 0 ? super_solution(ode, t) : tr.x[k]) << ","
        << propagation_bound(ode) << "\n";
  }
  std::cout << "moments-ode: " << (rep.any_fail() ? "FAIL" : "PASS") << "\n";
  return rep.any_fail() ? 1 : 0;
}

int cmd_report(const CommonArgs& a) {
  // regenerate summary.md from report_*.json files in --out
  std::vector<Report> reports;
  for (const auto& entry : fs::directory_iterator(a.out_dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("report_", 0) != 0 || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    nlohmann::json j = nlohmann::json::parse(in);
    Report r;
    r.name = j.value("experiment", name);
    for (const auto& c : j["checks"]) {
      r.checks.push_back({c.value("quantity", ""), c.value("value", 0.0),
                          c.value("bound", 0.0), c.value("slack", 0.0),
                          c.value("tolerance", 0.0), c.value("verdict", "info"),
                          c.value("hard", false)});
    }
    reports.push_back(std::move(r));
  }
  std::sort(reports.begin(), reports.end(),
            [](const Report& x, const Report& y) { return x.name < y.name; });
  std::ofstream(a.out_dir + "/summary.md") << summary_markdown(reports);
  std::cout << "report: summarized " << reports.size() << " reports\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixkinetic: multi-species kinetic simulator and verification harness"};
  app.require_subcommand(1);

  CommonArgs sim_args, ver_args, ode_args, rep_args;
  std::string which = "all";

  auto* sim = app.add_subcommand("simulate", "run the particle simulation");
  add_common(sim, sim_args);

  auto* ver = app.add_subcommand("verify", "run verification experiments");
  ver->add_option("experiment", which, "experiment name (e1..e7) or 'all'");
  add_common(ver, ver_args);

  auto* ode = app.add_subcommand("moments-ode", "comparison-principle battery");
  add_common(ode, ode_args, false);

  auto* rep = app.add_subcommand("report", "regenerate summary.md from report files");
  add_common(rep, rep_args, false);

  auto* sch = app.add_subcommand("schema", "print the configuration schema");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (ver->parsed()) return cmd_verify(ver_args, which);
    if (ode->parsed()) return cmd_moments_ode(ode_args);
    if (rep->parsed()) return cmd_report(rep_args);
    if (sch->parsed()) {
      std::cout << config_schema_doc();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
