#include "mixkin/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mixkin/log.hpp"
#include "mixkin/rng.hpp"

namespace mixkin {

namespace {

constexpr std::uint64_t kTagInit = 0x1A17;
constexpr std::uint64_t kTagStep = 0x57E9;
constexpr std::uint64_t kTagMajorant = 0x3A30;

// Marsaglia-Tsang gamma sampler, shape >= 1.
double gamma_sample(RngStream& rng, double shape) {
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double vv = t * t * t;
    double u = rng.u01_open0();
    if (std::log(u) < 0.5 * x * x + d - d * vv + d * std::log(vv)) return d * vv;
  }
}

Vec3 sample_velocity(RngStream& rng, const InitDistribution& init, double particle_mass) {
  switch (init.kind) {
    case InitDistribution::Kind::gaussian: {
      double s = std::sqrt(init.temperature / particle_mass);
      return init.mean + Vec3{s * rng.normal(), s * rng.normal(), s * rng.normal()};
    }
    case InitDistribution::Kind::heavy_tail: {
      // density ~ (1 + |v|^2)^(-p/2): 3d Student-t, v = z / sqrt(chi2_nu), nu = p-3
      double nu = init.tail_exponent - 3.0;
      Vec3 z{rng.normal(), rng.normal(), rng.normal()};
      double chi2 = 2.0 * gamma_sample(rng, 0.5 * nu);
      return z * (1.0 / std::sqrt(chi2));
    }
    case InitDistribution::Kind::uniform_ball: {
      double r = init.radius * std::cbrt(rng.u01());
      double mu = 2.0 * rng.u01() - 1.0;
      double ph = 2.0 * kPi * rng.u01();
      double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      return Vec3{r * st * std::cos(ph), r * st * std::sin(ph), r * mu};
    }
  }
  return {};
}

double auto_majorant(const ParticleEnsemble& ens, std::uint64_t seed) {
  RngStream rng{seed, kTagMajorant};
  const int I = ens.n_species();
  std::vector<double> speeds;
  speeds.reserve(20000);
  for (int k = 0; k < 20000; ++k) {
    int i = std::min(I - 1, static_cast<int>(rng.u01() * I));
    int j = std::min(I - 1, static_cast<int>(rng.u01() * I));
    const auto& a = ens.species[i].v;
    const auto& b = ens.species[j].v;
    if (a.empty() || b.empty()) continue;
    std::size_t p = std::min(a.size() - 1, static_cast<std::size_t>(rng.u01() * a.size()));
    std::size_t q = std::min(b.size() - 1, static_cast<std::size_t>(rng.u01() * b.size()));
    speeds.push_back(norm(a[p] - b[q]));
  }
  std::sort(speeds.begin(), speeds.end());
  double pct = speeds[static_cast<std::size_t>(0.999 * (speeds.size() - 1))];
  return 2.0 * pct;
}

}  // namespace

ParticleEnsemble init_ensemble(const MixtureConfig& cfg) {
  auto errs = validate_config(cfg);
  if (!errs.empty()) throw std::invalid_argument("init_ensemble: invalid config: " + errs[0]);
  const int I = cfg.n_species();
  ParticleEnsemble ens;
  ens.seed = cfg.sim.seed;
  ens.species.resize(I);

  double rho_total = 0.0;
  for (const auto& sp : cfg.species) rho_total += sp.init.density;
  ens.weight = rho_total / static_cast<double>(cfg.sim.n_particles);

  for (int i = 0; i < I; ++i) {
    auto& sp = ens.species[i];
    sp.particle_mass = cfg.species[i].mass;
    std::uint64_t ni = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(cfg.species[i].init.density / ens.weight)));
    sp.v.resize(ni);
    sp.density = ens.weight * static_cast<double>(ni);
    for (std::uint64_t p = 0; p < ni; ++p) {
      RngStream rng{cfg.sim.seed, kTagInit, static_cast<std::uint64_t>(i), p};
      sp.v[p] = sample_velocity(rng, cfg.species[i].init, sp.particle_mass);
    }
  }

  if (cfg.sim.recenter) {
    Vec3 P{};
    double M = 0.0;
    for (const auto& sp : ens.species) {
      for (const Vec3& v : sp.v) P += sp.particle_mass * ens.weight * v;
      M += sp.particle_mass * ens.weight * static_cast<double>(sp.v.size());
    }
    Vec3 shift = P * (1.0 / M);
    for (auto& sp : ens.species)
      for (Vec3& v : sp.v) v -= shift;
  }

  ens.u_max = cfg.sim.majorant_speed > 0.0 ? cfg.sim.majorant_speed
                                           : auto_majorant(ens, cfg.sim.seed);
  return ens;
}

ConservedSnapshot conserved_snapshot(const ParticleEnsemble& ens, double t) {
  ConservedSnapshot s;
  s.t = t;
  const int I = ens.n_species();
  s.species_mass.resize(I);
  s.species_energy.resize(I);
  s.temperature.resize(I);
  for (int i = 0; i < I; ++i) {
    const auto& sp = ens.species[i];
    s.species_mass[i] = ens.weight * static_cast<double>(sp.v.size());
    Vec3 mean{};
    double e = 0.0;
    for (const Vec3& v : sp.v) {
      mean += v;
      e += norm2(v);
    }
    mean = mean * (1.0 / std::max<std::size_t>(1, sp.v.size()));
    double var = 0.0;
    for (const Vec3& v : sp.v) var += norm2(v - mean);
    var /= std::max<std::size_t>(1, sp.v.size());
    s.species_energy[i] = sp.particle_mass * ens.weight * e;
    s.temperature[i] = sp.particle_mass * var / 3.0;
    s.momentum += sp.particle_mass * ens.weight * mean *
                  static_cast<double>(sp.v.size());
    s.energy += s.species_energy[i];
  }
  return s;
}

void step(ParticleEnsemble& ens, const MixtureConfig& cfg, const AngularTables& tables,
          double dt) {
  if (dt <= 0.0) {
    ++ens.step_index;
    return;
  }
  const int I = ens.n_species();
  const double eps = cfg.sim.angular_cutoff;
  std::uint64_t clamped_this_step = 0, candidates_this_step = 0;

  int ci = 0;
  for (int i = 0; i < I; ++i) {
    for (int j = i; j < I; ++j, ++ci) {
      auto& vi = ens.species[i].v;
      auto& vj = ens.species[j].v;
      const std::size_t Ni = vi.size(), Nj = vj.size();
      double pairs = (i == j) ? 0.5 * static_cast<double>(Ni) * (Ni - 1)
                              : static_cast<double>(Ni) * static_cast<double>(Nj);
      if (pairs <= 0.0) continue;
      const double lam = cfg.kernel.lam(i, j);
      const double s = cfg.kernel.sij(i, j);
      const double majorant = std::pow(2.0 * ens.u_max, lam);
      double rate = pairs * ens.weight * majorant * tables.at(i, j).b_l1_sphere;
      double mean = rate * dt;
      if (mean > 2.0e9)
        throw std::runtime_error("step: candidate count overflow (mean " +
                                 std::to_string(mean) + "); reduce dt");
      RngStream rng{ens.seed, kTagStep, ens.step_index, static_cast<std::uint64_t>(ci)};
      std::uint64_t m = rng.poisson(mean);
      const double m_i = ens.species[i].particle_mass;
      const double m_j = ens.species[j].particle_mass;
      for (std::uint64_t c = 0; c < m; ++c) {
        ++candidates_this_step;
        std::size_t p = std::min(Ni - 1, static_cast<std::size_t>(rng.u01() * Ni));
        std::size_t q = std::min(Nj - 1, static_cast<std::size_t>(rng.u01() * Nj));
        if (i == j) {
          if (Ni < 2) break;
          int guard = 0;
          while (q == p && ++guard < 64)
            q = std::min(Nj - 1, static_cast<std::size_t>(rng.u01() * Nj));
          if (q == p) continue;
        }
        Vec3 u = vi[p] - vj[q];
        double r = norm(u);
        if (r == 0.0) continue;
        double pacc = std::pow(r / (2.0 * ens.u_max), lam);
        if (pacc > 1.0) {
          ++clamped_this_step;
          pacc = 1.0;
        }
        if (rng.u01() >= pacc) continue;
        double theta = sample_angle(s, eps, rng.u01());
        double phi = 2.0 * kPi * rng.u01();
        ScatteringFrame fr = make_frame(u);
        Vec3 sigma = (std::cos(theta) / r) * u + (std::sin(theta) / r) * gamma(fr, phi);
        auto [vp, vq] = post_collision(vi[p], vj[q], m_i, m_j, sigma);
        vi[p] = vp;
        vj[q] = vq;
        ++ens.accepted;
      }
    }
  }
  ens.candidates += candidates_this_step;
  ens.clamped += clamped_this_step;
  if (candidates_this_step > 0 &&
      clamped_this_step > 0.01 * static_cast<double>(candidates_this_step)) {
    ens.u_max *= 1.5;
    ++ens.umax_refreshes;
    logging::warn("step " + std::to_string(ens.step_index) + ": clamp fraction exceeded 1%, "
                  "majorant speed raised to " + std::to_string(ens.u_max));
  }
  ++ens.step_index;
}

double moment(const ParticleEnsemble& ens, double k, int i) {
  const auto& sp = ens.species.at(i);
  double m = sp.particle_mass;
  double acc = 0.0;
  if (k == 0.0) return ens.weight * static_cast<double>(sp.v.size());
  for (const Vec3& v : sp.v) acc += std::pow(1.0 + m * norm2(v), 0.5 * k);
  return ens.weight * acc;
}

AuditRecord conservation_audit(const std::vector<ConservedSnapshot>& history) {
  if (history.size() < 2)
    throw std::invalid_argument("conservation_audit: need at least 2 snapshots");
  AuditRecord a;
  a.history = history;
  const ConservedSnapshot& h0 = history.front();
  // momentum scale sqrt(M * E): thermal momentum magnitude at t0
  double total_mass = 0.0;
  for (double m : h0.species_mass) total_mass += m;
  double pscale = std::sqrt(std::max(1e-300, total_mass * h0.energy));
  for (std::size_t t = 1; t < history.size(); ++t) {
    const auto& h = history[t];
    for (std::size_t i = 0; i < h.species_mass.size(); ++i) {
      double rel = std::fabs(h.species_mass[i] - h0.species_mass[i]) /
                   std::max(1e-300, h0.species_mass[i]);
      a.max_mass_drift = std::max(a.max_mass_drift, rel);
    }
    a.max_momentum_drift =
        std::max(a.max_momentum_drift, norm(h.momentum - h0.momentum) / pscale);
    a.max_energy_drift = std::max(
        a.max_energy_drift, std::fabs(h.energy - h0.energy) / std::max(1e-300, h0.energy));
  }
  return a;
}

RunResult run(const MixtureConfig& cfg,
              const std::function<void(double, const ParticleEnsemble&)>& snapshot_cb) {
  AngularTables tables(cfg, cfg.sim.angular_cutoff);
  ParticleEnsemble ens = init_ensemble(cfg);

  const double dt = cfg.sim.dt;
  const std::uint64_t steps =
      (dt > 0.0) ? static_cast<std::uint64_t>(std::ceil(cfg.sim.t_end / dt - 1e-12)) : 0;
  int out_every = cfg.sim.output_every > 0
                      ? cfg.sim.output_every
                      : std::max<int>(1, static_cast<int>(steps / 200));

  RunResult res;
  res.table.n_species = cfg.n_species();
  res.table.orders = MomentTable::order_grid(cfg.kernel, cfg.sim.pmax);

  auto record = [&](double t) {
    res.table.times.push_back(t);
    std::vector<std::vector<double>> row(cfg.n_species());
    for (int i = 0; i < cfg.n_species(); ++i) {
      row[i].reserve(res.table.orders.size());
      for (double k : res.table.orders) row[i].push_back(moment(ens, k, i));
    }
    res.table.values.push_back(std::move(row));
    res.audit.history.push_back(conserved_snapshot(ens, t));
    for (int i = 0; i < cfg.n_species(); ++i) {
      if (!ens.species[i].v.empty() && !std::isfinite(norm2(ens.species[i].v[0])))
        throw std::runtime_error("run: NaN velocity detected at t=" + std::to_string(t) +
                                 " after " + std::to_string(ens.accepted) + " collisions");
    }
  };

  record(0.0);
  std::size_t next_grid = 0;
  auto grid_times = cfg.sim.grid_times;
  std::sort(grid_times.begin(), grid_times.end());
  if (snapshot_cb && next_grid < grid_times.size() && grid_times[next_grid] <= 0.0) {
    snapshot_cb(0.0, ens);
    ++next_grid;
  }
  double t = 0.0;
  for (std::uint64_t k = 1; k <= steps; ++k) {
    step(ens, cfg, tables, dt);
    t = static_cast<double>(k) * dt;
    if (k % static_cast<std::uint64_t>(out_every) == 0 || k == steps) record(t);
    while (snapshot_cb && next_grid < grid_times.size() && grid_times[next_grid] <= t + 1e-12) {
      snapshot_cb(t, ens);
      ++next_grid;
    }
  }

  AuditRecord drift = res.audit.history.size() >= 2 ? conservation_audit(res.audit.history)
                                                    : AuditRecord{};
  drift.history = std::move(res.audit.history);
  res.audit = std::move(drift);
  res.audit.candidates = ens.candidates;
  res.audit.accepted = ens.accepted;
  res.audit.clamped = ens.clamped;
  res.audit.umax_refreshes = ens.umax_refreshes;
  res.audit.u_max_final = ens.u_max;
  return res;
}

std::string audit_json(const AuditRecord& a) {
  nlohmann::json j;
  j["max_mass_drift"] = a.max_mass_drift;
  j["max_momentum_drift"] = a.max_momentum_drift;
  j["max_energy_drift"] = a.max_energy_drift;
  j["candidates"] = a.candidates;
  j["accepted"] = a.accepted;
  j["clamped"] = a.clamped;
  j["umax_refreshes"] = a.umax_refreshes;
  j["u_max_final"] = a.u_max_final;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : a.history) {
    hist.push_back({{"t", h.t},
                    {"species_mass", h.species_mass},
                    {"species_energy", h.species_energy},
                    {"temperature", h.temperature},
                    {"momentum", {h.momentum.x, h.momentum.y, h.momentum.z}},
                    {"energy", h.energy}});
  }
  j["history"] = hist;
  return j.dump(2);
}

}  // namespace mixkin
