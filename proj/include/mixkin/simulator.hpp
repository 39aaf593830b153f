#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mixkin/collision.hpp"
#include "mixkin/mixture.hpp"
#include "mixkin/moments.hpp"
#include "mixkin/vec3.hpp"

namespace mixkin {

// Stochastic particle state.  One statistical weight is shared by all
// species (N_i is derived from the species densities), which is what makes
// the both-partner collision update exactly conservative.
struct ParticleEnsemble {
  struct Species {
    std::vector<Vec3> v;
    double particle_mass = 0.0;
    double density = 0.0;  // rho_i = weight * N_i
  };
  std::vector<Species> species;
  double weight = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step_index = 0;
  double u_max = 0.0;  // majorant relative speed

  // counters since init
  std::uint64_t candidates = 0;
  std::uint64_t accepted = 0;
  std::uint64_t clamped = 0;
  int umax_refreshes = 0;

  int n_species() const { return static_cast<int>(species.size()); }
  std::uint64_t total_particles() const {
    std::uint64_t n = 0;
    for (const auto& s : species) n += s.v.size();
    return n;
  }
};

// Conserved-quantity snapshot used by the audit.
struct ConservedSnapshot {
  double t = 0.0;
  std::vector<double> species_mass;
  std::vector<double> species_energy;  // m_i w sum |v|^2 (kinetic, unnormalized)
  std::vector<double> temperature;     // m_i <|v - mean_i|^2> / 3
  Vec3 momentum;                       // sum_i m_i w sum_p v_p
  double energy = 0.0;                 // sum_i m_i w sum_p |v_p|^2
};

struct AuditRecord {
  std::vector<ConservedSnapshot> history;
  std::uint64_t candidates = 0, accepted = 0, clamped = 0;
  int umax_refreshes = 0;
  double u_max_final = 0.0;
  // drifts relative to the initial snapshot; momentum scaled by sum m w |v|
  double max_mass_drift = 0.0;
  double max_momentum_drift = 0.0;
  double max_energy_drift = 0.0;
};

ParticleEnsemble init_ensemble(const MixtureConfig& cfg);

ConservedSnapshot conserved_snapshot(const ParticleEnsemble& ens, double t);

// Advance by dt: per species pair, Poisson(Lambda_ij dt) candidate pairs at
// the majorant rate w (2 U_max)^lambda ||b||_L1(S2), acceptance |u|^lambda /
// (2 U_max)^lambda (clamped, counted), angular sampling from the truncated
// kernel, both partners updated.  Deterministic given (seed, step index).
void step(ParticleEnsemble& ens, const MixtureConfig& cfg, const AngularTables& tables,
          double dt);

struct RunResult {
  MomentTable table;
  AuditRecord audit;
};

// Advance to t_end, recording moments on the configured cadence over the
// configured order grid; snapshot_cb fires at each requested grid time.
RunResult run(const MixtureConfig& cfg,
              const std::function<void(double, const ParticleEnsemble&)>& snapshot_cb = {});

// Drift summary over >= 2 snapshots.
AuditRecord conservation_audit(const std::vector<ConservedSnapshot>& history);

// m_{k,i} of the particle data: w sum_p <v_p>_i^k (fractional k allowed).
double moment(const ParticleEnsemble& ens, double k, int i);

std::string audit_json(const AuditRecord& a);

}  // namespace mixkin
