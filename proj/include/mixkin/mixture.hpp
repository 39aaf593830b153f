#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixkin/vec3.hpp"

namespace mixkin {

// ---- static model definition -----------------------------------------------
//
// A mixture of I monatomic species with normalized particle masses and a
// symmetric kernel matrix (lambda, s, kappa) defining the hard-potential,
// forward-only grazing collision family
//   B_ij(|u|, cos t) = |u|^lambda_ij * b_ij(cos t),
//   beta_ij(t) = sin t * b_ij(cos t) = kappa_ij * t^(-1-s_ij),  t in (0, pi/2].

struct InitDistribution {
  enum class Kind { gaussian, heavy_tail, uniform_ball };
  Kind kind = Kind::gaussian;
  Vec3 mean{};            // gaussian
  double temperature = 1.0;
  double tail_exponent = 7.0;  // heavy_tail, must be > 5
  double radius = 1.0;         // uniform_ball
  double density = 1.0;        // integral of f_i (statistical mass)
};

struct SpeciesParams {
  int index = 0;          // 1-based
  double mass = 0.0;      // normalized, sum over species = 1
  InitDistribution init;
};

struct KernelMatrix {
  int size = 0;
  std::vector<double> lambda;  // row-major I*I, in (0,2]
  std::vector<double> s;       // in (0,2)
  std::vector<double> kappa;   // > 0, canonical kappa1 = kappa2 = kappa
  bool forward_only = true;    // support t in (0, pi/2], fixed

  double lam(int i, int j) const { return lambda[i * size + j]; }
  double sij(int i, int j) const { return s[i * size + j]; }
  double kap(int i, int j) const { return kappa[i * size + j]; }
};

struct DerivedExponents {
  std::vector<double> lambda_bar_i, lambda_dbar_i;  // per-species row min / max
  double lambda_bar = 0, lambda_dbar = 0, lambda_natural = 0;
  std::vector<double> s_bar_i, s_dbar_i;
  double s_bar = 0, s_dbar = 0, s_natural = 0;
};

struct GridConfig {
  int n = 64;              // cells per axis
  double half_width = 0.0; // L; 0 = auto from initial data
};

struct SimConfig {
  double dt = 1e-4;
  double t_end = 1.0;
  std::uint64_t n_particles = 100000;   // total; per species derived by density
  double angular_cutoff = 1e-2;         // eps
  double majorant_speed = 0.0;          // U_max; 0 = auto (2x 99.9th pct |u|)
  std::uint64_t seed = 1;
  int output_every = 0;                 // steps between moment outputs; 0 = auto
  bool recenter = true;                 // shift so total momentum is exactly 0
  std::vector<double> grid_times;       // snapshot times for grid projection
  GridConfig grid;
  int pmax = 10;                        // moment order grid goes to 2*pmax
};

struct MixtureConfig {
  std::vector<SpeciesParams> species;
  KernelMatrix kernel;
  SimConfig sim;
  std::string experiments_json;  // raw JSON of config "experiments", may be empty
  double kappa_gen2 = 0.0;       // 0 = default 3 e^alpha

  int n_species() const { return static_cast<int>(species.size()); }
  double mass(int i) const { return species[i].mass; }
};

// ---- operations --------------------------------------------------------------

// Rescale so the masses add up to unity; rejects non-positive entries.
std::vector<double> normalize_masses(const std::vector<double>& raw);

// Species bracket weight <v>_i = sqrt(1 + m_i |v|^2), always >= 1.
inline double bracket(const Vec3& v, double m_i) {
  return std::sqrt(1.0 + m_i * norm2(v));
}

DerivedExponents derive_exponents(const KernelMatrix& k);

// Collect every invariant violation; empty result means valid.
std::vector<std::string> validate_config(const MixtureConfig& cfg);

// Load from JSON text / file.  Throws ConfigError with a field path on bad input.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& f, const std::string& msg)
      : std::runtime_error(f + ": " + msg), field(f) {}
};

MixtureConfig load_config_text(const std::string& json_text);
MixtureConfig load_config_file(const std::string& path);

// Canonical re-serialization used for hashing and provenance.
std::string config_canonical_json(const MixtureConfig& cfg);
std::uint64_t config_hash(const MixtureConfig& cfg);

// Schema document for `mixkinetic schema`.
std::string config_schema_doc();

}  // namespace mixkin
