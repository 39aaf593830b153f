#pragma once

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mixkin/moments.hpp"
#include "mixkin/simulator.hpp"
#include "mixkin/vec3.hpp"

namespace mixkin {

using cplx = std::complex<double>;

// ---- velocity-space grids ------------------------------------------------------

// Uniform n^3 grid on [-L, L)^3, cell centers -L + (idx+0.5) h, h = 2L/n.
// Synthetic densities carry a closed-form point evaluator; deposited grids
// fall back to trilinear interpolation (zero outside the box).
struct GridDensity {
  struct Species {
    std::vector<double> values;  // (ix*n + iy)*n + iz
    double mass_tag = 0.0;       // bracket mass m_i
    double out_of_box = 0.0;     // deposit loss
    std::function<double(const Vec3&)> evaluator;  // optional closed form
    double support_radius = 0.0;
  };
  int n = 0;
  double L = 0.0;
  std::vector<Species> species;

  double h() const { return 2.0 * L / n; }
  double cellvol() const { return h() * h() * h(); }
  Vec3 center(int ix, int iy, int iz) const {
    double hh = h();
    return {-L + (ix + 0.5) * hh, -L + (iy + 0.5) * hh, -L + (iz + 0.5) * hh};
  }
  double value(int i, int ix, int iy, int iz) const {
    return species[i].values[(static_cast<std::size_t>(ix) * n + iy) * n + iz];
  }
  // point evaluation: analytic evaluator when present, else trilinear
  double sample(int i, const Vec3& v) const;
  double species_mass(int i) const;
  void update_support_radii();
};

struct GaussianBlob {
  Vec3 center{};
  double sigma = 1.0;
  double mass = 1.0;
};

// Grid sampled from closed-form Gaussian mixtures, with exact evaluator.
GridDensity synthetic_density(int n, double L,
                              const std::vector<std::vector<GaussianBlob>>& blobs,
                              const std::vector<double>& mass_tags);

// Cloud-in-cell deposit of the particle data; out-of-box shares are dropped
// and reported (warning when the loss exceeds 0.1% of the species mass).
GridDensity grid_project(const ParticleEnsemble& ens, int n, double L);

// m_{k,i} of the grid measure: sum f <v_c>_i^k cellvol.
double moment(const GridDensity& grid, double k, int i);

struct EntropyEstimate {
  double H = 0.0;        // sum f log f
  double LlogL = 0.0;    // sum f log(1+f)
};
EntropyEstimate entropy_estimate(const GridDensity& grid);

// ---- discrete Fourier transforms -------------------------------------------------

// F(f)(xi) = int f e^{-i v.xi} dv ~ h^3 sum_c f_c e^{-i v_c.xi}; exact at any xi.
cplx nudft(const GridDensity& grid, int i, const Vec3& xi);

// Dual-grid field with mode spacing pi/(pad L), built by zero-padded FFT;
// trilinear complex lookup between modes.  The exact variant keeps the cell
// data and evaluates the transform directly at every lookup (oracle-grade,
// O(n^3) per point).
class FourierField {
 public:
  static FourierField build(const GridDensity& grid, int species, int pad = 2);
  static FourierField exact(const GridDensity& grid, int species);
  cplx lookup(const Vec3& xi) const;           // trilinear, zero outside the dual box
  cplx at_mode(int kx, int ky, int kz) const;  // k in [-modes/2, modes/2)
  int modes() const { return modes_; }
  double mode_spacing() const { return dxi_; }
  double xi_max() const { return 0.5 * modes_ * dxi_; }

 private:
  int modes_ = 0;
  double dxi_ = 0.0;
  std::vector<cplx> vals_;
  // exact mode: cell masses and geometry
  bool exact_ = false;
  int n_ = 0;
  double L_ = 0.0;
  std::vector<double> cells_;
};

// xi+ = (m_i xi + m_j |xi| sigma)/(m_i+m_j), xi- = xi - xi+ (sum exact).
std::pair<Vec3, Vec3> xi_split(const Vec3& xi, const Vec3& sigma, double m_i, double m_j);

// ---- collision-operator identities ------------------------------------------------

struct SphereRule {
  int theta_panels = 6;
  int theta_order = 8;
  int nphi = 16;
};

// F(Q+_ij(f,g))(xi) for the angle-only kernel b(cos t) = kappa t^(-1-s)/sin t
// truncated at eps: sphere quadrature of F(g)(xi-) F(f)(xi+) b.  Interpolation
// residual vs the exact transform is sampled at every 8th node when the
// source grids are supplied.
struct QplusResult {
  cplx value{};
  double quad_error = 0.0;
  double interp_residual = 0.0;
};
QplusResult qplus_fourier(const FourierField& fhat, const FourierField& ghat, double m_i,
                          double m_j, const PairKernel& k, double eps, const Vec3& xi,
                          const SphereRule& rule = {}, const GridDensity* fgrid = nullptr,
                          int fi = 0, const GridDensity* ggrid = nullptr, int gi = 0);

// Direct 6d + sphere quadrature of int int int B g(v*) f(v) e^{-i v'.xi}.
// Grids above 16^3 are refused (cost O(N^6 N_sigma)).
cplx qplus_direct(const GridDensity& f, int fi, const GridDensity& g, int gi, double m_i,
                  double m_j, const PairKernel& k, double eps, const Vec3& xi,
                  int theta_nodes = 48);

// Both sides of the Dirichlet-form identity
//   int b g(v*) (f(v') - f(v))^2  =  (2pi)^-3 int int b [ F(g)(0)|F(f)(xi)|^2
//     + F(g)(0)|F(f)(xi+)|^2 - 2 Re( F(g)(xi-) F(f)(xi+) conj F(f)(xi) ) ].
// The direct side integrates v over the 2x zero-extended box (v' can leave
// the base box); the kernel is angle-only (PairKernel lambda ignored).
struct DirichletResult {
  double direct = 0.0;
  double fourier = 0.0;
  double rel_gap = 0.0;
};
DirichletResult dirichlet_form(const GridDensity& f, int fi, const GridDensity& g, int gi,
                               double m_i, double m_j, const PairKernel& k, double eps,
                               const SphereRule& rule = {}, int fourier_pad = 4);

// Direct side alone (used by the coercivity check).
double dirichlet_direct(const GridDensity& f, int fi, const GridDensity& g, int gi,
                        double m_i, double m_j, const PairKernel& k, double eps,
                        const SphereRule& rule = {});

// Coercivity of the Dirichlet form:
//   lhs >= K_ij/(2pi)^3 int |F(f)(xi)|^2 (|xi|^2 ^ |xi|^s) dxi,
//   K_ij = (m_j/(m_i+m_j))^2 kappa/(2-s) C_g |S|,  |S| = 2 pi,
// with C_g the sampled infimum of (F(g)(0)-|F(g)(xi-)|)/(|xi-|^2 ^ 1).
struct CoercivityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double K_ij = 0.0;
  double C_g = 0.0;
  bool vacuous = false;  // degenerate g: C_g <= 0
  double slack = 0.0;
};
CoercivityResult coercivity_bound(const GridDensity& f, int fi, const GridDensity& g, int gi,
                                  double m_i, double m_j, const PairKernel& k, double eps,
                                  double lhs_direct, int pad = 4);

// Cancellation identity int int B (f(v') - f(v)) dv dsigma = (f * S_ij)(v*),
// S_ij(u) = |S| |u|^lambda int [beta^-(3+lambda)-1] sin t b dt; both sides by
// quadrature at one probe v*.
struct CancellationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_gap = 0.0;
};
CancellationResult cancellation_check(const GridDensity& f, int fi, double m_i, double m_j,
                                      const PairKernel& k, double eps, const Vec3& v_star,
                                      const SphereRule& rule = {});

// ---- norms and level energies ------------------------------------------------------

// || <v>^w f ||^2 weighted H^{s/2}: transform of the weighted density,
// integral of (1+|xi|^2)^{s/2} |.|^2 over the dual box, (2pi)^-3 normalized.
double weighted_sobolev(const GridDensity& grid, int i, double weight_exp, double s);

// L^p norm of <v>^w |f| (grid quadrature; p = inf -> max cell value).
double lp_norm(const GridDensity& grid, int i, double p, double weight_exp);
inline constexpr double kLpInf = -1.0;  // sentinel for p = infinity

// De Giorgi level energies. K_k = K(1-2^-k), t_k = t*(1-2^-(k+1)),
//   W_k = 1/2 sup_{t in [t_k,T]} ||f_k||_L2^2 + c_i int_{t_k}^T ||<v>^{wexp} f_k||^2_{H^{sexp}},
// f_k = (f - K_k)+ cellwise.  Times must cover [t*/2, T].
std::vector<double> level_energy_sequence(const std::vector<double>& times,
                                          const std::vector<GridDensity>& grids, int i,
                                          double K, double t_star, double c_i, int k_max,
                                          double weight_exp, double sobolev_exp);

}  // namespace mixkin
