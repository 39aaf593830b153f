#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mixkin/collision.hpp"
#include "mixkin/mixture.hpp"
#include "mixkin/quadrature.hpp"
#include "mixkin/vec3.hpp"

namespace mixkin {

// One (i,j) entry of the kernel matrix.
struct PairKernel {
  double lambda = 1.0;
  double s = 1.0;
  double kappa = 1.0;
};

inline PairKernel pair_kernel(const KernelMatrix& k, int i, int j) {
  return {k.lam(i, j), k.sij(i, j), k.kap(i, j)};
}

// ---- moment table ------------------------------------------------------------

class MomentTable {
 public:
  std::vector<double> times;
  std::vector<double> orders;  // ascending, unique
  int n_species = 0;
  // values[t][i][k] = m_{orders[k], i}(times[t])
  std::vector<std::vector<std::vector<double>>> values;

  int order_index(double k, double tol = 1e-9) const;
  // throws std::out_of_range when the order is not stored
  double at(std::size_t t, int i, double order) const;
  double cumulative(std::size_t t, double order) const;

  // moment order grid: even integers 0..2*pmax plus the shifted orders
  // 2n + lambda_ij required by the series machinery
  static std::vector<double> order_grid(const KernelMatrix& k, int pmax);

  void write_csv(const std::string& path) const;
  static MomentTable read_csv(const std::string& path);
};

// ---- Povzner inequality --------------------------------------------------------

// lambda^1_ij = kappa/(2-s) * m_i m_j (m_i^2+m_j^2+m_i m_j)/(m_i+m_j)^4
double povzner_lambda1(double m_i, double m_j, const PairKernel& k);

// Exact multinomial count Z_{n,a} = sum_{r+t<=min(a,n-a)} n!/((a-r-t)!(n-a-r-t)!(2r)!(t!)^2)
double povzner_multinomial_z(int n, int a);

// Certified weight of the (a, n-a) moment pair in the Povzner upper bound:
//   W_{n,a} = 2 pi Z_{n,a} kappa C^{-s/2} B(a+1, n-a-s/2),  C = (m_i+m_j)^2/(m_i m_j).
double povzner_pair_weight(int n, int a, double m_i, double m_j, const PairKernel& k);

// Display constant: smallest lambda2 such that the certified weights are
// dominated by lambda2 * binom(n,a) (n^{s/2}/(n-a)^{s/2+1} + 1/a).
double povzner_lambda2(int n, double m_i, double m_j, const PairKernel& k);

// Angular average of the bracket-power exchange,
//   int_0^{pi/2} int_0^{2pi} (<v'>_i^{2n} + <v*'>_j^{2n} - <v>_i^{2n} - <v*>_j^{2n})
//       dphi beta_ij(t) dt,
// for the full non-cutoff kernel: graded quadrature on [eps, pi/2] plus the
// Richardson-extrapolated t^2 tail on [0, eps].
QuadResult povzner_lhs(const Vec3& v, const Vec3& v_star, double m_i, double m_j, int n,
                       const PairKernel& k, double eps);

// Analytic right-hand side: -lambda1 n^{s/2}(<v>^{2n}+<v*>^{2n}) plus the
// certified pair-weight sum.
double povzner_rhs(const Vec3& v, const Vec3& v_star, double m_i, double m_j, int n,
                   const PairKernel& k);

// Beta-integral bound of the grazing moment weights (exact via log-Gamma):
//   K = B(a+1, n-a-s/2),  L = (2/pi)^s B(n-a+1, a).
struct GammaMomentWeights {
  double K = 0.0;
  double L = 0.0;
};
GammaMomentWeights gamma_moment_weights(double s, int n, int a);

// ---- moment ODE system ---------------------------------------------------------

// Right side of the per-pair moment inequality at one stored time:
//   -C1 n^{s/2} (m_{2n+lam,i} + m_{2n+lam,j}) + C2 * S_n^{ij},
//   S_n^{ij} = sum_{a=1}^{floor(n/2)} binom(n,a) n^{s/2}/a^{s/2+1}
//              (m_{2a,j} m_{2(n-a)+lam,i} + m_{2a,i} m_{2(n-a)+lam,j}).
double momlem_rhs(const MomentTable& table, std::size_t t_idx, int n, int i, int j,
                  double C1, double C2, const KernelMatrix& kernel);

// Mixed interpolation factor theta = beta/(b+beta-a), b >= a >= 0, beta > 0.
double interp_mixed(double a, double b, double beta);

// Companion checker:  m_{a+beta,i}[f] m_{b,j}[g]
//   <= theta m_{b+beta,i}[f] m_{a,j}[g] + (1-theta) m_{b+beta,j}[g] m_{a,i}[f].
// moment_f / moment_g evaluate m_k of the two measures; returns rhs - lhs.
double interp_mixed_slack(double a, double b, double beta,
                          const std::function<double(double)>& moment_f,
                          const std::function<double(double)>& moment_g);

// x' = -A x^(1+c) + B, x(0) = x0
struct BernoulliODE {
  double A = 1.0, B = 1.0, c = 1.0, x0 = 0.0;
};

// Super solution (B/A)^(1/(1+c)) + (1/(cA))^(1/c) t^(-1/c), t > 0.
double super_solution(const BernoulliODE& ode, double t);

// Propagation bound max{x0, (B/A)^(1/(1+c))}.
double propagation_bound(const BernoulliODE& ode);

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
};

// RK4 oracle for the comparison principle; throws on step blowup.
Trajectory integrate_bernoulli(const BernoulliODE& ode, double T, double dt);

// ---- exponential moment series --------------------------------------------------

enum class SeriesVariant { generation, propagation };

// Truncated series of the moment table at one stored time.  Generation
// weights (sigma t)^{2n/lambda_nat}; propagation weights sigma^{2n/lambda_nat}.
//   E   = sum_{n<=p} w_n m_{2n} / (n!)^alpha            (cumulative)
//   E_i = per-species version
//   F[i][j] = sum_{2<=n<=p} n^{s_ij/2} w_n m_{2n+lam_ij,i} / (n!)^alpha
//   G[i][j] = sum_{2<=n<=p} w_n S_n^{ij} / (n!)^alpha
//   H[i] = sum_{n<=p} n w'_n m_{2n,i} / (n!)^alpha, w'_n the weight with one
//          power of (sigma t) (resp. sigma) removed.
// All terms assembled in log space; `overflow` marks sums beyond double range.
struct ExpSeries {
  double sigma = 0.0, alpha = 1.0, t = 0.0;
  int p = 0;
  SeriesVariant variant = SeriesVariant::generation;
  double E = 0.0;
  std::vector<double> E_i;
  std::vector<double> F;  // row-major I*I
  std::vector<double> G;
  std::vector<double> H;
  bool overflow = false;

  double f(int i, int j, int nsp) const { return F[i * nsp + j]; }
  double g(int i, int j, int nsp) const { return G[i * nsp + j]; }
};

ExpSeries exp_series(const MomentTable& table, std::size_t t_idx, double sigma, double alpha,
                     int p, SeriesVariant variant, const KernelMatrix& kernel,
                     double lambda_natural);

// Algebraic lower bound of the propagation series (hard check):
//   P^{ ij} + P^{ji} >= sigma^{-lam_nat/2} (E^i + E^j - 2 e max(m0_i, m0_j)).
struct Prop2Result {
  double lhs = 0.0, rhs = 0.0, slack = 0.0;
  bool pass = false;
};
Prop2Result prop2_check(const ExpSeries& prop_series, int i, int j, double m0_i, double m0_j,
                        double lambda_natural, int n_species);

// ---- equivalence lemmas ----------------------------------------------------------

// moment_of(k, i) must return m_{k,i} of the measure (fractional k allowed).
struct ExpEquivalenceI {
  double lhs_sup = 0.0;     // sup_n sigma0^n m_{2n}/(n!)^alpha
  double exp_integral = 0.0;
  double bound = 0.0;       // 2 m0^{1-1/alpha} K^{1/alpha}
  bool premise = false;     // lhs_sup <= K
  bool implication_ok = false;
};
ExpEquivalenceI exp_equivalence_i(const std::function<double(double, int)>& moment_of,
                                  int n_species, double sigma0, double alpha, double K);

// sigma1 = (1/2) inf_{1<=n<=1000} I sigma0^{2/rho+1} (rho/4)^{2/rho} / (K A)^{1/n},
// A the exact sup over n <= 1000 of k_n!/((n!)^{2/rho} (4/rho)^{2n/rho}),
// k_n = ceil(2n/rho); both ratios via log-Gamma.  The summand ratio is
// eventually decreasing in n (Stirling tail), so the finite scan certifies it.
double exp_equivalence_ii_sigma1(double rho, double sigma0, double K, int n_species);

// Sobolev-interpolation exponents q = 2(1+s/(d alpha)), theta = d/(s+d alpha);
// requires alpha in [1-s/d, 1].
struct SobolevExponents {
  double q = 0.0;
  double theta = 0.0;
};
SobolevExponents sobolev_interp_exponents(int d, double s, double alpha);

// Measured constant of int |v-z|^lambda f(z) dz >= c <v>_m^lambda: infimum of
// the ratio over a probe set (particle extremes, random probes, far field).
double estimate_lower_mass_constant(const std::vector<Vec3>& velocities, double weight,
                                    double lambda, double bracket_mass,
                                    const std::vector<Vec3>& probes);

}  // namespace mixkin
