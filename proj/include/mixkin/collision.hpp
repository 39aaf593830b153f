#pragma once

#include <utility>
#include <vector>

#include "mixkin/mixture.hpp"
#include "mixkin/quadrature.hpp"
#include "mixkin/vec3.hpp"

namespace mixkin {

inline constexpr double kPi = 3.14159265358979323846;
// Azimuth circle factor used wherever the sphere measure reduces to
// |S| int sin(t) b(cos t) dt; int_{S^2} dsigma = 2*pi int_0^pi sin(t) dt.
inline constexpr double kSphereAzimuth = 2.0 * kPi;

struct CollisionEvent {
  int i = 0, j = 0;        // species pair
  Vec3 v, v_star;          // pre-collision velocities
  Vec3 sigma;              // unit scattering direction
  double theta = 0.0;      // in (0, pi/2]
  double phi = 0.0;        // in [0, 2pi)
};

// Orthogonal frame attached to X: {X/|X|, I_X/|X|, J_X/|X|} orthonormal and
// right-handed for X != 0; I(0) = J(0) = 0.
struct ScatteringFrame {
  Vec3 X, I, J;
};

// Deterministic frame: Gram-Schmidt of the standard basis vector least
// aligned with X (smallest |component| of X, lowest index on ties).
ScatteringFrame make_frame(const Vec3& X);

// Gamma(X, phi) = cos(phi) I(X) + sin(phi) J(X); |Gamma| = |X|, Gamma.X = 0.
Vec3 gamma(const Vec3& X, double phi);
Vec3 gamma(const ScatteringFrame& fr, double phi);

// Elastic two-species collision transform,
//   v'  = (m_i v + m_j v*)/(m_i+m_j) + m_j/(m_i+m_j) |v-v*| sigma
//   v*' = (m_i v + m_j v*)/(m_i+m_j) - m_i/(m_i+m_j) |v-v*| sigma.
// Preserves m_i v + m_j v* and m_i|v|^2 + m_j|v*|^2 up to rounding.
std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, double m_i,
                                     double m_j, const Vec3& sigma);

// Inverse CDF of the density ~ t^(-1-s) on [eps, pi/2]:
//   F(t) = (eps^-s - t^-s) / (eps^-s - (pi/2)^-s),  theta = F^{-1}(u01).
double sample_angle(double s, double eps, double u01);

// Jacobian contraction of the v -> v' change of variables,
//   beta(x) = sqrt(alpha^2 + (1-alpha)^2 + 2 alpha (1-alpha) x),  alpha = m_i/(m_i+m_j).
double jacobian_beta(double x, double alpha);

// ---- precomputed per-pair angular integrals ---------------------------------

struct AngularTable {
  double eps = 0.0;
  double beta_l1 = 0.0;        // int_eps^{pi/2} beta(t) dt = kappa (eps^-s - (pi/2)^-s)/s
  double b_l1_sphere = 0.0;    // |S^2|-integrated total cross section = 2 pi beta_l1
  double theta2_beta_l1 = 0.0; // int t^2 beta(t) dt (momentum-transfer scale)
  double canc_integral = 0.0;  // int [beta(cos t)^-(3+lambda) - 1] sin t b(cos t) dt
  double canc_error = 0.0;     // quadrature error estimate of the above
};

// Tables for every (i,j) pair of the mixture, built once before a run.
class AngularTables {
 public:
  AngularTables() = default;
  AngularTables(const MixtureConfig& cfg, double eps);
  const AngularTable& at(int i, int j) const { return table_[i * n_ + j]; }
  int size() const { return n_; }

 private:
  int n_ = 0;
  std::vector<AngularTable> table_;
};

// Cancellation-lemma convolution kernel
//   S_ij(|u|) = |S| |u|^lambda_ij int_eps^{pi/2} [beta(cos t)^-(3+lambda) - 1] sin t b(cos t) dt,
// nonnegative since beta <= 1.  The angular factor is read from the table.
double cancellation_kernel(double u_norm, int i, int j, const MixtureConfig& cfg,
                           const AngularTables& tables);

// Angular factor alone, adaptive quadrature to abs+rel 1e-10 (throws on
// non-convergence, reporting the achieved tolerance).
QuadResult cancellation_angular_integral(double lambda, double s, double kappa, double m_i,
                                         double m_j, double eps);

}  // namespace mixkin
