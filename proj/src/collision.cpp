#include "mixkin/collision.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixkin {

ScatteringFrame make_frame(const Vec3& X) {
  ScatteringFrame fr;
  fr.X = X;
  double r = norm(X);
  if (r == 0.0) return fr;  // I(0) = J(0) = 0
  Vec3 xhat = X * (1.0 / r);
  double ax = std::fabs(xhat.x), ay = std::fabs(xhat.y), az = std::fabs(xhat.z);
  Vec3 e{1, 0, 0};
  if (ay < ax || az < ax) e = (ay <= az) ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  Vec3 i = e - dot(e, xhat) * xhat;
  i = i * (1.0 / norm(i));
  Vec3 j = cross(xhat, i);
  fr.I = i * r;
  fr.J = j * r;
  return fr;
}

Vec3 gamma(const ScatteringFrame& fr, double phi) {
  return std::cos(phi) * fr.I + std::sin(phi) * fr.J;
}

Vec3 gamma(const Vec3& X, double phi) { return gamma(make_frame(X), phi); }

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, double m_i,
                                     double m_j, const Vec3& sigma) {
  double msum = m_i + m_j;
  Vec3 center = (m_i * v + m_j * v_star) * (1.0 / msum);
  double r = norm(v - v_star);
  return {center + (m_j / msum) * r * sigma, center - (m_i / msum) * r * sigma};
}

double sample_angle(double s, double eps, double u01) {
  double a = std::pow(eps, -s);
  double b = std::pow(0.5 * kPi, -s);
  return std::pow(a - u01 * (a - b), -1.0 / s);
}

double jacobian_beta(double x, double alpha) {
  return std::sqrt(alpha * alpha + (1.0 - alpha) * (1.0 - alpha) +
                   2.0 * alpha * (1.0 - alpha) * x);
}

QuadResult cancellation_angular_integral(double lambda, double s, double kappa, double m_i,
                                         double m_j, double eps) {
  double alpha = m_i / (m_i + m_j);
  // integrand in theta: [beta(cos t)^-(3+lambda) - 1] * beta_kernel(t),
  // beta_kernel(t) = sin t * b(cos t) = kappa t^(-1-s)
  auto f = [&](double t) {
    double bt = jacobian_beta(std::cos(t), alpha);
    return (std::pow(bt, -(3.0 + lambda)) - 1.0) * kappa * std::pow(t, -1.0 - s);
  };
  QuadResult q = adaptive_simpson(f, eps, 0.5 * kPi, 1e-12, 1e-10);
  if (!q.converged) {
    throw std::runtime_error("cancellation_angular_integral: quadrature did not converge, "
                             "achieved abs error " + std::to_string(q.error));
  }
  return q;
}

AngularTables::AngularTables(const MixtureConfig& cfg, double eps) {
  n_ = cfg.n_species();
  table_.resize(n_ * n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const double lam = cfg.kernel.lam(i, j);
      const double s = cfg.kernel.sij(i, j);
      const double kap = cfg.kernel.kap(i, j);
      AngularTable t;
      t.eps = eps;
      t.beta_l1 = kap * (std::pow(eps, -s) - std::pow(0.5 * kPi, -s)) / s;
      t.b_l1_sphere = kSphereAzimuth * t.beta_l1;
      t.theta2_beta_l1 =
          kap * (std::pow(0.5 * kPi, 2.0 - s) - std::pow(eps, 2.0 - s)) / (2.0 - s);
      QuadResult q = cancellation_angular_integral(lam, s, kap, cfg.mass(i), cfg.mass(j), eps);
      t.canc_integral = q.value;
      t.canc_error = q.error;
      table_[i * n_ + j] = t;
    }
  }
}

double cancellation_kernel(double u_norm, int i, int j, const MixtureConfig& cfg,
                           const AngularTables& tables) {
  if (u_norm < 0.0) throw std::invalid_argument("cancellation_kernel: |u| must be >= 0");
  const double lam = cfg.kernel.lam(i, j);
  return kSphereAzimuth * std::pow(u_norm, lam) * tables.at(i, j).canc_integral;
}

}  // namespace mixkin
