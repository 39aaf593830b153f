#include "mixkin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "mixkin/log.hpp"
#include "mixkin/quadrature.hpp"

namespace mixkin {

// ---- GridDensity ---------------------------------------------------------------

double GridDensity::sample(int i, const Vec3& v) const {
  const Species& sp = species[i];
  if (sp.evaluator) return sp.evaluator(v);
  const double hh = h();
  double gx = (v.x + L) / hh - 0.5;
  double gy = (v.y + L) / hh - 0.5;
  double gz = (v.z + L) / hh - 0.5;
  int ix = static_cast<int>(std::floor(gx));
  int iy = static_cast<int>(std::floor(gy));
  int iz = static_cast<int>(std::floor(gz));
  double fx = gx - ix, fy = gy - iy, fz = gz - iz;
  double acc = 0.0;
  for (int dx = 0; dx <= 1; ++dx) {
    int jx = ix + dx;
    if (jx < 0 || jx >= n) continue;
    double wx = dx ? fx : 1.0 - fx;
    for (int dy = 0; dy <= 1; ++dy) {
      int jy = iy + dy;
      if (jy < 0 || jy >= n) continue;
      double wy = dy ? fy : 1.0 - fy;
      for (int dz = 0; dz <= 1; ++dz) {
        int jz = iz + dz;
        if (jz < 0 || jz >= n) continue;
        double wz = dz ? fz : 1.0 - fz;
        acc += wx * wy * wz * value(i, jx, jy, jz);
      }
    }
  }
  return acc;
}

double GridDensity::species_mass(int i) const {
  double s = 0.0;
  for (double v : species[i].values) s += v;
  return s * cellvol();
}

void GridDensity::update_support_radii() {
  for (auto& sp : species) {
    double mx = 0.0;
    for (double v : sp.values) mx = std::max(mx, std::fabs(v));
    double r = 0.0;
    std::size_t idx = 0;
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        for (int iz = 0; iz < n; ++iz, ++idx)
          if (std::fabs(sp.values[idx]) > 1e-12 * mx) r = std::max(r, norm(center(ix, iy, iz)));
    sp.support_radius = r + h();
  }
}

GridDensity synthetic_density(int n, double L,
                              const std::vector<std::vector<GaussianBlob>>& blobs,
                              const std::vector<double>& mass_tags) {
  GridDensity g;
  g.n = n;
  g.L = L;
  g.species.resize(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    auto bl = blobs[i];
    g.species[i].mass_tag = mass_tags.at(i);
    g.species[i].evaluator = [bl](const Vec3& v) {
      double acc = 0.0;
      for (const GaussianBlob& b : bl) {
        double c = b.mass / std::pow(2.0 * kPi * b.sigma * b.sigma, 1.5);
        acc += c * std::exp(-0.5 * norm2(v - b.center) / (b.sigma * b.sigma));
      }
      return acc;
    };
    g.species[i].values.resize(static_cast<std::size_t>(n) * n * n);
    std::size_t idx = 0;
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        for (int iz = 0; iz < n; ++iz, ++idx)
          g.species[i].values[idx] = g.species[i].evaluator(g.center(ix, iy, iz));
  }
  g.update_support_radii();
  return g;
}

GridDensity grid_project(const ParticleEnsemble& ens, int n, double L) {
  GridDensity g;
  g.n = n;
  g.L = L;
  g.species.resize(ens.n_species());
  const double h = g.h();
  const double inv_vol = 1.0 / g.cellvol();
  for (int i = 0; i < ens.n_species(); ++i) {
    auto& sp = g.species[i];
    sp.mass_tag = ens.species[i].particle_mass;
    sp.values.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    double lost = 0.0;
    for (const Vec3& v : ens.species[i].v) {
      double gx = (v.x + L) / h - 0.5;
      double gy = (v.y + L) / h - 0.5;
      double gz = (v.z + L) / h - 0.5;
      int ix = static_cast<int>(std::floor(gx));
      int iy = static_cast<int>(std::floor(gy));
      int iz = static_cast<int>(std::floor(gz));
      double fx = gx - ix, fy = gy - iy, fz = gz - iz;
      double put = 0.0;
      for (int dx = 0; dx <= 1; ++dx) {
        int jx = ix + dx;
        if (jx < 0 || jx >= n) continue;
        double wx = dx ? fx : 1.0 - fx;
        for (int dy = 0; dy <= 1; ++dy) {
          int jy = iy + dy;
          if (jy < 0 || jy >= n) continue;
          double wy = dy ? fy : 1.0 - fy;
          for (int dz = 0; dz <= 1; ++dz) {
            int jz = iz + dz;
            if (jz < 0 || jz >= n) continue;
            double wz = dz ? fz : 1.0 - fz;
            double share = wx * wy * wz;
            sp.values[(static_cast<std::size_t>(jx) * n + jy) * n + jz] +=
                ens.weight * share * inv_vol;
            put += share;
          }
        }
      }
      lost += ens.weight * (1.0 - put);
    }
    sp.out_of_box = lost;
    double mass = ens.weight * static_cast<double>(ens.species[i].v.size());
    if (lost > 1e-3 * mass)
      logging::warn("grid_project: species " + std::to_string(i + 1) + " lost " +
                    std::to_string(100.0 * lost / mass) + "% of mass outside the box");
  }
  g.update_support_radii();
  return g;
}

double moment(const GridDensity& grid, double k, int i) {
  const auto& sp = grid.species[i];
  double acc = 0.0;
  std::size_t idx = 0;
  for (int ix = 0; ix < grid.n; ++ix)
    for (int iy = 0; iy < grid.n; ++iy)
      for (int iz = 0; iz < grid.n; ++iz, ++idx)
        acc += sp.values[idx] *
               std::pow(1.0 + sp.mass_tag * norm2(grid.center(ix, iy, iz)), 0.5 * k);
  return acc * grid.cellvol();
}

EntropyEstimate entropy_estimate(const GridDensity& grid) {
  EntropyEstimate e;
  const double vol = grid.cellvol();
  for (const auto& sp : grid.species) {
    for (double f : sp.values) {
      if (f < 0.0) throw std::invalid_argument("entropy_estimate: negative cell value");
      if (f > 0.0) e.H += f * std::log(f) * vol;
      e.LlogL += f * std::log1p(f) * vol;
    }
  }
  return e;
}

// ---- transforms -----------------------------------------------------------------

cplx nudft(const GridDensity& grid, int i, const Vec3& xi) {
  const auto& sp = grid.species[i];
  cplx acc{};
  std::size_t idx = 0;
  for (int ix = 0; ix < grid.n; ++ix)
    for (int iy = 0; iy < grid.n; ++iy)
      for (int iz = 0; iz < grid.n; ++iz, ++idx) {
        if (sp.values[idx] == 0.0) continue;
        double ph = -dot(grid.center(ix, iy, iz), xi);
        acc += sp.values[idx] * cplx{std::cos(ph), std::sin(ph)};
      }
  return acc * grid.cellvol();
}

namespace {

std::mutex g_fftw_mutex;

// Centered continuum transform on the dual grid xi_k = pi k / L,
// k in [-n/2, n/2)^3 (storage index k + n/2):
//   F[k] = h^3 sum_c f_c exp(-i v_c . xi_k),  v_c = -L + (c+0.5) h.
std::vector<cplx> dft3_centered(const std::vector<double>& vals, int n, double L) {
  std::size_t total = static_cast<std::size_t>(n) * n * n;
  std::vector<cplx> in(total), out(total);
  for (std::size_t c = 0; c < total; ++c) in[c] = vals[c];
  {
    std::lock_guard<std::mutex> lk(g_fftw_mutex);
    fftw_plan plan = fftw_plan_dft_3d(n, n, n, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  // axis phase: exp(-i v_c xi_k) = e^{i pi k} e^{-i pi k/n} e^{-2 pi i k c/n}
  std::vector<cplx> phase(n);
  for (int k = -n / 2; k < n / 2; ++k) {
    double a = -kPi * k / n;
    cplx p{std::cos(a), std::sin(a)};
    if (k & 1) p = -p;
    phase[k + n / 2] = p;
  }
  double h = 2.0 * L / n;
  double h3 = h * h * h;
  std::vector<cplx> shifted(total);
  for (int kx = -n / 2; kx < n / 2; ++kx) {
    int mx = (kx + n) % n;
    for (int ky = -n / 2; ky < n / 2; ++ky) {
      int my = (ky + n) % n;
      for (int kz = -n / 2; kz < n / 2; ++kz) {
        int mz = (kz + n) % n;
        cplx v = out[(static_cast<std::size_t>(mx) * n + my) * n + mz];
        shifted[(static_cast<std::size_t>(kx + n / 2) * n + (ky + n / 2)) * n +
                (kz + n / 2)] =
            h3 * phase[kx + n / 2] * phase[ky + n / 2] * phase[kz + n / 2] * v;
      }
    }
  }
  return shifted;
}

}  // namespace

FourierField FourierField::build(const GridDensity& grid, int species, int pad) {
  FourierField f;
  const int n = grid.n;
  const int np = pad * n;
  f.modes_ = np;
  f.dxi_ = kPi / (pad * grid.L);
  std::vector<double> padded(static_cast<std::size_t>(np) * np * np, 0.0);
  const int off = (pad - 1) * n / 2;
  std::size_t idx = 0;
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz, ++idx)
        padded[(static_cast<std::size_t>(ix + off) * np + (iy + off)) * np + (iz + off)] =
            grid.species[species].values[idx];
  f.vals_ = dft3_centered(padded, np, pad * grid.L);
  return f;
}

FourierField FourierField::exact(const GridDensity& grid, int species) {
  FourierField f;
  f.exact_ = true;
  f.n_ = grid.n;
  f.L_ = grid.L;
  f.dxi_ = kPi / grid.L;
  f.modes_ = grid.n;
  f.cells_ = grid.species[species].values;
  return f;
}

cplx FourierField::at_mode(int kx, int ky, int kz) const {
  if (exact_) return lookup({kx * dxi_, ky * dxi_, kz * dxi_});
  return vals_[(static_cast<std::size_t>(kx + modes_ / 2) * modes_ + (ky + modes_ / 2)) *
                   modes_ +
               (kz + modes_ / 2)];
}

cplx FourierField::lookup(const Vec3& xi) const {
  if (exact_) {
    const double h = 2.0 * L_ / n_;
    cplx acc{};
    std::size_t idx = 0;
    for (int ix = 0; ix < n_; ++ix)
      for (int iy = 0; iy < n_; ++iy)
        for (int iz = 0; iz < n_; ++iz, ++idx) {
          if (cells_[idx] == 0.0) continue;
          Vec3 vc{-L_ + (ix + 0.5) * h, -L_ + (iy + 0.5) * h, -L_ + (iz + 0.5) * h};
          double ph = -dot(vc, xi);
          acc += cells_[idx] * cplx{std::cos(ph), std::sin(ph)};
        }
    return acc * (h * h * h);
  }
  double ux = xi.x / dxi_ + 0.5 * modes_;
  double uy = xi.y / dxi_ + 0.5 * modes_;
  double uz = xi.z / dxi_ + 0.5 * modes_;
  int ix = static_cast<int>(std::floor(ux));
  int iy = static_cast<int>(std::floor(uy));
  int iz = static_cast<int>(std::floor(uz));
  double fx = ux - ix, fy = uy - iy, fz = uz - iz;
  cplx acc{};
  for (int dx = 0; dx <= 1; ++dx) {
    int jx = ix + dx;
    if (jx < 0 || jx >= modes_) continue;
    double wx = dx ? fx : 1.0 - fx;
    for (int dy = 0; dy <= 1; ++dy) {
      int jy = iy + dy;
      if (jy < 0 || jy >= modes_) continue;
      double wy = dy ? fy : 1.0 - fy;
      for (int dz = 0; dz <= 1; ++dz) {
        int jz = iz + dz;
        if (jz < 0 || jz >= modes_) continue;
        double wz = dz ? fz : 1.0 - fz;
        acc += wx * wy * wz *
               vals_[(static_cast<std::size_t>(jx) * modes_ + jy) * modes_ + jz];
      }
    }
  }
  return acc;
}

std::pair<Vec3, Vec3> xi_split(const Vec3& xi, const Vec3& sigma, double m_i, double m_j) {
  double msum = m_i + m_j;
  Vec3 plus = (m_i / msum) * xi + (m_j / msum) * norm(xi) * sigma;
  return {plus, xi - plus};
}

// ---- sphere quadrature helper ------------------------------------------------------

namespace {

struct SphereNodes {
  std::vector<double> theta, wbeta;  // graded Gauss nodes, weights * beta(theta)
  std::vector<double> cphi, sphi;    // azimuth trapezoid
  double wphi = 0.0;
};

SphereNodes sphere_nodes(const PairKernel& k, double eps, const SphereRule& rule) {
  SphereNodes sn;
  double ratio = std::pow(0.5 * kPi / eps, 1.0 / rule.theta_panels);
  const GaussRule& g = gauss_legendre(rule.theta_order);
  double lo = eps;
  for (int p = 0; p < rule.theta_panels; ++p) {
    double hi = (p + 1 == rule.theta_panels) ? 0.5 * kPi : lo * ratio;
    double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (int q = 0; q < rule.theta_order; ++q) {
      double t = c + h * g.node[q];
      sn.theta.push_back(t);
      sn.wbeta.push_back(h * g.weight[q] * k.kappa * std::pow(t, -1.0 - k.s));
    }
    lo = hi;
  }
  sn.wphi = 2.0 * kPi / rule.nphi;
  for (int q = 0; q < rule.nphi; ++q) {
    double phi = 2.0 * kPi * q / rule.nphi;
    sn.cphi.push_back(std::cos(phi));
    sn.sphi.push_back(std::sin(phi));
  }
  return sn;
}

double beta_l1_truncated(const PairKernel& k, double eps) {
  return k.kappa * (std::pow(eps, -k.s) - std::pow(0.5 * kPi, -k.s)) / k.s;
}

}  // namespace

// ---- Q+ identities ------------------------------------------------------------------

QplusResult qplus_fourier(const FourierField& fhat, const FourierField& ghat, double m_i,
                          double m_j, const PairKernel& k, double eps, const Vec3& xi,
                          const SphereRule& rule, const GridDensity* fgrid, int fi,
                          const GridDensity* ggrid, int gi) {
  Vec3 xhat = norm(xi) > 0.0 ? xi * (1.0 / norm(xi)) : Vec3{0, 0, 1};
  ScatteringFrame fr = make_frame(xhat);

  auto evaluate = [&](const SphereRule& r, bool probe_residual, double* residual) {
    SphereNodes sn = sphere_nodes(k, eps, r);
    cplx acc{};
    int node = 0;
    for (std::size_t it = 0; it < sn.theta.size(); ++it) {
      double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
      for (std::size_t ip = 0; ip < sn.cphi.size(); ++ip, ++node) {
        Vec3 sigma = ct * xhat + st * (sn.cphi[ip] * (fr.I) + sn.sphi[ip] * (fr.J));
        auto [xp, xm] = xi_split(xi, sigma, m_i, m_j);
        cplx fv = fhat.lookup(xp);
        cplx gv = ghat.lookup(xm);
        acc += sn.wbeta[it] * sn.wphi * gv * fv;
        if (probe_residual && fgrid && ggrid && node % 8 == 0) {
          cplx fe = nudft(*fgrid, fi, xp);
          cplx ge = nudft(*ggrid, gi, xm);
          double scale = std::abs(fe * ge) + 1e-300;
          *residual = std::max(*residual, std::abs(fv * gv - fe * ge) / scale);
        }
      }
    }
    return acc;
  };

  QplusResult r;
  r.value = evaluate(rule, fgrid != nullptr, &r.interp_residual);
  SphereRule coarse = rule;
  coarse.theta_order = std::max(2, rule.theta_order / 2);
  cplx v2 = evaluate(coarse, false, nullptr);
  r.quad_error = std::abs(r.value - v2);
  return r;
}

cplx qplus_direct(const GridDensity& f, int fi, const GridDensity& g, int gi, double m_i,
                  double m_j, const PairKernel& k, double eps, const Vec3& xi,
                  int theta_nodes) {
  if (f.n > 16 || g.n > 16)
    throw std::invalid_argument("qplus_direct: grids above 16^3 refused (O(N^6) cost); "
                                "use <= 16 cells per axis");
  const double msum = m_i + m_j;
  const double vol_f = f.cellvol(), vol_g = g.cellvol();

  // graded theta rule with weights * beta(theta)
  SphereRule tr{4, std::max(4, theta_nodes / 4), 1};
  SphereNodes sn = sphere_nodes(k, eps, tr);
  const double bl1_sphere = kSphereAzimuth * beta_l1_truncated(k, eps);

  double fmax = 0.0, gmax = 0.0;
  for (double v : f.species[fi].values) fmax = std::max(fmax, std::fabs(v));
  for (double v : g.species[gi].values) gmax = std::max(gmax, std::fabs(v));
  const double thresh = 1e-14 * fmax * gmax;

  cplx total{};
  std::size_t ia = 0;
  for (int ax = 0; ax < f.n; ++ax)
    for (int ay = 0; ay < f.n; ++ay)
      for (int az = 0; az < f.n; ++az, ++ia) {
        double fv = f.species[fi].values[ia];
        if (fv == 0.0) continue;
        Vec3 v = f.center(ax, ay, az);
        std::size_t ib = 0;
        for (int bx = 0; bx < g.n; ++bx)
          for (int by = 0; by < g.n; ++by)
            for (int bz = 0; bz < g.n; ++bz, ++ib) {
              double gv = g.species[gi].values[ib];
              if (std::fabs(fv * gv) < thresh) continue;
              Vec3 vs = g.center(bx, by, bz);
              Vec3 u = v - vs;
              double r = norm(u);
              Vec3 P = (m_i / msum) * v + (m_j / msum) * vs;
              double pphase = -dot(P, xi);
              cplx eP{std::cos(pphase), std::sin(pphase)};
              double speed = (k.lambda == 0.0) ? 1.0 : std::pow(r, k.lambda);
              cplx inner{};
              if (r == 0.0) {
                inner = bl1_sphere;
              } else {
                double Q = (m_j / msum) * r;
                Vec3 uhat = u * (1.0 / r);
                double z = dot(uhat, xi);
                Vec3 xperp = xi - z * uhat;
                double rp = norm(xperp);
                // azimuth integral = 2 pi J0(Q sin t |xi_perp|)
                for (std::size_t it = 0; it < sn.theta.size(); ++it) {
                  double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
                  double a = -Q * ct * z;
                  inner += sn.wbeta[it] * 2.0 * kPi * bessel_j0(Q * st * rp) *
                           cplx{std::cos(a), std::sin(a)};
                }
              }
              total += fv * gv * speed * eP * inner;
            }
      }
  return total * vol_f * vol_g;
}

// ---- Dirichlet form ------------------------------------------------------------------

double dirichlet_direct(const GridDensity& f, int fi, const GridDensity& g, int gi,
                        double m_i, double m_j, const PairKernel& k, double eps,
                        const SphereRule& rule) {
  const int n = f.n;
  const double h = f.h();
  const double msum = m_i + m_j;
  const double rf = f.species[fi].support_radius;
  SphereNodes sn = sphere_nodes(k, eps, rule);

  double gmax = 0.0;
  for (double v : g.species[gi].values) gmax = std::max(gmax, std::fabs(v));
  const double gthresh = 1e-13 * gmax;

  struct GCell {
    Vec3 v;
    double val;
  };
  std::vector<GCell> gcells;
  std::size_t ib = 0;
  for (int bx = 0; bx < g.n; ++bx)
    for (int by = 0; by < g.n; ++by)
      for (int bz = 0; bz < g.n; ++bz, ++ib)
        if (std::fabs(g.species[gi].values[ib]) > gthresh)
          gcells.push_back({g.center(bx, by, bz), g.species[gi].values[ib]});

  double total = 0.0;
  // v runs over the 2x zero-extended box: indices [-n/2, 3n/2)
  for (int ax = -n / 2; ax < n + n / 2; ++ax) {
    for (int ay = -n / 2; ay < n + n / 2; ++ay) {
      for (int az = -n / 2; az < n + n / 2; ++az) {
        Vec3 v{-f.L + (ax + 0.5) * h, -f.L + (ay + 0.5) * h, -f.L + (az + 0.5) * h};
        double fv = f.sample(fi, v);
        for (const GCell& gc : gcells) {
          Vec3 u = v - gc.v;
          double r = norm(u);
          if (r == 0.0) continue;  // v' = v for u = 0
          Vec3 P = (m_i / msum) * v + (m_j / msum) * gc.v;
          double Q = (m_j / msum) * r;
          if (fv == 0.0 && std::fabs(norm(P) - Q) > rf) continue;  // sphere misses supp f
          ScatteringFrame fr = make_frame(u * (1.0 / r));
          double acc = 0.0;
          for (std::size_t it = 0; it < sn.theta.size(); ++it) {
            double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
            for (std::size_t ip = 0; ip < sn.cphi.size(); ++ip) {
              Vec3 sigma = ct * fr.X + st * (sn.cphi[ip] * fr.I + sn.sphi[ip] * fr.J);
              double d = f.sample(fi, P + Q * sigma) - fv;
              acc += sn.wbeta[it] * sn.wphi * d * d;
            }
          }
          total += gc.val * acc;
        }
      }
    }
  }
  return total * f.cellvol() * g.cellvol();
}

namespace {

double dirichlet_fourier(const GridDensity& f, int fi, const GridDensity& g, int gi,
                         double m_i, double m_j, const PairKernel& k, double eps,
                         const SphereRule& rule, int pad) {
  FourierField fhat = FourierField::build(f, fi, pad);
  FourierField ghat = FourierField::build(g, gi, pad);
  const double g0 = g.species_mass(gi);
  const double bl1_sphere = kSphereAzimuth * beta_l1_truncated(k, eps);
  SphereNodes sn = sphere_nodes(k, eps, rule);
  const int np = fhat.modes();
  const double dxi = fhat.mode_spacing();
  const double dxi3 = dxi * dxi * dxi;

  // |F(f)|^2 integral and decay radius
  double f2_integral = 0.0;
  double f2max = 0.0;
  for (int kx = -np / 2; kx < np / 2; ++kx)
    for (int ky = -np / 2; ky < np / 2; ++ky)
      for (int kz = -np / 2; kz < np / 2; ++kz)
        f2max = std::max(f2max, std::norm(fhat.at_mode(kx, ky, kz)));
  double cut_r = 0.0;
  for (int kx = -np / 2; kx < np / 2; ++kx)
    for (int ky = -np / 2; ky < np / 2; ++ky)
      for (int kz = -np / 2; kz < np / 2; ++kz) {
        double a2 = std::norm(fhat.at_mode(kx, ky, kz));
        f2_integral += a2;
        if (a2 > 1e-12 * f2max)
          cut_r = std::max(cut_r, dxi * std::sqrt(double(kx * kx + ky * ky + kz * kz)));
      }
  f2_integral *= dxi3;
  // term2 integrand sees F(f)(xi+) with |xi+| >= |xi|/sqrt(2)
  double xi_cut = std::min(std::sqrt(2.0) * cut_r + dxi, 0.5 * np * dxi * std::sqrt(3.0));

  double term23 = 0.0;
  for (int kx = -np / 2; kx < np / 2; ++kx) {
    for (int ky = -np / 2; ky < np / 2; ++ky) {
      for (int kz = -np / 2; kz < np / 2; ++kz) {
        Vec3 xi{kx * dxi, ky * dxi, kz * dxi};
        double xin = norm(xi);
        if (xin > xi_cut) continue;
        cplx fxi = fhat.at_mode(kx, ky, kz);
        Vec3 xhat = xin > 0.0 ? xi * (1.0 / xin) : Vec3{0, 0, 1};
        ScatteringFrame fr = make_frame(xhat);
        double acc = 0.0;
        for (std::size_t it = 0; it < sn.theta.size(); ++it) {
          double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
          for (std::size_t ip = 0; ip < sn.cphi.size(); ++ip) {
            Vec3 sigma = ct * xhat + st * (sn.cphi[ip] * fr.I + sn.sphi[ip] * fr.J);
            auto [xp, xm] = xi_split(xi, sigma, m_i, m_j);
            cplx fp = fhat.lookup(xp);
            cplx gm = ghat.lookup(xm);
            acc += sn.wbeta[it] * sn.wphi *
                   (g0 * std::norm(fp) - 2.0 * std::real(gm * fp * std::conj(fxi)));
          }
        }
        term23 += acc;
      }
    }
  }
  term23 *= dxi3;
  double inv2pi3 = 1.0 / std::pow(2.0 * kPi, 3);
  return inv2pi3 * (bl1_sphere * g0 * f2_integral + term23);
}

}  // namespace

DirichletResult dirichlet_form(const GridDensity& f, int fi, const GridDensity& g, int gi,
                               double m_i, double m_j, const PairKernel& k, double eps,
                               const SphereRule& rule, int fourier_pad) {
  DirichletResult r;
  r.direct = dirichlet_direct(f, fi, g, gi, m_i, m_j, k, eps, rule);
  r.fourier = dirichlet_fourier(f, fi, g, gi, m_i, m_j, k, eps, rule, fourier_pad);
  r.rel_gap = std::fabs(r.direct - r.fourier) / (std::fabs(r.direct) + 1e-12);
  return r;
}

CoercivityResult coercivity_bound(const GridDensity& f, int fi, const GridDensity& g, int gi,
                                  double m_i, double m_j, const PairKernel& k, double eps,
                                  double lhs_direct, int pad) {
  CoercivityResult r;
  r.lhs = lhs_direct;
  FourierField fhat = FourierField::build(f, fi, pad);
  FourierField ghat = FourierField::build(g, gi, pad);
  const double g0 = g.species_mass(gi);
  const int np = fhat.modes();
  const double dxi = fhat.mode_spacing();
  const double dxi3 = dxi * dxi * dxi;

  // C_g = inf (F(g)(0) - |F(g)(xi-)|)/(|xi-|^2 ^ 1) over a sigma/xi sample
  SphereRule srule{4, 4, 8};
  SphereNodes sn = sphere_nodes(k, eps, srule);
  double cg = 1e300;
  double f2max = 0.0;
  for (int kx = -np / 2; kx < np / 2; ++kx)
    for (int ky = -np / 2; ky < np / 2; ++ky)
      for (int kz = -np / 2; kz < np / 2; ++kz)
        f2max = std::max(f2max, std::norm(fhat.at_mode(kx, ky, kz)));
  for (int kx = -np / 2; kx < np / 2; kx += 2) {
    for (int ky = -np / 2; ky < np / 2; ky += 2) {
      for (int kz = -np / 2; kz < np / 2; kz += 2) {
        if (std::norm(fhat.at_mode(kx, ky, kz)) < 1e-12 * f2max) continue;
        Vec3 xi{kx * dxi, ky * dxi, kz * dxi};
        double xin = norm(xi);
        if (xin == 0.0) continue;
        Vec3 xhat = xi * (1.0 / xin);
        ScatteringFrame fr = make_frame(xhat);
        for (std::size_t it = 0; it < sn.theta.size(); ++it) {
          double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
          for (std::size_t ip = 0; ip < sn.cphi.size(); ++ip) {
            Vec3 sigma = ct * xhat + st * (sn.cphi[ip] * fr.I + sn.sphi[ip] * fr.J);
            auto [xp, xm] = xi_split(xi, sigma, m_i, m_j);
            (void)xp;
            double xmn2 = norm2(xm);
            if (xmn2 < 1e-12) continue;
            double ratio = (g0 - std::abs(ghat.lookup(xm))) / std::min(xmn2, 1.0);
            cg = std::min(cg, ratio);
          }
        }
      }
    }
  }
  r.C_g = (cg == 1e300) ? 0.0 : cg;
  if (r.C_g <= 1e-12 * g0) {
    r.vacuous = true;
    r.rhs = 0.0;
    r.slack = r.lhs;
    return r;
  }
  double cmass = m_j / (m_i + m_j);
  r.K_ij = cmass * cmass * k.kappa / (2.0 - k.s) * r.C_g * kSphereAzimuth;

  double integral = 0.0;
  for (int kx = -np / 2; kx < np / 2; ++kx)
    for (int ky = -np / 2; ky < np / 2; ++ky)
      for (int kz = -np / 2; kz < np / 2; ++kz) {
        Vec3 xi{kx * dxi, ky * dxi, kz * dxi};
        double xin2 = norm2(xi);
        double w = std::min(xin2, std::pow(xin2, 0.5 * k.s));
        integral += std::norm(fhat.at_mode(kx, ky, kz)) * w;
      }
  integral *= dxi3;
  r.rhs = r.K_ij / std::pow(2.0 * kPi, 3) * integral;
  r.slack = (r.lhs - r.rhs) / std::max(r.rhs, 1e-300);
  return r;
}

// ---- cancellation identity ---------------------------------------------------------

CancellationResult cancellation_check(const GridDensity& f, int fi, double m_i, double m_j,
                                      const PairKernel& k, double eps, const Vec3& v_star,
                                      const SphereRule& rule) {
  CancellationResult res;
  const int n = f.n;
  const double h = f.h();
  const double msum = m_i + m_j;
  const double rf = f.species[fi].support_radius;
  SphereNodes sn = sphere_nodes(k, eps, rule);
  const double bl1_sphere = kSphereAzimuth * beta_l1_truncated(k, eps);

  // lhs: int dv |u|^lambda [ sum_sigma w f(v') - f(v) ||b|| ]
  double lhs = 0.0;
  for (int ax = -n / 2; ax < n + n / 2; ++ax) {
    for (int ay = -n / 2; ay < n + n / 2; ++ay) {
      for (int az = -n / 2; az < n + n / 2; ++az) {
        Vec3 v{-f.L + (ax + 0.5) * h, -f.L + (ay + 0.5) * h, -f.L + (az + 0.5) * h};
        double fv = f.sample(fi, v);
        Vec3 u = v - v_star;
        double r = norm(u);
        if (r == 0.0) continue;
        Vec3 P = (m_i / msum) * v + (m_j / msum) * v_star;
        double Q = (m_j / msum) * r;
        if (fv == 0.0 && std::fabs(norm(P) - Q) > rf) continue;
        ScatteringFrame fr = make_frame(u * (1.0 / r));
        double gain = 0.0;
        for (std::size_t it = 0; it < sn.theta.size(); ++it) {
          double ct = std::cos(sn.theta[it]), st = std::sin(sn.theta[it]);
          for (std::size_t ip = 0; ip < sn.cphi.size(); ++ip) {
            Vec3 sigma = ct * fr.X + st * (sn.cphi[ip] * fr.I + sn.sphi[ip] * fr.J);
            gain += sn.wbeta[it] * sn.wphi * f.sample(fi, P + Q * sigma);
          }
        }
        lhs += std::pow(r, k.lambda) * (gain - fv * bl1_sphere);
      }
    }
  }
  res.lhs = lhs * f.cellvol();

  // rhs: (f * S_ij)(v*), S_ij(u) = |S| |u|^lambda * canc integral
  QuadResult canc = cancellation_angular_integral(k.lambda, k.s, k.kappa, m_i, m_j, eps);
  double Ru = rf + norm(v_star) + h;
  int nu = static_cast<int>(std::ceil(2.0 * Ru / (0.5 * h)));
  double hu = 2.0 * Ru / nu;
  double rhs = 0.0;
  for (int ux = 0; ux < nu; ++ux) {
    for (int uy = 0; uy < nu; ++uy) {
      for (int uz = 0; uz < nu; ++uz) {
        Vec3 u{-Ru + (ux + 0.5) * hu, -Ru + (uy + 0.5) * hu, -Ru + (uz + 0.5) * hu};
        double fv = f.sample(fi, v_star - u);
        if (fv == 0.0) continue;
        rhs += fv * std::pow(norm(u), k.lambda);
      }
    }
  }
  res.rhs = rhs * hu * hu * hu * kSphereAzimuth * canc.value;
  res.rel_gap = std::fabs(res.lhs - res.rhs) / (std::fabs(res.rhs) + 1e-12);
  return res;
}

// ---- norms -----------------------------------------------------------------------

double weighted_sobolev(const GridDensity& grid, int i, double weight_exp, double s) {
  const int n = grid.n;
  std::vector<double> weighted(static_cast<std::size_t>(n) * n * n);
  const double m = grid.species[i].mass_tag;
  std::size_t idx = 0;
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz, ++idx)
        weighted[idx] = grid.species[i].values[idx] *
                        std::pow(1.0 + m * norm2(grid.center(ix, iy, iz)), 0.5 * weight_exp);
  std::vector<cplx> hat = dft3_centered(weighted, n, grid.L);
  const double dxi = kPi / grid.L;
  double acc = 0.0;
  idx = 0;
  for (int kx = -n / 2; kx < n / 2; ++kx)
    for (int ky = -n / 2; ky < n / 2; ++ky)
      for (int kz = -n / 2; kz < n / 2; ++kz, ++idx) {
        double xi2 = dxi * dxi * (kx * kx + ky * ky + kz * kz);
        acc += std::pow(1.0 + xi2, 0.5 * s) * std::norm(hat[idx]);
      }
  return acc * dxi * dxi * dxi / std::pow(2.0 * kPi, 3);
}

double lp_norm(const GridDensity& grid, int i, double p, double weight_exp) {
  const auto& sp = grid.species[i];
  if (p == kLpInf) {
    double mx = 0.0;
    std::size_t idx = 0;
    for (int ix = 0; ix < grid.n; ++ix)
      for (int iy = 0; iy < grid.n; ++iy)
        for (int iz = 0; iz < grid.n; ++iz, ++idx)
          mx = std::max(mx, std::pow(1.0 + sp.mass_tag * norm2(grid.center(ix, iy, iz)),
                                     0.5 * weight_exp) *
                                std::fabs(sp.values[idx]));
    return mx;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
  double acc = 0.0;
  std::size_t idx = 0;
  for (int ix = 0; ix < grid.n; ++ix)
    for (int iy = 0; iy < grid.n; ++iy)
      for (int iz = 0; iz < grid.n; ++iz, ++idx)
        acc += std::pow(std::pow(1.0 + sp.mass_tag * norm2(grid.center(ix, iy, iz)),
                                 0.5 * weight_exp) *
                            std::fabs(sp.values[idx]),
                        p);
  return std::pow(acc * grid.cellvol(), 1.0 / p);
}

std::vector<double> level_energy_sequence(const std::vector<double>& times,
                                          const std::vector<GridDensity>& grids, int i,
                                          double K, double t_star, double c_i, int k_max,
                                          double weight_exp, double sobolev_exp) {
  if (times.size() != grids.size() || times.size() < 2)
    throw std::invalid_argument("level_energy_sequence: need matched times/grids, >= 2");
  if (times.front() > 0.5 * t_star + 1e-12)
    throw std::invalid_argument("level_energy_sequence: series must cover [t*/2, T]");
  std::vector<double> W;
  for (int k = 0; k <= k_max; ++k) {
    double Kk = K * (1.0 - std::pow(2.0, -k));
    double tk = t_star * (1.0 - std::pow(2.0, -(k + 1)));
    double sup_l2 = 0.0;
    std::vector<double> ts, sob;
    for (std::size_t q = 0; q < times.size(); ++q) {
      if (times[q] < tk - 1e-12) continue;
      GridDensity trunc;
      trunc.n = grids[q].n;
      trunc.L = grids[q].L;
      trunc.species.resize(1);
      trunc.species[0].mass_tag = grids[q].species[i].mass_tag;
      trunc.species[0].values.resize(grids[q].species[i].values.size());
      for (std::size_t c = 0; c < trunc.species[0].values.size(); ++c)
        trunc.species[0].values[c] = std::max(0.0, grids[q].species[i].values[c] - Kk);
      double l2 = lp_norm(trunc, 0, 2.0, 0.0);
      sup_l2 = std::max(sup_l2, l2 * l2);
      ts.push_back(times[q]);
      sob.push_back(weighted_sobolev(trunc, 0, weight_exp, sobolev_exp));
    }
    double integral = 0.0;
    for (std::size_t q = 1; q < ts.size(); ++q)
      integral += 0.5 * (sob[q] + sob[q - 1]) * (ts[q] - ts[q - 1]);
    W.push_back(0.5 * sup_l2 + c_i * integral);
  }
  return W;
}

}  // namespace mixkin
