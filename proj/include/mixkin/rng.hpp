#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mixkin {

// Counter-based random streams.  A stream is identified by a 64-bit key
// folded from (seed, tag words); draws advance a local counter only, so any
// number of streams can be created independently of evaluation order and the
// same (seed, tags) always reproduces the same sequence.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::initializer_list<std::uint64_t> parts) {
    key_ = 0x6A09E667F3BCC909ull;
    for (std::uint64_t p : parts) key_ = mix64(key_ ^ mix64(p));
  }

  std::uint64_t next_u64() { return mix64(key_ + 0x9E3779B97F4A7C15ull * (++ctr_)); }

  // uniform in [0,1)
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0,1]; safe as a log() argument
  double u01_open0() { return 1.0 - u01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = u01_open0();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Poisson sample; inversion for small means, Hormann's PTRD transformed
  // rejection for large ones.  Deterministic given the stream state.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t RngStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    double L = std::exp(-mean);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= u01_open0();
    } while (p > L);
    return k - 1;
  }
  // PTRD (Hormann 1993)
  const double mu = mean;
  const double smu = std::sqrt(mu);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double U = u01() - 0.5;
    double V = u01_open0();
    double us = 0.5 - std::fabs(U);
    double kf = std::floor((2.0 * a / us + b) * U + mu + 0.43);
    if (us >= 0.07 && V <= v_r) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && V > us)) continue;
    double k = kf;
    if (std::log(V * inv_alpha / (a / (us * us) + b)) <=
        k * std::log(mu) - mu - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(kf);
    }
  }
}

}  // namespace mixkin
