#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixkin/mixture.hpp"
#include "mixkin/rng.hpp"

using namespace mixkin;

namespace {

MixtureConfig demo_config() {
  return load_config_text(R"({
    "species": [
      {"mass": 1.0, "init": {"kind": "gaussian", "params": {"temperature": 1.0}}},
      {"mass": 3.0, "init": {"kind": "gaussian", "params": {"temperature": 2.0}}}
    ],
    "kernel": {
      "lambda": [[1.0, 1.0], [1.0, 1.0]],
      "s":      [[1.0, 1.0], [1.0, 1.0]],
      "kappa":  [[1.0, 1.0], [1.0, 1.0]]
    },
    "sim": {"dt": 1e-4, "t_end": 0.1, "n_particles": 1000, "angular_cutoff": 0.05, "seed": 7}
  })");
}

}  // namespace

TEST_CASE("normalize_masses basic cases") {
  CHECK(normalize_masses({1.0, 1.0}) == std::vector<double>{0.5, 0.5});
  auto r = normalize_masses({2.0, 3.0, 5.0});
  CHECK(r[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(r[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normalize_masses({7.0}) == std::vector<double>{1.0});
  CHECK_THROWS_WITH_AS(normalize_masses({1.0, -2.0}),
                       doctest::Contains("index 2"), std::invalid_argument);
  CHECK_THROWS_AS(normalize_masses({}), std::invalid_argument);
}

TEST_CASE("normalize_masses is idempotent and sums to one") {
  RngStream rng{42};
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng.u01() * 6);
    std::vector<double> raw(n);
    for (auto& m : raw) m = std::pow(10.0, 4.0 * rng.u01() - 2.0);
    auto once = normalize_masses(raw);
    auto twice = normalize_masses(once);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(std::fabs(once[i] - twice[i]) <= 1e-15);
      sum += once[i];
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-15);
  }
}

TEST_CASE("bracket values and monotonicity") {
  CHECK(bracket({0, 0, 0}, 0.3) == 1.0);
  CHECK(bracket({2, 0, 0}, 0.25) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(bracket({1, 1, 1}, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  RngStream rng{3};
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 v{4 * rng.u01() - 2, 4 * rng.u01() - 2, 4 * rng.u01() - 2};
    double m1 = rng.u01_open0();
    double m2 = m1 + (1.0 - m1) * rng.u01();
    CHECK(bracket(v, m1) >= 1.0);
    CHECK(bracket(v, m1) <= bracket(v, m2));
  }
}

TEST_CASE("derive_exponents constant matrix") {
  KernelMatrix k;
  k.size = 3;
  k.lambda.assign(9, 1.5);
  k.s.assign(9, 0.7);
  k.kappa.assign(9, 1.0);
  auto d = derive_exponents(k);
  CHECK(d.lambda_bar == 1.5);
  CHECK(d.lambda_dbar == 1.5);
  CHECK(d.lambda_natural == 1.5);
  CHECK(d.s_bar == 0.7);
  CHECK(d.s_natural == 0.7);
}

TEST_CASE("derive_exponents row min/max and natural value") {
  KernelMatrix k;
  k.size = 2;
  k.lambda = {1.0, 2.0, 2.0, 0.5};
  k.s = {0.5, 1.5, 1.5, 1.0};
  k.kappa.assign(4, 1.0);
  auto d = derive_exponents(k);
  CHECK(d.lambda_bar == 0.5);
  CHECK(d.lambda_dbar == 2.0);
  CHECK(d.lambda_natural == 2.0);  // min(max(1,2), max(2,0.5))
  CHECK(d.lambda_bar_i[0] == 1.0);
  CHECK(d.lambda_bar_i[1] == 0.5);
  CHECK(d.s_natural == 1.5);  // min(max(0.5,1.5), max(1.5,1.0))
}

TEST_CASE("derive_exponents invariant under species relabeling") {
  RngStream rng{99};
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.u01() * 3);
    KernelMatrix k;
    k.size = n;
    k.lambda.resize(n * n);
    k.s.resize(n * n);
    k.kappa.assign(n * n, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double lv = 0.1 + 1.9 * rng.u01();
        double sv = 0.1 + 1.8 * rng.u01();
        k.lambda[i * n + j] = k.lambda[j * n + i] = lv;
        k.s[i * n + j] = k.s[j * n + i] = sv;
      }
    // rotate species labels by one
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = (i + 1) % n;
    KernelMatrix kp = k;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        kp.lambda[i * n + j] = k.lambda[perm[i] * n + perm[j]];
        kp.s[i * n + j] = k.s[perm[i] * n + perm[j]];
      }
    auto d = derive_exponents(k);
    auto dp = derive_exponents(kp);
    CHECK(d.lambda_natural == dp.lambda_natural);
    CHECK(d.lambda_bar == dp.lambda_bar);
    CHECK(d.lambda_dbar == dp.lambda_dbar);
    CHECK(d.s_natural == dp.s_natural);
    for (int i = 0; i < n; ++i) CHECK(d.lambda_bar_i[perm[i]] == dp.lambda_bar_i[i]);
  }
}

TEST_CASE("validate_config accepts the demo model") {
  auto cfg = demo_config();
  CHECK(validate_config(cfg).empty());
  CHECK(cfg.mass(0) == doctest::Approx(0.25));
  CHECK(cfg.mass(1) == doctest::Approx(0.75));
}

TEST_CASE("validate_config reports symmetry and range violations") {
  auto cfg = demo_config();
  cfg.kernel.lambda[0 * 2 + 1] = 1.0;
  cfg.kernel.lambda[1 * 2 + 0] = 2.0;
  auto errs = validate_config(cfg);
  REQUIRE(!errs.empty());
  bool found = false;
  for (const auto& e : errs) found = found || e.find("symmetry violated at (1,2)") != std::string::npos;
  CHECK(found);

  auto cfg2 = demo_config();
  cfg2.kernel.s[0] = 2.0;
  errs = validate_config(cfg2);
  found = false;
  for (const auto& e : errs) found = found || e.find("open interval (0,2)") != std::string::npos;
  CHECK(found);
}

TEST_CASE("heavy tail exponent must exceed five") {
  auto cfg = demo_config();
  cfg.species[0].init.kind = InitDistribution::Kind::heavy_tail;
  cfg.species[0].init.tail_exponent = 4.5;
  auto errs = validate_config(cfg);
  bool found = false;
  for (const auto& e : errs) found = found || e.find("> 5") != std::string::npos;
  CHECK(found);
}

TEST_CASE("config loader reports field paths") {
  CHECK_THROWS_AS(load_config_text("{\"species\": []}"), ConfigError);
  try {
    load_config_text(R"({"species": [{"mass": 1.0}], "kernel": {"lambda": [[1.0]]}})");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.field).find("kernel") != std::string::npos);
  }
}

TEST_CASE("config hash is stable under reserialization") {
  auto cfg = demo_config();
  auto h1 = config_hash(cfg);
  auto cfg2 = load_config_text(config_canonical_json(cfg));
  CHECK(h1 == config_hash(cfg2));
}
