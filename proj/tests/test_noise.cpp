#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "srdlab/noise.hpp"

using namespace srd;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("divergent or unsupported exponents are rejected") {
  CHECK_THROWS_AS(NoiseSpec(0.5, 64, 1), DomainError);
  CHECK_THROWS_AS(NoiseSpec(0.7, 64, 1), DomainError);
  CHECK_THROWS_AS(NoiseSpec(-0.1, 64, 1), DomainError);
  CHECK_NOTHROW(NoiseSpec(0.0, 64, 1));
  CHECK_NOTHROW(NoiseSpec(0.49, 64, 1));
  CHECK_THROWS_AS(gamma_series_integrated(0.5, 64), DomainError);
  CHECK_THROWS_AS(gamma_series_integrated(0.55, 64), DomainError);
}

TEST_CASE("mode increments carry variance lambda^theta dt") {
  GridSpec g(8, 16);
  NoiseSpec n(0.25, 8, 77);
  CounterRng rng(n.seed);
  const double dt = 0.01;
  const int m = 100000;
  for (int mode : {1, 3}) {
    RunningMoments acc;
    for (int i = 0; i < m; ++i) {
      SpectralField w = wiener_increment(n, g, dt, rng,
                                         path_id(0, static_cast<std::uint64_t>(i)), 0);
      acc.add(w.c[static_cast<std::size_t>(mode - 1)]);
    }
    const double target = std::pow(g.eigenvalue(mode), n.theta) * dt;
    const double se_var = target * std::sqrt(2.0 / (m - 1.0));
    CHECK(std::abs(acc.mean()) < 4.5 * std::sqrt(target / m));
    double sample_var = acc.variance();
    CHECK(std::abs(sample_var - target) < 4.5 * se_var);
  }
}

TEST_CASE("exact convolution step has the closed-form conditional law") {
  GridSpec g(4, 8);
  NoiseSpec n(0.0, 4, 1234);
  CounterRng rng(n.seed);
  const double dt = 0.1;
  OUState s0{0.0, SpectralField(g)};
  s0.field.c[0] = 1.0;

  const int m = 100000;
  RunningMoments acc;
  for (int i = 0; i < m; ++i) {
    OUState s1 = ou_exact_step(s0, dt, n, g, rng,
                               path_id(0, static_cast<std::uint64_t>(i)), 0);
    CHECK(s1.t == doctest::Approx(0.1));
    acc.add(s1.field.c[0]);
  }
  const double lam = g.eigenvalue(1);
  const double mean_target = std::exp(-lam * dt);
  const double var_target = -std::expm1(-2.0 * lam * dt) / (2.0 * lam);
  CHECK(std::abs(acc.mean() - mean_target) <
        4.5 * std::sqrt(var_target / m));
  CHECK(std::abs(acc.variance() - var_target) <
        4.5 * var_target * std::sqrt(2.0 / (m - 1.0)));
}

TEST_CASE("step tables compose over doubled steps") {
  GridSpec g(16, 32);
  auto a = OuStepTables::make(g, 0.25, 1e-3);
  auto b = OuStepTables::make(g, 0.25, 2e-3);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(b.decay[k] == doctest::Approx(a.decay[k] * a.decay[k]).epsilon(1e-13));
    // Var over 2dt = Var over dt times (1 + decay(dt)^2)
    double va = sqr(a.c_shared[k]) + sqr(a.c_extra[k]);
    double vb = sqr(b.c_shared[k]) + sqr(b.c_extra[k]);
    CHECK(vb == doctest::Approx(va * (1.0 + sqr(a.decay[k]))).epsilon(1e-12));
  }
}

TEST_CASE("joint draw reproduces and separates by path and step") {
  GridSpec g(8, 16);
  auto tb = OuStepTables::make(g, 0.0, 1e-4);
  CounterRng rng(99);
  ModeIncrements a, b;
  sample_increments(tb, rng, path_id(0, 5), 17, a);
  sample_increments(tb, rng, path_id(0, 5), 17, b);
  CHECK(a.dbeta == b.dbeta);
  CHECK(a.eta == b.eta);
  sample_increments(tb, rng, path_id(0, 5), 18, b);
  CHECK(a.dbeta != b.dbeta);
  sample_increments(tb, rng, path_id(1, 5), 17, b);
  CHECK(a.dbeta != b.dbeta);
}

TEST_CASE("integrated variance series: truncation, tail bound, quadrature") {
  auto s0 = gamma_series_integrated(0.0, 64);
  CHECK(s0.value <= 1.0 / 12.0);
  CHECK(std::abs(s0.value - 1.0 / 12.0) <= s0.tail_bound);
  CHECK(s0.tail_bound == doctest::Approx(1.0 / (2.0 * kPi * kPi * 64)).epsilon(1e-12));

  // bracket a rough-noise case against a deep reference truncation
  auto s = gamma_series_integrated(0.25, 64);
  auto ref = gamma_series_integrated(0.25, 200000);
  CHECK(s.value <= ref.value + ref.tail_bound);
  CHECK(ref.value <= s.value + s.tail_bound);

  // the series is the time integral of sum_k e^{-2 lambda_k t} lambda_k^theta:
  // integrate each mode by composite Simpson and compare
  const double theta = 0.25;
  GridSpec g(64, 128);
  CompensatedSum quad;
  for (int k = 1; k <= 64; ++k) {
    const double lam = g.eigenvalue(k);
    const double L = 10.0 / lam;
    const int nseg = 1024;
    const double h = L / nseg;
    double acc = 0.0;
    for (int i = 0; i <= nseg; ++i) {
      double w = (i == 0 || i == nseg) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * std::exp(-2.0 * lam * i * h);
    }
    quad.add(std::pow(lam, theta) * acc * h / 3.0);
  }
  CHECK(std::abs(quad.value() - s.value) < 1e-6);
}

TEST_CASE("moment estimates from a zero start match the truncated law") {
  GridSpec g(64, 128);
  NoiseSpec n(0.0, 64, 20260819);
  auto est = ou_moment_estimate(n, g, 50.0, 2.0, 2, 4000);
  CHECK(est.n == 4000);
  double target = 0.0;
  for (int k = 1; k <= 64; ++k) target += 1.0 / (2.0 * g.eigenvalue(k));
  CHECK(std::abs(est.mean - target) < 4.0 * est.se);
  // and the truncated target sits within the series tail bound of 1/12
  auto s = gamma_series_integrated(0.0, 64);
  CHECK(std::abs(target - 1.0 / 12.0) <= s.tail_bound);

  CHECK_THROWS_AS(ou_moment_estimate(n, g, 1.0, 1.5, 2, 100), DomainError);
  CHECK_THROWS_AS(ou_moment_estimate(n, g, 1.0, 2.0, 2, 1), DomainError);
}

TEST_CASE("sobolev moment of the convolution: domain gate and finiteness") {
  GridSpec g(64, 128);
  NoiseSpec n(0.25, 64, 5);
  CHECK_THROWS_AS(sobolev_moment_estimate(n, g, 0.25, 1.0, 100), DomainError);
  CHECK_THROWS_AS(sobolev_moment_estimate(n, g, 0.30, 1.0, 100), DomainError);
  auto est = sobolev_moment_estimate(n, g, 0.20, 1.0, 200);
  CHECK(est.mean > 0.0);
  CHECK(std::isfinite(est.se));
  // rougher noise carries a larger fractional norm than smoother noise
  NoiseSpec n0(0.0, 64, 5);
  auto est0 = sobolev_moment_estimate(n0, g, 0.20, 1.0, 200);
  CHECK(est.mean > est0.mean);
}

TEST_CASE("inverse covariance scale is pi^{-theta}") {
  CHECK(g_inverse_norm(NoiseSpec(0.0, 8, 1)) == 1.0);
  CHECK(g_inverse_norm(NoiseSpec(0.25, 8, 1)) ==
        doctest::Approx(std::pow(kPi, -0.25)).epsilon(1e-14));
  CHECK(g_inverse_norm(NoiseSpec(0.25, 8, 1)) ==
        doctest::Approx(0.7511255444649425).epsilon(1e-10));
  CHECK(g_inverse_norm(NoiseSpec(0.4, 8, 1)) ==
        doctest::Approx(std::pow(kPi, -0.4)).epsilon(1e-14));
}
