#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "srdlab/common.hpp"
#include "srdlab/coupling.hpp"
#include "srdlab/drift.hpp"
#include "srdlab/montecarlo.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/spectral_field.hpp"

using namespace srd;

namespace {

DriftSpec bench_drift() {
  return make_drift({0.0, 1.0, 0.0, -1.0}, LipschitzPart{}, 1.0, 0.25, 4.0,
                    3.0);
}

DriftSpec ou_drift() {
  return make_drift({}, LipschitzPart{}, 0.5, 0.5, 2.0, 0.5);
}

ModelSpec bench_model(int modes, int quad, double theta, std::uint64_t seed) {
  return ModelSpec{GridSpec(modes, quad), bench_drift(),
                   NoiseSpec(theta, modes, seed), 2.0};
}

ModelSpec ou_model(int modes, int quad, double theta, std::uint64_t seed) {
  return ModelSpec{GridSpec(modes, quad), ou_drift(),
                   NoiseSpec(theta, modes, seed), 2.0};
}

SpectralField mode_field(const GridSpec& g, int k, double a) {
  SpectralField x(g);
  x.c[k - 1] = a;
  return x;
}

// mode-1 marginal of the zero-reaction solution at time T started from
// a e_1: Gaussian with mean e^{-l T} a and variance l^{theta-1}(1-e^{-2lT})/2
void ou_marginal(const GridSpec& g, double theta, double a, double T,
                 double& mean, double& var) {
  double l = g.eigenvalue(1);
  mean = std::exp(-l * T) * a;
  var = std::pow(l, theta - 1.0) * (1.0 - std::exp(-2.0 * l * T)) / 2.0;
}

}  // namespace

TEST_CASE("observable factories validate and evaluate") {
  GridSpec g(8, 16);

  CHECK_THROWS_AS(Observable::bounded_trig(1.0, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(Observable::bounded_trig(2.0, -2.5, 1), ConfigError);
  CHECK_THROWS_AS(Observable::bounded_trig(2.0, 1.0, 0), ConfigError);
  Observable tr = Observable::bounded_trig(2.0, 1.0, 1);
  CHECK(tr.kind() == ObservableKind::bounded_trig);
  CHECK(tr.strictly_positive());
  CHECK(tr.label() == "trig(a=2,b=1,k=1)");
  CHECK(tr(mode_field(g, 1, 0.3)) == doctest::Approx(2.0 + std::sin(0.3)));

  CHECK_THROWS_AS(Observable::clipped_exponential(1.0, 0.0, 2.0, 1),
                  ConfigError);
  CHECK_THROWS_AS(Observable::clipped_exponential(1.0, 2.0, 1.0, 1),
                  ConfigError);
  Observable ce = Observable::clipped_exponential(1.0, 0.5, 2.0, 1);
  CHECK(ce.strictly_positive());
  CHECK(ce.label() == "clipexp(s=1,lo=0.5,hi=2,k=1)");
  CHECK(ce(mode_field(g, 1, -5.0)) == 0.5);
  CHECK(ce(mode_field(g, 1, 5.0)) == 2.0);
  CHECK(ce(mode_field(g, 1, 0.1)) == doctest::Approx(std::exp(0.1)));

  CHECK_THROWS_AS(Observable::indicator_ball(SpectralField(g), 0.0, 2.0, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(Observable::indicator_ball(SpectralField(g), 0.3, 0.5, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(Observable::indicator_ball(SpectralField(g), 0.3, 2.0, -0.1),
                  ConfigError);
  Observable ib = Observable::indicator_ball(SpectralField(g), 0.3, 2.0, 0.5);
  CHECK(ib.strictly_positive());
  CHECK(ib.label() == "ball(r=0.3,p=2,off=0.5)");
  CHECK(ib(mode_field(g, 1, 0.1)) == 1.5);   // inside
  CHECK(ib(mode_field(g, 1, 0.9)) == 0.5);   // outside
  Observable ib0 = Observable::indicator_ball(SpectralField(g), 0.3, 2.0, 0.0);
  CHECK_FALSE(ib0.strictly_positive());
  // centers carry their resolution with them
  GridSpec g2(6, 16);
  CHECK_THROWS_AS(ib(SpectralField(g2)), DomainError);

  CHECK_THROWS_AS(Observable::linear_mode(0), ConfigError);
  Observable lm = Observable::linear_mode(3);
  CHECK_FALSE(lm.strictly_positive());
  CHECK(lm.label() == "mode(k=3)");
  CHECK(lm(mode_field(g, 3, -0.7)) == -0.7);
  CHECK_THROWS_AS(lm(SpectralField(GridSpec(2, 8))), DomainError);
}

TEST_CASE("endpoint sampling is bitwise independent of the worker count") {
  ModelSpec m = bench_model(16, 32, 0.25, 99);
  SchemeSpec s(1e-3);
  SpectralField x0 = mode_field(m.grid, 1, 0.4);
  CounterRng rng(m.noise.seed);

  EndpointSet a = sample_endpoints(m, s, x0, 0.05, 150, rng, 7, 1);
  EndpointSet b = sample_endpoints(m, s, x0, 0.05, 150, rng, 7, 2);
  EndpointSet c = sample_endpoints(m, s, x0, 0.05, 150, rng, 7, 3);
  CHECK(a.blowups == 0);
  REQUIRE(a.states.size() == 150);
  bool same = true;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    same = same && a.states[i].c == b.states[i].c &&
           a.states[i].c == c.states[i].c;
  CHECK(same);
  // different ensemble ids decouple the draws
  EndpointSet d = sample_endpoints(m, s, x0, 0.05, 150, rng, 8, 2);
  CHECK(d.states[0].c != a.states[0].c);

  CHECK_THROWS_AS(sample_endpoints(m, s, x0, 0.05, 0, rng, 7, 1), ConfigError);
  CHECK_THROWS_AS(
      sample_endpoints(m, s, SpectralField(GridSpec(8, 32)), 0.05, 4, rng, 7, 1),
      ConfigError);
  CHECK_THROWS_AS(sample_endpoints(m, s, x0, 0.0503, 4, rng, 7, 1),
                  ConfigError);
}

TEST_CASE("coupling ensembles are bitwise independent of the worker count") {
  ModelSpec m = bench_model(16, 32, 0.0, 21);
  SchemeSpec s(1e-3);
  SpectralField x0 = mode_field(m.grid, 1, 0.25);
  SpectralField y0 = mode_field(m.grid, 1, 0.05);
  CouplingParams par;
  par.obs_times = {0.1, 0.3};
  CounterRng rng(m.noise.seed);

  CouplingEnsemble a = run_coupling_ensemble(m, s, x0, y0, 0.3, par, 130, rng,
                                             4, 1);
  CouplingEnsemble b = run_coupling_ensemble(m, s, x0, y0, 0.3, par, 130, rng,
                                             4, 3);
  CHECK(a.blowups == b.blowups);
  CHECK(a.cert_violations == b.cert_violations);
  CHECK(a.log_m_final == b.log_m_final);
  CHECK(a.log_m_at == b.log_m_at);
  CHECK(a.tau == b.tau);
  CHECK(a.v_energy == b.v_energy);
  CHECK(a.coupled == b.coupled);
}

TEST_CASE("sampled observable means match the Gaussian law of the linear model") {
  // zero reaction keeps every mode an exact Gaussian, so the sampled mean of
  // a + b sin(c_1) must match a + b sin(mean) e^{-var/2}
  for (double theta : {0.0, 0.25}) {
    ModelSpec m = ou_model(12, 24, theta, 314 + static_cast<int>(10 * theta));
    SchemeSpec s(0.01);
    double a0 = 0.7, T = 0.1;
    SpectralField x0 = mode_field(m.grid, 1, a0);
    CounterRng rng(m.noise.seed);
    EndpointSet set = sample_endpoints(m, s, x0, T, 2000, rng, 1, 0);
    CHECK(set.blowups == 0);

    double mean, var;
    ou_marginal(m.grid, theta, a0, T, mean, var);
    double target = 2.0 + std::sin(mean) * std::exp(-var / 2.0);

    Observable phi = Observable::bounded_trig(2.0, 1.0, 1);
    Estimate est = estimate_on(set, phi);
    CHECK(est.n == 2000);
    CHECK(est.se > 0.0);
    CHECK(std::abs(est.mean - target) <= 4.0 * est.se);

    // moments_on backs the same numbers
    RunningMoments mo = moments_on(set, phi);
    CHECK(mo.mean() == est.mean);
    CHECK(mo.stderror() == est.se);
    CHECK(mo.n == est.n);
  }
}

TEST_CASE("blown-up paths are counted and excluded from estimates") {
  ModelSpec m = bench_model(8, 16, 0.0, 5);
  SchemeSpec s(0.05);
  s.auto_taming = false;  // let the cubic run away
  SpectralField x0 = mode_field(m.grid, 1, 6.0);
  CounterRng rng(m.noise.seed);
  EndpointSet set = sample_endpoints(m, s, x0, 1.0, 8, rng, 2, 2);
  CHECK(set.blowups == 8);
  for (const auto& st : set.states) CHECK(std::isnan(st.c[0]));
  Estimate est = estimate_on(set, Observable::linear_mode(1));
  CHECK(est.n == 0);
  CHECK(est.mean == 0.0);
}

TEST_CASE("weight statistics reduce the stored exponents exactly") {
  CouplingEnsemble e;
  e.n = 4;
  e.T = 0.5;
  e.obs_times = {0.5};
  double l2 = std::log(2.0), lh = std::log(0.5);
  double nan = std::nan("");
  e.log_m_at = {0.0, l2, lh, nan};
  e.log_m_final = e.log_m_at;
  e.coupled = {1, 1, 1, 0};
  e.v_energy = {0.1, nan, 0.5, 0.2};
  e.cert_margin = {0.3, nan, 0.1, -0.2};

  Estimate em = weight_mean(e, 0);
  CHECK(em.n == 3);
  CHECK(em.mean ==
        doctest::Approx((1.0 + std::exp(l2) + std::exp(lh)) / 3.0)
            .epsilon(1e-15));
  Estimate ee = weight_entropy(e, 0);
  CHECK(ee.mean ==
        doctest::Approx((std::exp(l2) * l2 + std::exp(lh) * lh) / 3.0)
            .epsilon(1e-14));
  Estimate ep = weight_power(e, 0, 2.0);
  CHECK(ep.mean ==
        doctest::Approx((1.0 + std::exp(2 * l2) + std::exp(2 * lh)) / 3.0)
            .epsilon(1e-14));
  Estimate ea = weight_abs_dev(e, 0);
  CHECK(ea.mean ==
        doctest::Approx((0.0 + 1.0 + 0.5) / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(weight_mean(e, 1), DomainError);
  CHECK_THROWS_AS(weight_power(e, 0, std::nan("")), DomainError);

  CHECK(e.frac_coupled() == 0.75);
  CHECK(e.min_margin() == -0.2);
  CHECK(e.max_v_energy() == 0.5);
}

TEST_CASE("entropy, power, mean-one and energy checks pass on the cubic model") {
  ModelSpec m = bench_model(16, 32, 0.0, 1234);
  SchemeSpec s(1e-3);
  SpectralField x0 = mode_field(m.grid, 1, 0.25);
  SpectralField y0 = mode_field(m.grid, 1, 0.05);
  double T = 0.3;
  CouplingParams par;
  par.obs_times = {0.1, 0.2, 0.3};
  CounterRng rng(m.noise.seed);
  CouplingEnsemble e =
      run_coupling_ensemble(m, s, x0, y0, T, par, 400, rng, 11, 0);

  CHECK(e.blowups == 0);
  CHECK(e.cert_violations == 0);
  CHECK(e.frac_coupled() == 1.0);
  CHECK(e.r0 == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(e.obs_times.size() == 3);
  CHECK(e.obs_times[2] == doctest::Approx(T).epsilon(1e-12));
  CHECK(e.min_margin() > 0.0);

  // the weight is mean one at every observation time
  for (std::size_t j = 0; j < e.obs_times.size(); ++j) {
    Estimate em = weight_mean(e, j);
    CHECK(em.n == 400);
    CHECK(std::abs(em.mean - 1.0) <= 4.0 * em.se);
  }
  Estimate ad = weight_abs_dev(e, 2);
  CHECK(ad.mean > 0.0);

  auto ents = check_entropy(e, m);
  REQUIRE(ents.size() == 3);
  for (const auto& c : ents) {
    CHECK(c.verdict == Verdict::satisfied);
    CHECK(c.rhs > 0.0);
    CHECK(c.lhs <= c.rhs + 3.0 * c.sigma);
  }
  // earlier observation times carry looser bounds
  CHECK(ents[0].rhs > ents[2].rhs);

  CheckOutcome pw = check_power(e, m, 2.0);
  CHECK(pw.verdict == Verdict::satisfied);
  CHECK(pw.rhs == doctest::Approx(std::exp(2.0 * m.lambda() * sqr(m.ginv()) *
                                           e.r0 * e.r0 /
                                           std::expm1(2.0 * m.lambda() * e.T)))
                      .epsilon(1e-12));
  CHECK_THROWS_AS(check_power(e, m, 1.0), DomainError);

  CheckOutcome nov = check_novikov(e, m, s.dt);
  CHECK(nov.verdict == Verdict::satisfied);
  CHECK(nov.rhs ==
        doctest::Approx(0.5 * sqr(m.ginv()) * e.cert_bound).epsilon(1e-12));
  CHECK(nov.lhs == e.max_v_energy());
  CHECK(std::strcmp(verdict_name(nov.verdict), "satisfied") == 0);
}

TEST_CASE("weight checks fail closed when the ensemble blows up") {
  ModelSpec m = bench_model(8, 16, 0.0, 77);
  SchemeSpec s(0.05);
  s.auto_taming = false;
  SpectralField x0 = mode_field(m.grid, 1, 6.0);
  SpectralField y0 = mode_field(m.grid, 1, 5.9);
  CouplingParams par;
  par.obs_times = {0.5, 1.0};
  CounterRng rng(m.noise.seed);
  CouplingEnsemble e =
      run_coupling_ensemble(m, s, x0, y0, 1.0, par, 4, rng, 3, 1);
  CHECK(e.blowups == 4);
  CHECK(weight_mean(e, 0).n == 0);

  auto ents = check_entropy(e, m);
  for (const auto& c : ents) {
    CHECK(c.verdict == Verdict::inconclusive);
    CHECK_FALSE(c.note.empty());
  }
  CheckOutcome pw = check_power(e, m, 2.0);
  CHECK(pw.verdict == Verdict::inconclusive);
  CHECK(std::strcmp(verdict_name(pw.verdict), "inconclusive") == 0);
  CheckOutcome nov = check_novikov(e, m, s.dt);
  CHECK(nov.verdict == Verdict::inconclusive);
}

TEST_CASE("heavy-tailed weights are flagged on the power check") {
  CouplingEnsemble e;
  e.n = 50;
  e.T = 0.5;
  e.r0 = 0.1;
  e.obs_times = {0.5};
  e.coupled.assign(50, 1);
  e.log_m_final.assign(50, 0.0);
  e.log_m_final[7] = std::log(20.0);
  e.log_m_at = e.log_m_final;
  ModelSpec m = bench_model(8, 16, 0.0, 1);
  CheckOutcome pw = check_power(e, m, 2.0);
  CHECK(pw.note == "heavy-tailed weight sample, standard error may be optimistic");
  // lhs is the plain sample mean of the squared weights
  CHECK(pw.lhs == doctest::Approx((49.0 + 400.0) / 50.0).epsilon(1e-14));
}

TEST_CASE("semigroup log and power bounds hold for honest radii") {
  ModelSpec m = bench_model(16, 32, 0.0, 2024);
  SchemeSpec s(1e-3);
  double T = 0.1, r = 0.2;
  SpectralField x0 = mode_field(m.grid, 1, 0.1);
  SpectralField y0 = mode_field(m.grid, 1, -0.1);
  CounterRng rng(m.noise.seed);
  EndpointSet from_x = sample_endpoints(m, s, x0, T, 1500, rng, 1, 0);
  EndpointSet from_y = sample_endpoints(m, s, y0, T, 1500, rng, 2, 0);

  Observable phi = Observable::bounded_trig(2.0, 1.0, 1);
  CheckOutcome lg = check_log_harnack(from_y, from_x, phi, m, r);
  CHECK(lg.verdict == Verdict::satisfied);
  CHECK(lg.sigma > 0.0);
  CHECK(lg.lhs < lg.rhs);

  CheckOutcome pw = check_power_harnack(from_y, from_x, phi, m, r, 2.0);
  CHECK(pw.verdict == Verdict::satisfied);

  Observable ball =
      Observable::indicator_ball(SpectralField(m.grid), 0.5, 2.0, 0.5);
  CHECK(check_log_harnack(from_y, from_x, ball, m, r).verdict ==
        Verdict::satisfied);
  CHECK(check_power_harnack(from_y, from_x, ball, m, r, 1.5).verdict ==
        Verdict::satisfied);

  // gates: signed or vanishing observables are rejected
  CHECK_THROWS_AS(
      check_log_harnack(from_y, from_x, Observable::linear_mode(1), m, r),
      ConfigError);
  CHECK_THROWS_AS(
      check_log_harnack(from_y, from_x,
                        Observable::indicator_ball(SpectralField(m.grid), 0.5,
                                                   2.0, 0.0),
                        m, r),
      ConfigError);
  CHECK_THROWS_AS(
      check_power_harnack(from_y, from_x, Observable::linear_mode(1), m, r, 2.0),
      ConfigError);
  CHECK_THROWS_AS(check_power_harnack(from_y, from_x, phi, m, r, 1.0),
                  DomainError);
  CHECK_THROWS_AS(check_log_harnack(from_y, from_x, phi, m, 0.0), DomainError);
}

TEST_CASE("a radius far below the true distance is flagged as violated") {
  ModelSpec m = bench_model(16, 32, 0.0, 555);
  SchemeSpec s(1e-3);
  double T = 0.1;
  SpectralField xp = mode_field(m.grid, 1, 0.8);
  SpectralField xm = mode_field(m.grid, 1, -0.8);
  CounterRng rng(m.noise.seed);
  EndpointSet from_plus = sample_endpoints(m, s, xp, T, 400, rng, 1, 0);
  EndpointSet from_minus = sample_endpoints(m, s, xm, T, 400, rng, 2, 0);

  Observable phi = Observable::bounded_trig(2.0, 1.0, 1);
  // the claimed radius 1e-3 cannot carry the plus start to the minus start
  CheckOutcome lg = check_log_harnack(from_plus, from_minus, phi, m, 1e-3);
  CHECK(lg.verdict == Verdict::violated);
  CHECK(std::strcmp(verdict_name(lg.verdict), "violated_beyond_3sigma") == 0);
  CheckOutcome pw = check_power_harnack(from_plus, from_minus, phi, m, 1e-3, 2.0);
  CHECK(pw.verdict == Verdict::violated);
}

TEST_CASE("gradient probe matches the linear-model derivative and its bound") {
  ModelSpec m = ou_model(12, 24, 0.0, 4242);
  SchemeSpec s(0.01);
  double T = 0.1, a0 = 0.7, eps = 0.05;
  SpectralField x0 = mode_field(m.grid, 1, a0);
  SpectralField h = mode_field(m.grid, 1, 2.0);  // direction is normalized
  Observable phi = Observable::bounded_trig(2.0, 1.0, 1);
  CounterRng rng(m.noise.seed);

  GradientCheck g =
      check_gradient(m, s, x0, h, eps, T, phi, 600, rng, 10, 0);

  double mean, var;
  ou_marginal(m.grid, 0.0, a0, T, mean, var);
  double l = m.grid.eigenvalue(1);
  double exact = std::cos(mean) * std::exp(-var / 2.0) * std::exp(-l * T);
  CHECK(g.richardson_ok);
  CHECK(std::abs(g.fd - exact) <= 4.0 * g.outcome.sigma + 1e-3);
  CHECK(std::abs(g.fd_half - exact) <= 4.0 * g.outcome.sigma + 1e-3);
  CHECK(g.outcome.verdict == Verdict::satisfied);
  CHECK(g.outcome.lhs == std::abs(g.fd));
  CHECK(g.outcome.rhs > 0.0);

  CHECK_THROWS_AS(
      check_gradient(m, s, x0, SpectralField(m.grid), eps, T, phi, 16, rng, 10, 0),
      ConfigError);
  CHECK_THROWS_AS(check_gradient(m, s, x0, h, 0.0, T, phi, 16, rng, 10, 0),
                  DomainError);
}

TEST_CASE("a coarse probe on a curved observable trips the step-halving guard") {
  ModelSpec m = ou_model(12, 24, 0.0, 808);
  SchemeSpec s(0.01);
  SpectralField x0 = mode_field(m.grid, 1, 0.0);
  SpectralField h = mode_field(m.grid, 1, 1.0);
  Observable phi = Observable::clipped_exponential(3.0, 1e-6, 1e6, 1);
  CounterRng rng(m.noise.seed);
  GradientCheck g =
      check_gradient(m, s, x0, h, 2.0, 0.1, phi, 200, rng, 6, 0);
  CHECK_FALSE(g.richardson_ok);
  CHECK(g.outcome.verdict == Verdict::inconclusive);
  CHECK_FALSE(g.outcome.note.empty());
}

TEST_CASE("rate factor matches its integral form and flat limit") {
  // 1/rate_factor = 2 int_0^T e^{2 lambda s} ds, checked by Simpson panels
  for (double lambda : {M_PI * M_PI - 1.0, -1.0, 0.3}) {
    for (double T : {0.1, 0.5, 2.0}) {
      int n = 4000;
      double h = T / n;
      CompensatedSum s;
      for (int i = 0; i < n; ++i) {
        double a = i * h, mid = a + 0.5 * h, b = a + h;
        s.add(h / 6.0 *
              (std::exp(2 * lambda * a) + 4 * std::exp(2 * lambda * mid) +
               std::exp(2 * lambda * b)));
      }
      CHECK(rate_factor(lambda, T) ==
            doctest::Approx(1.0 / (2.0 * s.value())).epsilon(1e-10));
    }
  }
  CHECK(rate_factor(0.0, 0.25) == 2.0);
  CHECK(rate_factor(1e-9, 0.25) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rate_factor(-1e-9, 0.25) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(rate_factor(-3.0, 0.5) > 0.0);
  CHECK_THROWS_AS(rate_factor(1.0, 0.0), DomainError);
}

TEST_CASE("the closed-form power bound decreases along time ladders") {
  std::vector<double> times = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  ModelSpec pos = bench_model(8, 16, 0.0, 1);  // rate pi^2 - 1
  CHECK(power_bound_decreasing(pos, 0.3, 2.0, times));
  CHECK(power_bound_decreasing(pos, 0.3, 1.2, times));

  // rate exactly zero: balanced constants hit the flat-schedule branch
  ModelSpec flat = pos;
  flat.drift = make_drift({0.0, 1.0, 0.0, -1.0}, LipschitzPart{},
                          flat.grid.eigenvalue(1), 0.25, 4.0, 3.0);
  CHECK(flat.lambda() == 0.0);
  CHECK(power_bound_decreasing(flat, 0.3, 2.0, times));

  ModelSpec neg = pos;
  neg.p = 4.0;  // rate -1 for the cubic
  CHECK(neg.lambda() == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(power_bound_decreasing(neg, 0.3, 2.0, times));

  CHECK_THROWS_AS(power_bound_decreasing(pos, 0.3, 1.0, times), DomainError);
  CHECK_THROWS_AS(power_bound_decreasing(pos, 0.3, 2.0, {0.2, 0.1}),
                  DomainError);
  CHECK_THROWS_AS(power_bound_decreasing(pos, 0.3, 2.0, {0.5}), DomainError);
}
