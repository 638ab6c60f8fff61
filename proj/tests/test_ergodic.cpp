#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "srdlab/common.hpp"
#include "srdlab/drift.hpp"
#include "srdlab/ergodic.hpp"
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

const KBSeries& series_of(const KBEstimate& kb, const std::string& label) {
  for (const auto& s : kb.series)
    if (s.label == label) return s;
  REQUIRE(false);
  return kb.series.front();
}

}  // namespace

TEST_CASE("the default smoothness order honors every constraint") {
  // benchmark: min(0.2, 1 - 1*1*2/(2*2*4), 0.99/2, 1/2) = 0.2
  CHECK(default_beta_tig(bench_drift(), 0.0, 2.0) == 0.2);
  // strong spatial coloring: the noise regularity wins
  CHECK(default_beta_tig(bench_drift(), 0.45, 2.0) ==
        doctest::Approx(0.99 * 0.05).epsilon(1e-12));
  // large p: the d/p term wins
  CHECK(default_beta_tig(bench_drift(), 0.0, 10.0) ==
        doctest::Approx(0.1).epsilon(1e-12));
  // q = 2 drops the dimension penalty entirely
  CHECK(default_beta_tig(ou_drift(), 0.0, 2.0) == 0.2);
}

TEST_CASE("run specs are validated before any stepping") {
  ModelSpec m = ou_model(8, 16, 0.0, 1);
  SchemeSpec s(0.01);
  CounterRng rng(1);
  ErgodicRunSpec spec;
  spec.horizon = 2.0;
  spec.burn_in = 0.0;
  spec.observation_stride = 0.1;

  ErgodicRunSpec bad = spec;
  bad.burn_in = 2.0;
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.observation_stride = 0.3;  // does not divide the window
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.observation_stride = 0.005;  // finer than the step
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.horizon = 0.5;  // only 5 stride samples
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.horizons = {1.0, 1.0, 2.0};
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.horizons = {1.0};  // must end at the run horizon
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.horizons = {0.2, 2.0};  // first end carries only 2 samples
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
  bad = spec;
  bad.beta_tig = 1.5;
  CHECK_THROWS_AS(kb_average(bad, m, s, rng, 1), ConfigError);
}

TEST_CASE("a constant functional averages to one exactly") {
  ModelSpec m = ou_model(8, 16, 0.0, 7);
  SchemeSpec s(0.01);
  CounterRng rng(m.noise.seed);
  ErgodicRunSpec spec;
  spec.horizon = 2.0;
  spec.observation_stride = 0.05;
  spec.observables = {Observable::bounded_trig(1.0, 0.0, 1)};  // identically 1
  spec.keep_samples = true;

  KBEstimate kb = kb_average(spec, m, s, rng, 3);
  REQUIRE(kb.series.size() == 4);
  REQUIRE(kb.horizons.size() == 4);  // quarter points of the window
  CHECK(kb.horizons.back() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(kb.beta_tig == 0.2);
  for (std::size_t e = 0; e < kb.horizons.size(); ++e) {
    CHECK(kb.series[0].value[e] == 1.0);
    CHECK(kb.series[0].se[e] == 0.0);
    CHECK(kb.batches[e] >= 8);
  }
  // retained samples: 40 stride rows per functional
  CHECK(kb.sample_times.size() == 40);
  CHECK(kb.samples.size() == 4);
  CHECK(kb.samples[0].size() == 40);
  CHECK(kb.sample_times.front() == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(kb.sample_times.back() == doctest::Approx(2.0).epsilon(1e-9));

  // reruns with the same stream reproduce bitwise
  KBEstimate kb2 = kb_average(spec, m, s, rng, 3);
  CHECK(kb2.series[1].value == kb.series[1].value);
  CHECK(kb2.series[3].se == kb.series[3].se);
  // a different stream does not
  KBEstimate kb3 = kb_average(spec, m, s, rng, 4);
  CHECK(kb3.series[1].value != kb.series[1].value);
}

TEST_CASE("linear-model averages reach the stationary second moment") {
  // zero reaction: the time average of |X|_2^2 tends to the truncated series
  // sum_k 1/(2 pi^2 k^2), which sits within its tail bound of 1/12
  ModelSpec m = ou_model(16, 32, 0.0, 2025);
  SchemeSpec s(2e-3);
  CounterRng rng(m.noise.seed);
  ErgodicRunSpec spec;
  spec.horizon = 20.0;
  spec.observation_stride = 0.05;

  double target = 0.0;
  for (int k = 1; k <= m.grid.n_modes; ++k)
    target += 1.0 / (2.0 * m.grid.eigenvalue(k));
  double tail = 1.0 / (2.0 * M_PI * M_PI * m.grid.n_modes);
  CHECK(std::abs(target - 1.0 / 12.0) <= tail);

  KBEstimate kb = kb_average(spec, m, s, rng, 11);
  const KBSeries& l2 = series_of(kb, "lp_pow(p=2)");
  std::size_t last = kb.horizons.size() - 1;
  CHECK(l2.se[last] > 0.0);
  CHECK(std::abs(l2.value[last] - target) <= 3.0 * l2.se[last]);

  // with q = 2 the growth functional coincides with |x|_2^2 bitwise
  CHECK(kb.series[0].value == kb.series[1].value);
  // the smoothness functional is positive and finite
  const KBSeries& sob = series_of(kb, "sobolev(beta=0.2,p=2)");
  for (double v : sob.value) {
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("cubic-model growth functionals stay bounded over nested horizons") {
  ModelSpec m = bench_model(16, 32, 0.0, 99);
  SchemeSpec s(2e-3);
  CounterRng rng(m.noise.seed);
  ErgodicRunSpec spec;
  spec.horizon = 12.0;
  spec.observation_stride = 0.05;
  spec.horizons = {3.0, 6.0, 9.0, 12.0};

  KBEstimate kb = kb_average(spec, m, s, rng, 5);
  REQUIRE(kb.horizons.size() == 4);
  const KBSeries& tig1 = series_of(kb, "lp_pow(p=4)");
  const KBSeries& tig2 = series_of(kb, "sobolev(beta=0.2,p=2)");
  for (const KBSeries* ser : {&tig1, &tig2}) {
    for (double v : ser->value) {
      CHECK(v > 0.0);
      CHECK(v < 10.0);
    }
    // no upward trend beyond the combined batch error
    double grow = ser->value.back() - ser->value.front();
    CHECK(grow <= 3.0 * std::sqrt(sqr(ser->se.front()) + sqr(ser->se.back())));
  }
}

TEST_CASE("two chains from opposite wells agree and the pair contracts") {
  ModelSpec m = bench_model(16, 32, 0.0, 512);
  SchemeSpec s(2e-3);
  CounterRng rng(m.noise.seed);
  ErgodicRunSpec spec;
  spec.horizon = 12.0;
  spec.burn_in = 2.0;
  spec.observation_stride = 0.05;
  spec.observables = {Observable::linear_mode(1),
                      Observable::bounded_trig(2.0, 1.0, 1)};

  SpectralField x0 = mode_field(m.grid, 1, 3.0);
  SpectralField y0 = mode_field(m.grid, 1, -3.0);
  TwoChainReport rep =
      two_chain_convergence(x0, y0, spec, m, s, rng, 100, 101, 102);

  CHECK(rep.all_agree);
  REQUIRE(rep.agreement.size() == 5);
  for (const auto& a : rep.agreement) {
    CHECK(a.verdict == Verdict::satisfied);
    CHECK(a.se_x > 0.0);
  }
  // the odd functional vanishes under the sign symmetry from either start
  const ChainAgreement& odd = rep.agreement[0];
  CHECK(odd.label == "mode(k=1)");
  CHECK(std::abs(odd.mean_x) <= 3.5 * odd.se_x);
  CHECK(std::abs(odd.mean_y) <= 3.5 * odd.se_y);

  // companion pair: distance 6 decays inside the contraction envelope
  CHECK(rep.lambda == doctest::Approx(M_PI * M_PI - 1.0).epsilon(1e-14));
  CHECK(rep.r0 == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(rep.envelope_checked);
  CHECK(rep.envelope_points > 20);
  CHECK(rep.envelope_violations == 0);
  CHECK(rep.pair_dist.back() <= 1e-9);

  CHECK_THROWS_AS(two_chain_convergence(x0, y0, spec, m, s, rng, 9, 9, 10),
                  ConfigError);
}

TEST_CASE("identical starts under one noise stay glued") {
  ModelSpec m = bench_model(8, 16, 0.0, 3);
  SchemeSpec s(0.01);
  CounterRng rng(m.noise.seed);
  ErgodicRunSpec spec;
  spec.horizon = 1.0;
  spec.observation_stride = 0.1;

  SpectralField x0 = mode_field(m.grid, 1, 0.3);
  TwoChainReport rep =
      two_chain_convergence(x0, x0, spec, m, s, rng, 1, 2, 3);
  CHECK(rep.r0 == 0.0);
  for (double d : rep.pair_dist) CHECK(d == 0.0);
  CHECK(rep.envelope_points == 0);
  CHECK(rep.envelope_violations == 0);
}

TEST_CASE("total variation surrogates decay at the contraction rate") {
  ModelSpec m = bench_model(16, 32, 0.0, 888);
  SchemeSpec s(1e-3);
  CounterRng rng(m.noise.seed);
  SpectralField x0 = mode_field(m.grid, 1, 0.15);
  SpectralField y0 = mode_field(m.grid, 1, 0.05);

  TvReport rep = tv_decay_profile(x0, y0, {0.25, 0.5}, m, s, 800, rng, 40, 0);
  CHECK(rep.r0 == doctest::Approx(0.1).epsilon(1e-12));
  REQUIRE(rep.points.size() == 2);
  for (const TvPoint& pt : rep.points) {
    CHECK(pt.blowups == 0);
    CHECK(pt.frac_uncoupled == 0.0);
    CHECK(pt.mean_abs_dev > 0.0);
    CHECK(pt.coupling_bound == pt.mean_abs_dev);
    CHECK(pt.pinsker_bound > 0.0);
  }
  CHECK(rep.points[1].coupling_bound < rep.points[0].coupling_bound);
  CHECK(rep.points[1].pinsker_bound < rep.points[0].pinsker_bound);

  // closed form at the benchmark horizon: sqrt(2 * 1.246e-5) is about 5e-3
  CHECK(rep.points[1].pinsker_bound ==
        doctest::Approx(5.0e-3).epsilon(0.01));
  CHECK(rep.points[1].pinsker_bound ==
        doctest::Approx(std::sqrt(2.0 * rate_factor(m.lambda(), 0.5)) *
                        m.ginv() * 0.1)
            .epsilon(1e-12));

  CHECK(rep.envelope_checked);
  CHECK(rep.envelope_ok_mc);
  CHECK(rep.envelope_ok_closed);

  CHECK_THROWS_AS(tv_decay_profile(x0, y0, {}, m, s, 8, rng, 50, 0),
                  ConfigError);
  CHECK_THROWS_AS(tv_decay_profile(x0, y0, {0.5, 0.25}, m, s, 8, rng, 50, 0),
                  ConfigError);
}

TEST_CASE("coinciding starts give zero surrogates at every time") {
  ModelSpec m = bench_model(8, 16, 0.0, 17);
  SchemeSpec s(1e-3);
  CounterRng rng(m.noise.seed);
  SpectralField x0 = mode_field(m.grid, 1, 0.4);
  TvReport rep = tv_decay_profile(x0, x0, {0.25, 0.5}, m, s, 50, rng, 60, 0);
  CHECK(rep.r0 == 0.0);
  for (const TvPoint& pt : rep.points) {
    CHECK(pt.frac_uncoupled == 0.0);
    CHECK(pt.mean_abs_dev == 0.0);
    CHECK(pt.coupling_bound == 0.0);
    CHECK(pt.pinsker_bound == 0.0);
  }
  CHECK(rep.envelope_ok_mc);
  CHECK(rep.envelope_ok_closed);
}
