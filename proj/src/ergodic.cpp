#include "srdlab/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace srd {

namespace {

constexpr double kBatchWidth = 1.25;    // target batch length in time units
constexpr double kEnvelopeFloor = 1e-12;
constexpr double kEnvelopeTol = 0.05;   // pathwise contraction slack

// span must be an integer multiple of unit
std::uint64_t exact_multiple(double span, double unit, const char* what) {
  if (!(unit > 0.0) || !std::isfinite(unit) || !(span >= 0.0) ||
      !std::isfinite(span))
    throw ConfigError(std::string(what) + " must be a finite multiple of a positive unit");
  auto k = static_cast<std::uint64_t>(std::llround(span / unit));
  if (std::abs(span - static_cast<double>(k) * unit) >
      1e-9 * std::max(1.0, std::abs(span)))
    throw ConfigError(std::string(what) + " must sit on the coarser time grid");
  return k;
}

struct SamplePlan {
  std::uint64_t k_stride = 0;  // steps per stride
  std::uint64_t b_steps = 0;   // steps burned before sampling
  std::uint64_t n_samples = 0; // stride samples up to the horizon
  std::uint64_t total = 0;     // steps simulated in all
};

SamplePlan plan_of(const ErgodicRunSpec& spec, double dt) {
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    throw ConfigError("horizon must be positive");
  if (!(spec.burn_in >= 0.0) || !(spec.burn_in < spec.horizon))
    throw ConfigError("burn-in must be nonnegative and below the horizon");
  if (!(spec.observation_stride > 0.0))
    throw ConfigError("observation stride must be positive");
  SamplePlan pl;
  pl.k_stride = exact_multiple(spec.observation_stride, dt, "the stride");
  if (pl.k_stride == 0) throw ConfigError("stride must cover at least one step");
  pl.b_steps = exact_multiple(spec.burn_in, dt, "the burn-in");
  pl.n_samples = exact_multiple(spec.horizon - spec.burn_in,
                                spec.observation_stride, "the averaging window");
  if (pl.n_samples < 8)
    throw ConfigError("need at least 8 stride samples past the burn-in");
  pl.total = pl.b_steps + pl.n_samples * pl.k_stride;
  return pl;
}

// nested horizon ends in stride samples past the burn-in
std::vector<std::uint64_t> nested_ends(const ErgodicRunSpec& spec,
                                       const SamplePlan& pl) {
  std::vector<std::uint64_t> ends;
  if (spec.horizons.empty()) {
    for (std::uint64_t qtr = 1; qtr <= 4; ++qtr) {
      std::uint64_t j = pl.n_samples * qtr / 4;
      if (j >= 8 && (ends.empty() || j > ends.back())) ends.push_back(j);
    }
    if (ends.empty() || ends.back() != pl.n_samples)
      ends.push_back(pl.n_samples);
    return ends;
  }
  double prev = spec.burn_in;
  for (double hm : spec.horizons) {
    if (!(hm > prev)) throw ConfigError("nested horizons must increase");
    prev = hm;
    std::uint64_t j = exact_multiple(hm - spec.burn_in,
                                     spec.observation_stride, "each nested horizon");
    if (j < 8)
      throw ConfigError("each nested horizon needs at least 8 stride samples");
    if (j > pl.n_samples)
      throw ConfigError("nested horizons cannot pass the run horizon");
    ends.push_back(j);
  }
  if (ends.back() != pl.n_samples)
    throw ConfigError("the last nested horizon must equal the run horizon");
  return ends;
}

double prefix_mean(const std::vector<double>& row, std::uint64_t j) {
  CompensatedSum s;
  for (std::uint64_t i = 0; i < j; ++i) s.add(row[i]);
  return s.value() / static_cast<double>(j);
}

double batch_se(const std::vector<double>& row, std::uint64_t j,
                std::uint64_t n_b) {
  RunningMoments bm;
  for (std::uint64_t b = 0; b < n_b; ++b) {
    std::uint64_t lo = j * b / n_b, hi = j * (b + 1) / n_b;
    CompensatedSum s;
    for (std::uint64_t i = lo; i < hi; ++i) s.add(row[i]);
    bm.add(s.value() / static_cast<double>(hi - lo));
  }
  return bm.stderror();
}

}  // namespace

double default_beta_tig(const DriftSpec& d, double theta, double p) {
  const double dim = 1.0;
  double shape = 1.0 - dim * (p - 1.0) * (d.q - 2.0) /
                           (2.0 * p * (d.q + p - 2.0));
  double regularity = 0.99 * (0.5 - theta);
  double beta = std::min(std::min(0.2, shape), std::min(regularity, dim / p));
  if (!(beta > 0.0))
    throw ConfigError("no admissible smoothness order for these constants");
  return beta;
}

KBEstimate kb_average_from(const SpectralField& x0, const ErgodicRunSpec& spec,
                           const ModelSpec& m, const SchemeSpec& s,
                           const CounterRng& rng, std::uint64_t path) {
  if (!(x0.grid == m.grid))
    throw ConfigError("start state lives on a different grid");
  const SamplePlan pl = plan_of(spec, s.dt);
  const std::vector<std::uint64_t> ends = nested_ends(spec, pl);

  double beta = spec.beta_tig;
  if (beta == 0.0) beta = default_beta_tig(m.drift, m.noise.theta, m.p);
  if (!(beta > 0.0) || !(beta < 1.0))
    throw ConfigError("smoothness order must lie in (0,1)");
  const double p_tig = m.drift.q + m.p - 2.0;

  const std::size_t n_obs = spec.observables.size();
  const std::size_t n_fun = n_obs + 3;
  std::vector<std::vector<double>> rows(n_fun);
  for (auto& r : rows) r.reserve(pl.n_samples);
  std::vector<double> stimes;
  if (spec.keep_samples) stimes.reserve(pl.n_samples);

  PathSimulator sim(m.grid, m.drift, m.noise, s);
  TrajectoryState st = sim.init(x0);
  for (std::uint64_t step = 1; step <= pl.total; ++step) {
    sim.advance(st, rng, path);
    if (step > pl.b_steps && (step - pl.b_steps) % pl.k_stride == 0) {
      for (std::size_t i = 0; i < n_obs; ++i)
        rows[i].push_back(spec.observables[i](st.x));
      rows[n_obs].push_back(std::pow(lp_norm(st.x, m.p), m.p));
      rows[n_obs + 1].push_back(std::pow(lp_norm(st.x, p_tig), p_tig));
      rows[n_obs + 2].push_back(sobolev_slobodeckij_norm(st.x, beta, m.p));
      if (spec.keep_samples) stimes.push_back(st.t);
    }
  }

  KBEstimate out;
  out.beta_tig = beta;
  std::vector<std::uint64_t> n_batches;
  for (std::uint64_t j : ends) {
    double span = static_cast<double>(j) * spec.observation_stride;
    auto n_b = static_cast<std::uint64_t>(
        std::max(8.0, std::floor(span / kBatchWidth)));
    n_b = std::min(n_b, j);
    out.horizons.push_back(spec.burn_in + span);
    out.batches.push_back(n_b);
    n_batches.push_back(n_b);
  }

  out.series.reserve(n_fun);
  for (std::size_t f = 0; f < n_fun; ++f) {
    KBSeries ser;
    char buf[96];
    if (f < n_obs) {
      ser.label = spec.observables[f].label();
    } else if (f == n_obs) {
      std::snprintf(buf, sizeof buf, "lp_pow(p=%g)", m.p);
      ser.label = buf;
    } else if (f == n_obs + 1) {
      std::snprintf(buf, sizeof buf, "lp_pow(p=%g)", p_tig);
      ser.label = buf;
    } else {
      std::snprintf(buf, sizeof buf, "sobolev(beta=%g,p=%g)", beta, m.p);
      ser.label = buf;
    }
    for (std::size_t e = 0; e < ends.size(); ++e) {
      ser.value.push_back(prefix_mean(rows[f], ends[e]));
      ser.se.push_back(batch_se(rows[f], ends[e], n_batches[e]));
    }
    out.series.push_back(std::move(ser));
  }
  if (spec.keep_samples) {
    out.sample_times = std::move(stimes);
    out.samples = std::move(rows);
  }
  return out;
}

KBEstimate kb_average(const ErgodicRunSpec& spec, const ModelSpec& m,
                      const SchemeSpec& s, const CounterRng& rng,
                      std::uint64_t path) {
  return kb_average_from(SpectralField(m.grid), spec, m, s, rng, path);
}

TwoChainReport two_chain_convergence(const SpectralField& x0,
                                     const SpectralField& y0,
                                     const ErgodicRunSpec& spec,
                                     const ModelSpec& m, const SchemeSpec& s,
                                     const CounterRng& rng,
                                     std::uint64_t path_x, std::uint64_t path_y,
                                     std::uint64_t path_pair) {
  if (path_x == path_y)
    throw ConfigError("the two chains must draw from distinct streams");
  TwoChainReport rep;
  rep.chain_x = kb_average_from(x0, spec, m, s, rng, path_x);
  rep.chain_y = kb_average_from(y0, spec, m, s, rng, path_y);
  rep.lambda = m.lambda();

  const std::size_t last = rep.chain_x.horizons.size() - 1;
  for (std::size_t i = 0; i < rep.chain_x.series.size(); ++i) {
    const KBSeries& sx = rep.chain_x.series[i];
    const KBSeries& sy = rep.chain_y.series[i];
    ChainAgreement a;
    a.label = sx.label;
    a.mean_x = sx.value[last];
    a.se_x = sx.se[last];
    a.mean_y = sy.value[last];
    a.se_y = sy.se[last];
    double sig = std::sqrt(sqr(a.se_x) + sqr(a.se_y));
    a.verdict = std::abs(a.mean_x - a.mean_y) <= 3.0 * sig
                    ? Verdict::satisfied
                    : Verdict::violated;
    rep.all_agree = rep.all_agree && a.verdict == Verdict::satisfied;
    rep.agreement.push_back(std::move(a));
  }

  // companion pair under one noise, observed on the stride grid from zero
  const SamplePlan pl = plan_of(spec, s.dt);
  std::vector<double> times;
  for (std::uint64_t j = 0; j * pl.k_stride <= pl.total; ++j)
    times.push_back(static_cast<double>(j * pl.k_stride) * s.dt);
  double T_used = static_cast<double>(pl.total) * s.dt;
  PairTrajectory pt =
      simulate_pair_same_noise(x0, y0, T_used, times, m.p, m.grid, m.drift,
                               m.noise, s, rng, path_pair);
  rep.pair_times = pt.times;
  rep.pair_dist = pt.dist_p;
  rep.r0 = pt.dist_p.empty() ? 0.0 : pt.dist_p.front();
  if (rep.lambda > 0.0) {
    rep.envelope_checked = true;
    for (std::size_t j = 0; j < rep.pair_times.size(); ++j) {
      double env = std::exp(-rep.lambda * rep.pair_times[j]) * rep.r0;
      if (env < kEnvelopeFloor) continue;
      ++rep.envelope_points;
      if (rep.pair_dist[j] > (1.0 + kEnvelopeTol) * env + kEnvelopeFloor)
        ++rep.envelope_violations;
    }
  }
  return rep;
}

TvReport tv_decay_profile(const SpectralField& x0, const SpectralField& y0,
                          const std::vector<double>& times, const ModelSpec& m,
                          const SchemeSpec& s, std::size_t n_paths,
                          const CounterRng& rng, std::uint64_t ensemble,
                          int workers, double t0, double tol_mc) {
  if (times.empty()) throw ConfigError("need at least one time");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev) || !std::isfinite(t))
      throw ConfigError("times must be positive and increasing");
    prev = t;
  }
  if (!(x0.grid == m.grid) || !(y0.grid == m.grid))
    throw ConfigError("start states live on a different grid");

  TvReport rep;
  rep.lambda = m.lambda();
  rep.t0 = t0;
  rep.tol_mc = tol_mc;
  SpectralField d0(m.grid);
  for (std::size_t k = 0; k < d0.c.size(); ++k) d0.c[k] = x0.c[k] - y0.c[k];
  rep.r0 = lp_norm(d0, m.p);
  const double gi = m.ginv();

  for (std::size_t j = 0; j < times.size(); ++j) {
    CouplingParams par;
    par.obs_times = {times[j]};
    CouplingEnsemble e =
        run_coupling_ensemble(m, s, x0, y0, times[j], par, n_paths, rng,
                              ensemble + j, workers);
    TvPoint pt;
    pt.t = e.T;
    pt.frac_uncoupled = 1.0 - e.frac_coupled();
    Estimate ad = weight_abs_dev(e, 0);
    pt.mean_abs_dev = ad.mean;
    pt.se_abs_dev = ad.se;
    pt.coupling_bound = 2.0 * pt.frac_uncoupled + pt.mean_abs_dev;
    pt.pinsker_bound =
        std::sqrt(2.0 * rate_factor(rep.lambda, pt.t)) * gi * rep.r0;
    pt.blowups = e.blowups;
    rep.points.push_back(pt);
  }

  std::vector<const TvPoint*> elig;
  for (const TvPoint& pt : rep.points)
    if (pt.t >= t0 - 1e-12) elig.push_back(&pt);
  rep.envelope_checked = rep.lambda > 0.0 && elig.size() >= 2;
  if (rep.envelope_checked) {
    for (std::size_t j = 1; j < elig.size(); ++j) {
      const TvPoint* a = elig[j - 1];
      const TvPoint* b = elig[j];
      double env = std::exp(-rep.lambda * (b->t - a->t));
      if (b->coupling_bound >
          a->coupling_bound * env * (1.0 + tol_mc) + 1e-15)
        rep.envelope_ok_mc = false;
      if (b->pinsker_bound > a->pinsker_bound * env * (1.0 + 1e-9))
        rep.envelope_ok_closed = false;
    }
  }
  return rep;
}

}  // namespace srd
