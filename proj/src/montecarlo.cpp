#include "srdlab/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>

#include "srdlab/parallel.hpp"

namespace srd {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// blown slots are filled with NaN in every coefficient, so one probe suffices
bool live_state(const SpectralField& x) {
  return !x.c.empty() && std::isfinite(x.c[0]);
}

void require_mode(int mode) {
  if (mode < 1) throw ConfigError("observable mode index must be >= 1");
}

}  // namespace

double ModelSpec::lambda() const {
  return compute_lambda(drift.L_f, drift.theta_diss, drift.q, p,
                        grid.eigenvalue(1));
}

double ModelSpec::ginv() const { return g_inverse_norm(noise); }

double rate_factor(double lambda, double T) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw DomainError("rate factor needs a positive finite horizon");
  if (lambda == 0.0) return 1.0 / (2.0 * T);
  return lambda / std::expm1(2.0 * lambda * T);
}

// ---- observables ----

Observable Observable::bounded_trig(double a, double b, int mode) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a > std::abs(b)))
    throw ConfigError("bounded_trig needs a > |b| so it stays positive");
  require_mode(mode);
  Observable o;
  o.kind_ = ObservableKind::bounded_trig;
  o.a_ = a;
  o.b_ = b;
  o.mode_ = mode;
  char buf[96];
  std::snprintf(buf, sizeof buf, "trig(a=%g,b=%g,k=%d)", a, b, mode);
  o.label_ = buf;
  return o;
}

Observable Observable::clipped_exponential(double scale, double lo, double hi,
                                           int mode) {
  if (!std::isfinite(scale) || !std::isfinite(lo) || !std::isfinite(hi) ||
      !(lo > 0.0) || !(hi > lo))
    throw ConfigError("clipped_exponential needs 0 < lo < hi");
  require_mode(mode);
  Observable o;
  o.kind_ = ObservableKind::clipped_exponential;
  o.a_ = scale;
  o.lo_ = lo;
  o.hi_ = hi;
  o.mode_ = mode;
  char buf[96];
  std::snprintf(buf, sizeof buf, "clipexp(s=%g,lo=%g,hi=%g,k=%d)", scale, lo,
                hi, mode);
  o.label_ = buf;
  return o;
}

Observable Observable::indicator_ball(SpectralField center, double radius,
                                      double pn, double offset) {
  if (!std::isfinite(radius) || !(radius > 0.0))
    throw ConfigError("indicator_ball needs a positive radius");
  if (!std::isfinite(pn) || !(pn >= 1.0))
    throw ConfigError("indicator_ball needs a norm exponent >= 1");
  if (!std::isfinite(offset) || offset < 0.0)
    throw ConfigError("indicator_ball offset must be >= 0");
  Observable o;
  o.kind_ = ObservableKind::indicator_ball;
  o.radius_ = radius;
  o.pn_ = pn;
  o.offset_ = offset;
  o.center_ = std::move(center.c);
  char buf[96];
  std::snprintf(buf, sizeof buf, "ball(r=%g,p=%g,off=%g)", radius, pn, offset);
  o.label_ = buf;
  return o;
}

Observable Observable::linear_mode(int mode) {
  require_mode(mode);
  Observable o;
  o.kind_ = ObservableKind::linear_mode;
  o.mode_ = mode;
  char buf[48];
  std::snprintf(buf, sizeof buf, "mode(k=%d)", mode);
  o.label_ = buf;
  return o;
}

double Observable::operator()(const SpectralField& x) const {
  switch (kind_) {
    case ObservableKind::bounded_trig:
    case ObservableKind::clipped_exponential:
    case ObservableKind::linear_mode: {
      if (mode_ > static_cast<int>(x.c.size()))
        throw DomainError("observable mode index exceeds the resolution");
      double v = x.c[mode_ - 1];
      if (kind_ == ObservableKind::bounded_trig) return a_ + b_ * std::sin(v);
      if (kind_ == ObservableKind::linear_mode) return v;
      return std::clamp(std::exp(a_ * v), lo_, hi_);
    }
    case ObservableKind::indicator_ball: {
      if (center_.size() != x.c.size())
        throw DomainError("indicator center lives on a different resolution");
      SpectralField d(x.grid);
      for (std::size_t k = 0; k < d.c.size(); ++k) d.c[k] = x.c[k] - center_[k];
      return offset_ + (lp_norm(d, pn_) <= radius_ ? 1.0 : 0.0);
    }
  }
  throw DomainError("unknown observable kind");
}

bool Observable::strictly_positive() const {
  switch (kind_) {
    case ObservableKind::bounded_trig:
    case ObservableKind::clipped_exponential:
      return true;  // enforced at construction
    case ObservableKind::indicator_ball:
      return offset_ > 0.0;
    case ObservableKind::linear_mode:
      return false;
  }
  return false;
}

// ---- endpoint sampling ----

EndpointSet sample_endpoints(const ModelSpec& m, const SchemeSpec& s,
                             const SpectralField& x0, double T,
                             std::size_t n_paths, const CounterRng& rng,
                             std::uint64_t ensemble, int workers) {
  if (!(x0.grid == m.grid))
    throw ConfigError("start state lives on a different grid");
  if (n_paths == 0) throw ConfigError("need at least one path");
  const std::uint64_t n_steps = horizon_steps(T, s.dt);

  EndpointSet set(m.grid);
  set.T = static_cast<double>(n_steps) * s.dt;
  set.ensemble = ensemble;
  set.states.assign(n_paths, SpectralField(m.grid));
  std::atomic<int> blowups{0};

  parallel_blocks(n_paths, workers,
                  [&](std::uint64_t, std::uint64_t b, std::uint64_t e) {
    // per-block simulator: its scratch buffers are not shareable
    PathSimulator sim(m.grid, m.drift, m.noise, s);
    for (std::uint64_t i = b; i < e; ++i) {
      TrajectoryState st = sim.init(x0);
      const std::uint64_t pid =
          path_id(static_cast<std::uint32_t>(ensemble), i);
      try {
        for (std::uint64_t k = 0; k < n_steps; ++k) sim.advance(st, rng, pid);
        set.states[i] = st.x;
      } catch (const BlowUpError&) {
        std::fill(set.states[i].c.begin(), set.states[i].c.end(), kNan);
        blowups.fetch_add(1, std::memory_order_relaxed);
      }
    }
  });
  set.blowups = blowups.load();
  return set;
}

RunningMoments moments_on(const EndpointSet& set, const Observable& phi) {
  RunningMoments mo;
  for (const auto& x : set.states)
    if (live_state(x)) mo.add(phi(x));
  return mo;
}

Estimate estimate_on(const EndpointSet& set, const Observable& phi) {
  RunningMoments mo = moments_on(set, phi);
  return Estimate{mo.mean(), mo.stderror(), mo.n};
}

// ---- coupling ensembles ----

double CouplingEnsemble::frac_coupled() const {
  if (n == 0) return 0.0;
  std::size_t c = 0;
  for (auto b : coupled) c += b;
  return static_cast<double>(c) / static_cast<double>(n);
}

double CouplingEnsemble::min_margin() const {
  double m = kNan;
  for (double v : cert_margin)
    if (std::isfinite(v) && !(m < v)) m = std::isfinite(m) ? std::min(m, v) : v;
  return m;
}

double CouplingEnsemble::max_v_energy() const {
  double m = kNan;
  for (double v : v_energy)
    if (std::isfinite(v)) m = std::isfinite(m) ? std::max(m, v) : v;
  return m;
}

CouplingEnsemble run_coupling_ensemble(const ModelSpec& m, const SchemeSpec& s,
                                       const SpectralField& x0,
                                       const SpectralField& y0, double T,
                                       const CouplingParams& par,
                                       std::size_t n_paths,
                                       const CounterRng& rng,
                                       std::uint64_t ensemble, int workers) {
  if (n_paths == 0) throw ConfigError("need at least one pair");
  const std::uint64_t n_steps = horizon_steps(T, s.dt);

  CouplingParams rp = par;
  rp.record_trace = false;  // per-path traces do not scale to ensembles

  CouplingEnsemble e;
  e.n = n_paths;
  e.T = static_cast<double>(n_steps) * s.dt;
  e.obs_times.reserve(par.obs_times.size());
  for (double t : par.obs_times)
    e.obs_times.push_back(static_cast<double>(snap_to_grid(t, s.dt, n_steps)) *
                          s.dt);
  const std::size_t n_obs = e.obs_times.size();

  e.coupled.assign(n_paths, 0);
  e.tau.assign(n_paths, kNan);
  e.v_energy.assign(n_paths, kNan);
  e.cert_margin.assign(n_paths, kNan);
  e.log_m_final.assign(n_paths, kNan);
  e.log_m_at.assign(n_paths * n_obs, kNan);

  std::atomic<int> blowups{0};
  std::atomic<long> violations{0};
  std::atomic<bool> have_meta{false};

  parallel_blocks(n_paths, workers,
                  [&](std::uint64_t, std::uint64_t b, std::uint64_t en) {
    CouplingDriver drv(m.grid, m.drift, m.noise, s, m.p);
    for (std::uint64_t i = b; i < en; ++i) {
      CouplingResult r = drv.run(
          x0, y0, T, rp, rng, path_id(static_cast<std::uint32_t>(ensemble), i));
      if (!have_meta.exchange(true)) {
        e.r0 = r.r0;  // identical for every path
        e.cert_bound = r.cert_bound;
      }
      violations.fetch_add(r.cert_violations, std::memory_order_relaxed);
      if (r.blew_up) {
        blowups.fetch_add(1, std::memory_order_relaxed);
        continue;  // row keeps its NaNs
      }
      e.coupled[i] = r.coupled ? 1 : 0;
      if (r.coupled) e.tau[i] = r.tau;
      e.v_energy[i] = r.v_energy;
      e.cert_margin[i] = r.cert_margin;
      e.log_m_final[i] = r.log_m;
      for (std::size_t j = 0; j < n_obs; ++j)
        e.log_m_at[i * n_obs + j] = r.log_m_at[j];
    }
  });
  e.blowups = blowups.load();
  e.cert_violations = violations.load();
  return e;
}

namespace {

template <class F>
Estimate weight_stat(const CouplingEnsemble& e, std::size_t j, F&& f) {
  if (j >= e.obs_times.size())
    throw DomainError("observation index out of range");
  const std::size_t n_obs = e.obs_times.size();
  RunningMoments mo;
  for (std::size_t i = 0; i < e.n; ++i) {
    double lm = e.log_m_at[i * n_obs + j];
    if (std::isfinite(lm)) mo.add(f(lm));
  }
  return Estimate{mo.mean(), mo.stderror(), mo.n};
}

}  // namespace

Estimate weight_mean(const CouplingEnsemble& e, std::size_t j) {
  return weight_stat(e, j, [](double lm) { return std::exp(lm); });
}

Estimate weight_entropy(const CouplingEnsemble& e, std::size_t j) {
  return weight_stat(e, j, [](double lm) { return std::exp(lm) * lm; });
}

Estimate weight_power(const CouplingEnsemble& e, std::size_t j, double expo) {
  if (!std::isfinite(expo)) throw DomainError("weight exponent must be finite");
  return weight_stat(e, j, [expo](double lm) { return std::exp(expo * lm); });
}

Estimate weight_abs_dev(const CouplingEnsemble& e, std::size_t j) {
  return weight_stat(e, j, [](double lm) { return std::abs(std::exp(lm) - 1.0); });
}

// ---- checkers ----

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated_beyond_3sigma";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// shared fail-closed policy for weight-based checks
bool ensemble_unreliable(const CouplingEnsemble& e, std::string& note) {
  if (e.blowups > 0) {
    note = "blow-ups in the coupling ensemble";
    return true;
  }
  if (e.frac_coupled() < 0.99) {
    note = "fewer than 99% of the pairs coupled by the horizon";
    return true;
  }
  return false;
}

Verdict three_sigma_verdict(double lhs, double rhs, double sigma) {
  return lhs <= rhs + 3.0 * sigma ? Verdict::satisfied : Verdict::violated;
}

}  // namespace

std::vector<CheckOutcome> check_entropy(const CouplingEnsemble& e,
                                        const ModelSpec& m) {
  const double gi = m.ginv();
  const double lam = m.lambda();
  std::string bad_note;
  const bool bad = ensemble_unreliable(e, bad_note);
  std::vector<CheckOutcome> out;
  out.reserve(e.obs_times.size());
  for (std::size_t j = 0; j < e.obs_times.size(); ++j) {
    CheckOutcome c;
    Estimate ent = weight_entropy(e, j);
    c.lhs = ent.mean;
    c.sigma = ent.se;
    c.rhs = rate_factor(lam, e.obs_times[j]) * gi * gi * e.r0 * e.r0;
    if (bad) {
      c.verdict = Verdict::inconclusive;
      c.note = bad_note;
    } else {
      c.verdict = three_sigma_verdict(c.lhs, c.rhs, c.sigma);
    }
    out.push_back(std::move(c));
  }
  return out;
}

CheckOutcome check_power(const CouplingEnsemble& e, const ModelSpec& m,
                         double s) {
  if (!std::isfinite(s) || !(s > 1.0))
    throw DomainError("power index must exceed 1");
  const double expo = s / (s - 1.0);
  RunningMoments mo;
  for (std::size_t i = 0; i < e.n; ++i) {
    double lm = e.log_m_final[i];
    if (std::isfinite(lm)) mo.add(std::exp(expo * lm));
  }
  CheckOutcome c;
  c.lhs = mo.mean();
  c.sigma = mo.stderror();
  c.rhs = std::exp(s * rate_factor(m.lambda(), e.T) * sqr(m.ginv()) * e.r0 *
                   e.r0 / sqr(s - 1.0));
  std::string bad_note;
  if (ensemble_unreliable(e, bad_note)) {
    c.verdict = Verdict::inconclusive;
    c.note = bad_note;
  } else {
    c.verdict = three_sigma_verdict(c.lhs, c.rhs, c.sigma);
    if (mo.excess_kurtosis() > 5.0)
      c.note = "heavy-tailed weight sample, standard error may be optimistic";
  }
  return c;
}

bool power_bound_decreasing(const ModelSpec& m, double r0, double s,
                            const std::vector<double>& times) {
  if (!std::isfinite(s) || !(s > 1.0))
    throw DomainError("power index must exceed 1");
  if (times.size() < 2) throw DomainError("need at least two times");
  const double gi = m.ginv();
  const double lam = m.lambda();
  double prev_t = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double t : times) {
    if (!(t > prev_t)) throw DomainError("times must be positive increasing");
    prev_t = t;
    double v = std::exp(s * rate_factor(lam, t) * gi * gi * r0 * r0 /
                        sqr(s - 1.0));
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

CheckOutcome check_novikov(const CouplingEnsemble& e, const ModelSpec& m,
                           double dt) {
  CouplingSchedule sch(m.lambda(), e.T);
  CheckOutcome c;
  c.rhs = 0.5 * sqr(m.ginv()) * certificate_bound(sch, e.r0, dt);
  c.sigma = 0.0;  // pathwise deterministic budget
  long over = 0;
  std::size_t live = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (double v : e.v_energy) {
    if (!std::isfinite(v)) continue;
    ++live;
    worst = std::max(worst, v);
    if (v > c.rhs * (1.0 + 1e-12)) ++over;
  }
  c.lhs = live ? worst : kNan;
  if (e.blowups > 0 || live == 0) {
    c.verdict = Verdict::inconclusive;
    c.note = live == 0 ? "no surviving paths" : "blow-ups in the coupling ensemble";
  } else if (over == 0) {
    c.verdict = Verdict::satisfied;
  } else {
    c.verdict = Verdict::violated;
    c.note = std::to_string(over) + " paths exceeded the energy budget";
  }
  return c;
}

CheckOutcome check_log_harnack(const EndpointSet& from_y,
                               const EndpointSet& from_x,
                               const Observable& phi, const ModelSpec& m,
                               double r) {
  if (!phi.strictly_positive())
    throw ConfigError(
        "log bound needs a strictly positive observable, got " + phi.label());
  if (!std::isfinite(r) || !(r > 0.0))
    throw DomainError("distance r must be positive");
  if (from_y.T != from_x.T)
    throw DomainError("endpoint sets use different horizons");

  RunningMoments logs;
  for (const auto& x : from_y.states)
    if (live_state(x)) logs.add(std::log(phi(x)));
  Estimate px = estimate_on(from_x, phi);

  CheckOutcome c;
  c.lhs = logs.mean();
  c.rhs = std::log(px.mean) +
          rate_factor(m.lambda(), from_x.T) * sqr(m.ginv()) * r * r;
  double se_log_px = px.mean > 0.0 ? px.se / px.mean : 0.0;
  c.sigma = std::sqrt(sqr(logs.stderror()) + sqr(se_log_px));
  if (from_y.blowups > 0 || from_x.blowups > 0) {
    c.verdict = Verdict::inconclusive;
    c.note = "blow-ups in the endpoint ensembles";
  } else {
    c.verdict = three_sigma_verdict(c.lhs, c.rhs, c.sigma);
  }
  return c;
}

CheckOutcome check_power_harnack(const EndpointSet& from_y,
                                 const EndpointSet& from_x,
                                 const Observable& phi, const ModelSpec& m,
                                 double r, double s) {
  if (phi.kind() == ObservableKind::linear_mode)
    throw ConfigError("power bound needs a nonnegative observable, got " +
                      phi.label());
  if (!std::isfinite(r) || !(r > 0.0))
    throw DomainError("distance r must be positive");
  if (!std::isfinite(s) || !(s > 1.0))
    throw DomainError("power index must exceed 1");
  if (from_y.T != from_x.T)
    throw DomainError("endpoint sets use different horizons");

  Estimate py = estimate_on(from_y, phi);
  RunningMoments pow_x;
  for (const auto& x : from_x.states)
    if (live_state(x)) pow_x.add(std::pow(phi(x), s));

  const double factor = std::exp(
      s * rate_factor(m.lambda(), from_x.T) * sqr(m.ginv()) * r * r / (s - 1.0));

  CheckOutcome c;
  c.lhs = std::pow(py.mean, s);
  c.rhs = pow_x.mean() * factor;
  double se_lhs = s * std::pow(std::abs(py.mean), s - 1.0) * py.se;
  double se_rhs = pow_x.stderror() * factor;
  c.sigma = std::sqrt(sqr(se_lhs) + sqr(se_rhs));
  if (from_y.blowups > 0 || from_x.blowups > 0) {
    c.verdict = Verdict::inconclusive;
    c.note = "blow-ups in the endpoint ensembles";
  } else {
    c.verdict = three_sigma_verdict(c.lhs, c.rhs, c.sigma);
  }
  return c;
}

GradientCheck check_gradient(const ModelSpec& m, const SchemeSpec& s,
                             const SpectralField& x, const SpectralField& h,
                             double eps, double T, const Observable& phi,
                             std::size_t n_paths, const CounterRng& rng,
                             std::uint64_t ensemble, int workers) {
  if (!std::isfinite(eps) || !(eps > 0.0))
    throw DomainError("probe size eps must be positive");
  if (!(h.grid == m.grid) || !(x.grid == m.grid))
    throw ConfigError("probe state or direction lives on a different grid");
  const double hn = l2_coeff_norm(h);
  if (!(hn > 0.0)) throw ConfigError("probe direction must be nonzero");

  auto shifted = [&](double c) {
    SpectralField z = x;
    for (std::size_t k = 0; k < z.c.size(); ++k) z.c[k] += c * h.c[k] / hn;
    return z;
  };

  // the four shifted starts share one ensemble id, so path i sees the same
  // noise in all of them and the differences subtract that noise away
  EndpointSet plus = sample_endpoints(m, s, shifted(eps), T, n_paths, rng,
                                      ensemble, workers);
  EndpointSet minus = sample_endpoints(m, s, shifted(-eps), T, n_paths, rng,
                                       ensemble, workers);
  EndpointSet plus_h = sample_endpoints(m, s, shifted(0.5 * eps), T, n_paths,
                                        rng, ensemble, workers);
  EndpointSet minus_h = sample_endpoints(m, s, shifted(-0.5 * eps), T, n_paths,
                                         rng, ensemble, workers);
  // the variance factor comes from an independent ensemble at the center
  EndpointSet center =
      sample_endpoints(m, s, x, T, n_paths, rng, ensemble + 1, workers);

  RunningMoments diff, diff_h;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (live_state(plus.states[i]) && live_state(minus.states[i]))
      diff.add((phi(plus.states[i]) - phi(minus.states[i])) / (2.0 * eps));
    if (live_state(plus_h.states[i]) && live_state(minus_h.states[i]))
      diff_h.add((phi(plus_h.states[i]) - phi(minus_h.states[i])) / eps);
  }

  GradientCheck g;
  g.fd = diff.mean();
  g.fd_half = diff_h.mean();
  double scale = std::max(std::abs(g.fd), std::abs(g.fd_half));
  g.richardson_ok =
      scale < 1e-12 || std::abs(g.fd - g.fd_half) <= 0.1 * scale;

  RunningMoments cm = moments_on(center, phi);
  const double var = cm.variance();
  const double coef = std::sqrt(2.0 * rate_factor(m.lambda(), T) * sqr(m.ginv()));
  g.rhs = coef * std::sqrt(var);

  // delta method through sqrt(var); the variance of a sample variance is
  // sigma^4 (kappa_excess + 2) / n
  double se_rhs = 0.0;
  if (var > 0.0 && cm.n > 1) {
    double kp2 = std::max(0.0, cm.excess_kurtosis() + 2.0);
    double se_var = var * std::sqrt(kp2 / static_cast<double>(cm.n));
    se_rhs = coef * se_var / (2.0 * std::sqrt(var));
  }

  g.outcome.lhs = std::abs(g.fd);
  g.outcome.rhs = g.rhs;
  g.outcome.sigma = std::sqrt(sqr(diff.stderror()) + sqr(se_rhs));
  int blow = plus.blowups + minus.blowups + plus_h.blowups + minus_h.blowups +
             center.blowups;
  if (blow > 0) {
    g.outcome.verdict = Verdict::inconclusive;
    g.outcome.note = "blow-ups in the probe ensembles";
  } else if (!g.richardson_ok) {
    g.outcome.verdict = Verdict::inconclusive;
    g.outcome.note = "finite difference not in its asymptotic regime";
  } else {
    g.outcome.verdict =
        three_sigma_verdict(g.outcome.lhs, g.outcome.rhs, g.outcome.sigma);
  }
  return g;
}

}  // namespace srd
