#include "srdlab/coupling.hpp"

#include <cmath>
#include <limits>

#include "srdlab/common.hpp"

namespace srd {

namespace {

constexpr int kSubstepCap = 1024;
constexpr double kCertStepAllowance = 10.0;  // slack in units of dt

// exact integrating factor of z' = -z/gamma(T - r) across remaining times
// [ra, rb]; equals expm1(-2 l ra)/expm1(-2 l rb), or ra/rb when l = 0
double closed_factor(double lambda, double ra, double rb) {
  if (lambda == 0.0) return ra / rb;
  return std::expm1(-2.0 * lambda * ra) / std::expm1(-2.0 * lambda * rb);
}

}  // namespace

CouplingSchedule::CouplingSchedule(double rate, double horizon)
    : lambda(rate), T(horizon) {
  if (!std::isfinite(rate)) throw ConfigError("coupling: rate must be finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ConfigError("coupling: horizon must be positive and finite");
}

double CouplingSchedule::gamma_rem(double r) const {
  if (!(r >= 0.0)) throw DomainError("gamma: remaining time must be >= 0");
  if (lambda == 0.0) return r;
  return std::expm1(2.0 * lambda * r) / (2.0 * lambda);
}

double shrink_factor(const CouplingSchedule& sch, double rem_before,
                     double rem_after, int& n_substeps) {
  if (!(rem_after >= 0.0) || !(rem_before > rem_after))
    throw DomainError("shrink_factor: need rem_before > rem_after >= 0");
  double rho = 1.0;
  double r = rem_before;
  n_substeps = 0;
  while (r > rem_after) {
    double g = sch.gamma_rem(r);
    if (n_substeps >= kSubstepCap) {
      rho *= closed_factor(sch.lambda, rem_after, r);
      break;
    }
    double h = g / 10.0;
    bool last = h >= r - rem_after;
    if (last) h = r - rem_after;
    rho *= 1.0 - h / g;
    ++n_substeps;
    if (last) break;
    r -= h;
  }
  return rho;
}

double certificate_bound(const CouplingSchedule& sch, double r0, double dt) {
  return r0 * r0 / sch.gamma0() + kCertStepAllowance * dt;
}

CouplingDriver::CouplingDriver(const GridSpec& g, const DriftSpec& d,
                               const NoiseSpec& n, const SchemeSpec& s,
                               double p_contraction)
    : sim_(g, d, n, s), p_(p_contraction) {
  if (s.kind != SchemeKind::exponential_euler)
    throw ConfigError("coupling: the pair drift correction is defined for "
                      "the exponential scheme only");
  if (!(p_ >= 2.0))
    throw ConfigError("coupling: contraction exponent must be >= 2");
  lambda_ = compute_lambda(d.L_f, d.theta_diss, d.q, p_, g.eigenvalue(1));
  fhat_x_.resize(g.n_modes);
  fhat_y_.resize(g.n_modes);
  inc_.dbeta.resize(g.n_modes);
  inc_.eta.resize(g.n_modes);
}

CouplingSchedule CouplingDriver::schedule(double T) const {
  return CouplingSchedule(lambda_, T);
}

CouplingResult CouplingDriver::run(const SpectralField& x0,
                                   const SpectralField& y0, double T,
                                   const CouplingParams& par,
                                   const CounterRng& rng,
                                   std::uint64_t path) const {
  const GridSpec& g = sim_.grid();
  if (!(x0.grid == g) || !(y0.grid == g))
    throw ConfigError("coupling: initial states live on a different grid");
  if (par.record_trace && par.trace_stride < 1)
    throw ConfigError("coupling: trace stride must be >= 1");
  double dt = sim_.dt();
  std::uint64_t n_steps = horizon_steps(T, dt);
  CouplingSchedule sch = schedule(T);
  const OuStepTables& tb = sim_.tables();
  int nm = g.n_modes;

  std::vector<std::uint64_t> obs_idx(par.obs_times.size());
  for (std::size_t i = 0; i < par.obs_times.size(); ++i)
    obs_idx[i] = snap_to_grid(par.obs_times[i], dt, n_steps);

  CouplingResult res(g);
  res.obs_times = par.obs_times;
  res.log_m_at.assign(par.obs_times.size(),
                      std::numeric_limits<double>::quiet_NaN());
  res.dist_at.assign(par.obs_times.size(),
                     std::numeric_limits<double>::quiet_NaN());

  SpectralField x(g), y(g), dfield(g);
  x.c = x0.c;
  for (int k = 0; k < nm; ++k) dfield.c[k] = x0.c[k] - y0.c[k];
  double dist = lp_norm(dfield, p_);
  res.r0 = dist;
  res.cert_bound = certificate_bound(sch, dist, dt);
  res.cert_margin = std::numeric_limits<double>::infinity();

  CompensatedSum log_m, v_energy, cert_sum;
  bool coupled = false;
  double tau = 0.0;
  if (dist <= par.eps_couple) {
    coupled = true;
    for (int k = 0; k < nm; ++k) dfield.c[k] = 0.0;
    dist = 0.0;
  }

  auto record_obs = [&](std::uint64_t step) {
    for (std::size_t i = 0; i < obs_idx.size(); ++i)
      if (obs_idx[i] == step) {
        res.log_m_at[i] = log_m.value();
        res.dist_at[i] = dist;
      }
  };
  record_obs(0);
  if (par.record_trace)
    res.trace.push_back({0.0, dist, sch.gamma_rem(sch.T), log_m.value()});

  for (std::uint64_t i = 0; i < n_steps; ++i) {
    double rem_b = static_cast<double>(n_steps - i) * dt;
    double rem_a = static_cast<double>(n_steps - i - 1) * dt;
    sample_increments(tb, rng, path, i, inc_);

    if (!coupled) {
      double gb = sch.gamma_rem(rem_b);
      if (!(gb > 1e-300) || !std::isfinite(gb)) {
        // unreachable for sane horizons; forces the pair together safely
        res.safeguard_hit = true;
        coupled = true;
        tau = static_cast<double>(i) * dt;
        for (int k = 0; k < nm; ++k) dfield.c[k] = 0.0;
        dist = 0.0;
      } else {
        CompensatedSum vnorm2, vdot;
        for (int k = 0; k < nm; ++k) {
          double vk = tb.ginv_scale[k] * dfield.c[k] / gb;
          vnorm2.add(vk * vk);
          vdot.add(vk * inc_.dbeta[k]);
        }
        log_m.add(-vdot.value());
        log_m.add(-0.5 * vnorm2.value() * dt);
        v_energy.add(0.5 * vnorm2.value() * dt);
        cert_sum.add(dist * dist / (gb * gb) * dt);
      }
    }

    sim_.reaction_hat(x, fhat_x_);
    if (!coupled) {
      for (int k = 0; k < nm; ++k) y.c[k] = x.c[k] - dfield.c[k];
      sim_.reaction_hat(y, fhat_y_);
    }
    for (int k = 0; k < nm; ++k)
      x.c[k] = tb.decay[k] * x.c[k] + tb.psi[k] * fhat_x_[k] + inc_.eta[k];
    bool finite = true;
    for (int k = 0; k < nm; ++k)
      if (!std::isfinite(x.c[k])) finite = false;
    if (!finite) {
      res.blew_up = true;
      break;
    }

    if (!coupled) {
      int nsub = 0;
      double rho = shrink_factor(sch, rem_b, rem_a, nsub);
      if (nsub > res.max_substeps) res.max_substeps = nsub;
      for (int k = 0; k < nm; ++k)
        dfield.c[k] =
            rho * (tb.decay[k] * dfield.c[k] + tb.psi[k] * (fhat_x_[k] - fhat_y_[k]));
      dist = lp_norm(dfield, p_);

      double lhs = cert_sum.value();
      if (rem_a > 0.0) lhs += dist * dist / sch.gamma_rem(rem_a);
      double margin = res.cert_bound - lhs;
      if (margin < res.cert_margin) res.cert_margin = margin;
      if (lhs > res.cert_bound) ++res.cert_violations;

      if (dist <= par.eps_couple) {
        coupled = true;
        tau = static_cast<double>(i + 1) * dt;
        for (int k = 0; k < nm; ++k) dfield.c[k] = 0.0;
        dist = 0.0;
      }
    }

    record_obs(i + 1);
    if (par.record_trace &&
        (i + 1) % static_cast<std::uint64_t>(par.trace_stride) == 0) {
      double t_next = static_cast<double>(i + 1) * dt;
      res.trace.push_back({t_next, dist, sch.gamma_rem(rem_a), log_m.value()});
    }
  }

  res.coupled = coupled;
  res.tau = tau;
  res.log_m = log_m.value();
  res.v_energy = v_energy.value();
  res.x_final.c = x.c;
  for (int k = 0; k < nm; ++k) res.y_final.c[k] = x.c[k] - dfield.c[k];
  return res;
}

}  // namespace srd
