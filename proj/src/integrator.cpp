#include "srdlab/integrator.hpp"

#include <cmath>

#include "srdlab/common.hpp"

namespace srd {

namespace {

constexpr double kAutoTamingThreshold = 10.0;

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// scaled so that entries near the overflow threshold still give a finite norm
double coeff_norm(const std::vector<double>& c) {
  double m = 0.0;
  for (double x : c) m = std::max(m, std::abs(x));
  if (m == 0.0) return 0.0;
  CompensatedSum s;
  for (double x : c) s.add((x / m) * (x / m));
  return m * std::sqrt(s.value());
}

}  // namespace

SchemeSpec::SchemeSpec(double step, SchemeKind k, std::optional<double> tame)
    : dt(step), kind(k), taming(tame) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("scheme: dt must be positive and finite");
  if (taming && (!(*taming > 0.0) || !std::isfinite(*taming)))
    throw ConfigError("scheme: taming strength must be positive and finite");
}

PathSimulator::PathSimulator(const GridSpec& g, const DriftSpec& d,
                             const NoiseSpec& n, const SchemeSpec& s)
    : grid_(g),
      drift_(d),
      noise_(n),
      scheme_(s),
      plan_(transform_plan(g)),
      tb_(OuStepTables::make(g, n.theta, s.dt)) {
  if (n.n_modes != g.n_modes)
    throw ConfigError("integrator: noise mode count does not match the grid");
  decay_half_.resize(g.n_modes);
  for (int k = 0; k < g.n_modes; ++k)
    decay_half_[k] = std::exp(-0.5 * grid_.eigenvalue(k + 1) * s.dt);
  vals_.resize(g.n_quad);
  fvals_.resize(g.n_quad);
  fhat_.resize(g.n_modes);
  xtmp_.resize(g.n_modes);
  inc_.dbeta.resize(g.n_modes);
  inc_.eta.resize(g.n_modes);
}

TrajectoryState PathSimulator::init(const SpectralField& x0) const {
  if (!(x0.grid == grid_))
    throw ConfigError("integrator: initial state lives on a different grid");
  return TrajectoryState(x0);
}

void PathSimulator::advance(TrajectoryState& st, const CounterRng& rng,
                            std::uint64_t path) const {
  sample_increments(tb_, rng, path, st.step, inc_);
  advance_with(st, inc_);
}

void PathSimulator::advance_with(TrajectoryState& st,
                                 const ModeIncrements& inc) const {
  if (inc.eta.size() != static_cast<std::size_t>(grid_.n_modes))
    throw ConfigError("integrator: increment vector size mismatch");
  if (scheme_.kind == SchemeKind::exponential_euler)
    step_exponential(st, inc);
  else
    step_splitting(st, inc);
}

void PathSimulator::apply_taming(std::size_t count) const {
  double tau = 0.0;
  if (scheme_.taming) {
    tau = *scheme_.taming;
  } else if (scheme_.auto_taming) {
    double fmax = 0.0;
    for (std::size_t j = 0; j < count; ++j)
      fmax = std::max(fmax, std::abs(fvals_[j]));
    if (scheme_.dt * fmax > kAutoTamingThreshold) tau = 1.0;
  }
  if (tau == 0.0) return;
  for (std::size_t j = 0; j < count; ++j)
    fvals_[j] /= 1.0 + tau * scheme_.dt * std::abs(fvals_[j]);
}

void PathSimulator::reaction_hat(const SpectralField& x,
                                 std::vector<double>& fhat) const {
  plan_->synthesize(x.c.data(), vals_.data());
  for (int j = 0; j < grid_.n_quad; ++j) fvals_[j] = drift_.f(vals_[j]);
  apply_taming(grid_.n_quad);
  fhat.resize(grid_.n_modes);
  plan_->analyze(fvals_.data(), fhat.data());
}

void PathSimulator::finish_step(TrajectoryState& st, const ModeIncrements& inc,
                                double prev_norm) const {
  for (int k = 0; k < grid_.n_modes; ++k)
    st.w_a.c[k] = tb_.decay[k] * st.w_a.c[k] + inc.eta[k];
  st.step += 1;
  st.t = static_cast<double>(st.step) * scheme_.dt;
  if (!all_finite(st.x.c)) throw BlowUpError(st.t, prev_norm);
}

void PathSimulator::step_exponential(TrajectoryState& st,
                                     const ModeIncrements& inc) const {
  double prev_norm = coeff_norm(st.x.c);
  reaction_hat(st.x, fhat_);
  for (int k = 0; k < grid_.n_modes; ++k)
    st.x.c[k] =
        tb_.decay[k] * st.x.c[k] + tb_.psi[k] * fhat_[k] + inc.eta[k];
  finish_step(st, inc, prev_norm);
}

void PathSimulator::step_splitting(TrajectoryState& st,
                                   const ModeIncrements& inc) const {
  double prev_norm = coeff_norm(st.x.c);
  // half linear flow, full reaction flow node by node, half linear flow,
  // then the exact stochastic convolution increment
  for (int k = 0; k < grid_.n_modes; ++k)
    xtmp_[k] = decay_half_[k] * st.x.c[k];
  plan_->synthesize(xtmp_.data(), vals_.data());
  const int sub = 4;
  double h = scheme_.dt / sub;
  for (int j = 0; j < grid_.n_quad; ++j) {
    double v = vals_[j];
    for (int i = 0; i < sub; ++i) {
      double k1 = drift_.f(v);
      double k2 = drift_.f(v + 0.5 * h * k1);
      double k3 = drift_.f(v + 0.5 * h * k2);
      double k4 = drift_.f(v + h * k3);
      v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    vals_[j] = v;
  }
  plan_->analyze(vals_.data(), xtmp_.data());
  for (int k = 0; k < grid_.n_modes; ++k)
    st.x.c[k] = decay_half_[k] * xtmp_[k] + inc.eta[k];
  finish_step(st, inc, prev_norm);
}

std::uint64_t horizon_steps(double T, double dt) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw ConfigError("horizon must be positive and finite");
  double ratio = T / dt;
  auto n = static_cast<std::uint64_t>(std::llround(ratio));
  if (n == 0 ||
      std::abs(T - static_cast<double>(n) * dt) > 1e-12 * std::max(1.0, T))
    throw ConfigError("dt must divide the horizon T to within 1e-12");
  return n;
}

std::uint64_t snap_to_grid(double t, double dt, std::uint64_t n_steps) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ConfigError("observation times must be nonnegative and finite");
  auto idx = static_cast<std::uint64_t>(std::llround(t / dt));
  if (std::abs(t - static_cast<double>(idx) * dt) > 1e-9 * std::max(1.0, t))
    throw ConfigError("observation time does not lie on the step grid");
  if (idx > n_steps)
    throw ConfigError("observation time lies beyond the horizon");
  return idx;
}

Trajectory simulate_path(const SpectralField& x0, double T,
                         const std::vector<double>& obs_times,
                         const GridSpec& g, const DriftSpec& d,
                         const NoiseSpec& n, const SchemeSpec& s,
                         const CounterRng& rng, std::uint64_t path,
                         const StepObserver& observer) {
  std::uint64_t n_steps = horizon_steps(T, s.dt);
  std::vector<std::uint64_t> idx(obs_times.size());
  for (std::size_t i = 0; i < obs_times.size(); ++i)
    idx[i] = snap_to_grid(obs_times[i], s.dt, n_steps);

  PathSimulator sim(g, d, n, s);
  TrajectoryState st = sim.init(x0);
  Trajectory out;
  out.times.reserve(obs_times.size());
  out.states.reserve(obs_times.size());
  out.wa.reserve(obs_times.size());
  auto record = [&](std::uint64_t step) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] == step) {
        out.times.push_back(st.t);
        out.states.push_back(st.x);
        out.wa.push_back(st.w_a);
      }
  };
  if (observer) observer(st);
  record(0);
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    sim.advance(st, rng, path);
    if (observer) observer(st);
    record(k + 1);
  }
  return out;
}

PairTrajectory simulate_pair_same_noise(const SpectralField& x0,
                                        const SpectralField& y0, double T,
                                        const std::vector<double>& obs_times,
                                        double p, const GridSpec& g,
                                        const DriftSpec& d, const NoiseSpec& n,
                                        const SchemeSpec& s,
                                        const CounterRng& rng,
                                        std::uint64_t path) {
  std::uint64_t n_steps = horizon_steps(T, s.dt);
  std::vector<std::uint64_t> idx(obs_times.size());
  for (std::size_t i = 0; i < obs_times.size(); ++i)
    idx[i] = snap_to_grid(obs_times[i], s.dt, n_steps);

  PathSimulator sim(g, d, n, s);
  TrajectoryState sx = sim.init(x0);
  TrajectoryState sy = sim.init(y0);
  ModeIncrements inc;
  inc.dbeta.resize(g.n_modes);
  inc.eta.resize(g.n_modes);
  SpectralField diff(g);
  PairTrajectory out;
  auto record = [&](std::uint64_t step) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] == step) {
        for (int k = 0; k < g.n_modes; ++k)
          diff.c[k] = sx.x.c[k] - sy.x.c[k];
        out.times.push_back(sx.t);
        out.dist_p.push_back(lp_norm(diff, p));
        out.x.push_back(sx.x);
        out.y.push_back(sy.x);
      }
  };
  record(0);
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    sample_increments(sim.tables(), rng, path, sx.step, inc);
    sim.advance_with(sx, inc);
    sim.advance_with(sy, inc);
    record(k + 1);
  }
  return out;
}

}  // namespace srd
