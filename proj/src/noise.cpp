#include "srdlab/noise.hpp"

#include <cmath>
#include <numbers>

namespace srd {
namespace {
constexpr double kPi = std::numbers::pi;
}

NoiseSpec::NoiseSpec(double theta_noise, int modes, std::uint64_t seed_value)
    : theta(theta_noise), n_modes(modes), seed(seed_value) {
  if (!(theta < 0.5))
    throw DomainError(
        "noise: theta must be < 1/2 (the mode variance series diverges)");
  if (theta < 0.0) throw DomainError("noise: theta must be >= 0");
  if (modes < 1) throw DomainError("noise: n_modes must be >= 1");
}

OuStepTables OuStepTables::make(const GridSpec& g, double theta, double dt) {
  if (!(dt > 0.0)) throw DomainError("noise tables: dt must be positive");
  OuStepTables tb;
  tb.dt = dt;
  tb.theta = theta;
  const int n = g.n_modes;
  tb.decay.resize(static_cast<std::size_t>(n));
  tb.psi.resize(static_cast<std::size_t>(n));
  tb.c_shared.resize(static_cast<std::size_t>(n));
  tb.c_extra.resize(static_cast<std::size_t>(n));
  tb.g_scale.resize(static_cast<std::size_t>(n));
  tb.ginv_scale.resize(static_cast<std::size_t>(n));
  const double sdt = std::sqrt(dt);
  for (int k = 1; k <= n; ++k) {
    const double lam = g.eigenvalue(k);
    const double z = lam * dt;
    const std::size_t i = static_cast<std::size_t>(k - 1);
    tb.decay[i] = std::exp(-z);
    tb.psi[i] = -std::expm1(-z) / lam;
    tb.g_scale[i] = std::pow(lam, theta / 2.0);
    tb.ginv_scale[i] = std::pow(lam, -theta / 2.0);
    const double var = std::pow(lam, theta - 1.0) * (-std::expm1(-2.0 * z)) / 2.0;
    const double cov = tb.g_scale[i] * tb.psi[i];
    tb.c_shared[i] = cov / sdt;
    const double extra2 = var - cov * cov / dt;
    tb.c_extra[i] = extra2 > 0.0 ? std::sqrt(extra2) : 0.0;
  }
  return tb;
}

void sample_increments(const OuStepTables& tb, const CounterRng& rng,
                       std::uint64_t path, std::uint64_t step,
                       ModeIncrements& out) {
  const std::size_t n = tb.decay.size();
  out.dbeta.resize(n);
  out.eta.resize(n);
  const double sdt = std::sqrt(tb.dt);
  for (std::size_t k = 0; k < n; ++k) {
    auto [z1, z2] =
        rng.normal_pair(stream_id(path, static_cast<std::uint32_t>(k + 1)), step);
    out.dbeta[k] = sdt * z1;
    out.eta[k] = tb.c_shared[k] * z1 + tb.c_extra[k] * z2;
  }
}

SpectralField wiener_increment(const NoiseSpec& n, const GridSpec& g, double dt,
                               const CounterRng& rng, std::uint64_t path,
                               std::uint64_t step) {
  if (!(dt > 0.0)) throw DomainError("wiener_increment: dt must be positive");
  if (g.n_modes != n.n_modes)
    throw ConfigError("wiener_increment: grid and noise mode counts differ");
  SpectralField out(g);
  const double sdt = std::sqrt(dt);
  for (int k = 1; k <= g.n_modes; ++k) {
    auto [z1, z2] =
        rng.normal_pair(stream_id(path, static_cast<std::uint32_t>(k)), step);
    (void)z2;
    out.c[static_cast<std::size_t>(k - 1)] =
        std::pow(g.eigenvalue(k), n.theta / 2.0) * sdt * z1;
  }
  return out;
}

OUState ou_exact_step(const OUState& s, double dt, const NoiseSpec& n,
                      const GridSpec& g, const CounterRng& rng,
                      std::uint64_t path, std::uint64_t step) {
  if (!(dt > 0.0)) throw DomainError("ou_exact_step: dt must be positive");
  if (s.field.grid != g)
    throw ConfigError("ou_exact_step: state grid does not match");
  OuStepTables tb = OuStepTables::make(g, n.theta, dt);
  ModeIncrements inc;
  sample_increments(tb, rng, path, step, inc);
  OUState out{s.t + dt, SpectralField(g)};
  for (std::size_t k = 0; k < s.field.c.size(); ++k)
    out.field.c[k] = tb.decay[k] * s.field.c[k] + inc.eta[k];
  return out;
}

SeriesValue gamma_series_integrated(double theta, int n_modes) {
  if (theta >= 0.5)
    throw DomainError(
        "gamma series: diverges for theta >= 1/2 (no integrable tail)");
  if (n_modes < 1) throw DomainError("gamma series: n_modes must be >= 1");
  CompensatedSum acc;
  for (int k = 1; k <= n_modes; ++k)
    acc.add(0.5 * std::pow(kPi * kPi * k * k, theta - 1.0));
  // sum_{k>N} lambda_k^{theta-1}/2 <= int_N^inf (pi^2 x^2)^{theta-1}/2 dx
  const double tail = std::pow(kPi, 2.0 * theta - 2.0) *
                      std::pow(static_cast<double>(n_modes), 2.0 * theta - 1.0) /
                      (2.0 * (1.0 - 2.0 * theta));
  return SeriesValue{acc.value(), tail};
}

MomentEstimate ou_moment_estimate(const NoiseSpec& n, const GridSpec& g,
                                  double t, double p_norm, int moment,
                                  int n_paths) {
  if (!(t > 0.0)) throw DomainError("ou_moment_estimate: t must be positive");
  if (!(p_norm >= 2.0))
    throw DomainError("ou_moment_estimate: p_norm must be >= 2");
  if (moment < 1) throw DomainError("ou_moment_estimate: moment must be >= 1");
  if (n_paths < 2) throw DomainError("ou_moment_estimate: need >= 2 paths");
  CounterRng rng(n.seed);
  OuStepTables tb = OuStepTables::make(g, n.theta, t);
  ModeIncrements inc;
  RunningMoments acc;
  SpectralField f(g);
  for (int i = 0; i < n_paths; ++i) {
    sample_increments(tb, rng, path_id(0, static_cast<std::uint64_t>(i)), 0, inc);
    f.c = inc.eta;  // zero start: the convolution is the increment itself
    double v = lp_norm(f, p_norm);
    acc.add(std::pow(v, static_cast<double>(moment)));
  }
  return MomentEstimate{acc.mean(), acc.stderror(), n_paths};
}

MomentEstimate sobolev_moment_estimate(const NoiseSpec& n, const GridSpec& g,
                                       double beta0, double t, int n_paths) {
  if (!(beta0 > 0.0 && beta0 + n.theta < 0.5))
    throw DomainError(
        "sobolev_moment_estimate: need 0 < beta0 < 1/2 - theta for a finite "
        "Sobolev moment");
  if (!(t > 0.0))
    throw DomainError("sobolev_moment_estimate: t must be positive");
  if (n_paths < 2) throw DomainError("sobolev_moment_estimate: need >= 2 paths");
  CounterRng rng(n.seed);
  OuStepTables tb = OuStepTables::make(g, n.theta, t);
  ModeIncrements inc;
  RunningMoments acc;
  SpectralField f(g);
  for (int i = 0; i < n_paths; ++i) {
    sample_increments(tb, rng, path_id(0, static_cast<std::uint64_t>(i)), 0, inc);
    f.c = inc.eta;
    acc.add(sobolev_slobodeckij_norm(f, beta0, 2.0));
  }
  return MomentEstimate{acc.mean(), acc.stderror(), n_paths};
}

double g_inverse_norm(const NoiseSpec& n) { return std::pow(kPi, -n.theta); }

}  // namespace srd
