#pragma once
// Time stepping for dX = (Laplacian X + F(X)) dt + G dW on the sine basis.
// The workhorse scheme treats the linear part exactly per mode and samples
// the stochastic convolution increment by its exact law:
//   x'_k = e^{-lambda_k dt} x_k + psi_k(dt) Fhat(x)_k + eta_k,
// psi_k = (1 - e^{-lambda_k dt})/lambda_k. A Strang-splitting scheme with
// pointwise RK4 for the reaction serves as an independent reference.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "srdlab/drift.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/spectral_field.hpp"

namespace srd {

enum class SchemeKind { exponential_euler, splitting_reference };

struct SchemeSpec {
  double dt = 0.0;
  SchemeKind kind = SchemeKind::exponential_euler;
  // reaction taming f -> f/(1 + tau dt |f|); when unset it switches on by
  // itself once dt * max|f| exceeds 10 (tau = 1)
  std::optional<double> taming;
  // internal safety valve for tests that need the untamed blow-up path
  bool auto_taming = true;

  SchemeSpec(double step, SchemeKind k = SchemeKind::exponential_euler,
             std::optional<double> tame = std::nullopt);
};

struct TrajectoryState {
  double t = 0.0;
  std::uint64_t step = 0;
  SpectralField x;
  SpectralField w_a;  // stochastic convolution driven by the same increments

  TrajectoryState(const SpectralField& x0)
      : x(x0), w_a(SpectralField(x0.grid)) {}
};

// Owns per-(grid, dt) tables and scratch buffers; use one instance per thread.
class PathSimulator {
 public:
  PathSimulator(const GridSpec& g, const DriftSpec& d, const NoiseSpec& n,
                const SchemeSpec& s);

  TrajectoryState init(const SpectralField& x0) const;

  // samples the joint increments at (path, state.step) and advances one step
  void advance(TrajectoryState& st, const CounterRng& rng,
               std::uint64_t path) const;
  // advances with caller-supplied increments (shared-noise drivers)
  void advance_with(TrajectoryState& st, const ModeIncrements& inc) const;

  // projected reaction of x, written into fhat (n_modes entries)
  void reaction_hat(const SpectralField& x, std::vector<double>& fhat) const;

  const OuStepTables& tables() const { return tb_; }
  const GridSpec& grid() const { return grid_; }
  const SchemeSpec& scheme() const { return scheme_; }
  double dt() const { return scheme_.dt; }

 private:
  void step_exponential(TrajectoryState& st, const ModeIncrements& inc) const;
  void step_splitting(TrajectoryState& st, const ModeIncrements& inc) const;
  void apply_taming(std::size_t count) const;
  void finish_step(TrajectoryState& st, const ModeIncrements& inc,
                   double prev_norm) const;

  GridSpec grid_;
  DriftSpec drift_;
  NoiseSpec noise_;
  SchemeSpec scheme_;
  std::shared_ptr<const SineTransform> plan_;
  OuStepTables tb_;
  std::vector<double> decay_half_;  // e^{-lambda_k dt/2} for the splitting
  mutable std::vector<double> vals_, fvals_, fhat_, xtmp_;
  mutable ModeIncrements inc_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  std::vector<SpectralField> wa;
};

using StepObserver = std::function<void(const TrajectoryState&)>;

// Runs one path to horizon T and snapshots the states whose times snap to the
// step grid. dt must divide T within 1e-12 of an integer step count. The
// observer, when given, fires on the initial state and after every step.
Trajectory simulate_path(const SpectralField& x0, double T,
                         const std::vector<double>& obs_times,
                         const GridSpec& g, const DriftSpec& d,
                         const NoiseSpec& n, const SchemeSpec& s,
                         const CounterRng& rng, std::uint64_t path,
                         const StepObserver& observer = nullptr);

struct PairTrajectory {
  std::vector<double> times;
  std::vector<double> dist_p;  // |X_t - Y_t|_p at the observation times
  std::vector<SpectralField> x, y;
};

// two solutions driven by the identical increment sequence
PairTrajectory simulate_pair_same_noise(const SpectralField& x0,
                                        const SpectralField& y0, double T,
                                        const std::vector<double>& obs_times,
                                        double p, const GridSpec& g,
                                        const DriftSpec& d, const NoiseSpec& n,
                                        const SchemeSpec& s,
                                        const CounterRng& rng,
                                        std::uint64_t path);

// step index for an observation time on the grid, with range checking
std::uint64_t snap_to_grid(double t, double dt, std::uint64_t n_steps);
// step count for a horizon; throws unless dt divides T within 1e-12
std::uint64_t horizon_steps(double T, double dt);

}  // namespace srd
