#pragma once
// Mode-wise noise generation for G dW with G = (-Laplacian)^{theta/2}, and
// the stochastic convolution (Ornstein-Uhlenbeck) it drives. Mode k carries
// an independent Brownian motion scaled by lambda_k^{theta/2}.

#include <cstdint>
#include <vector>

#include "srdlab/rng.hpp"
#include "srdlab/spectral_field.hpp"

namespace srd {

struct NoiseSpec {
  double theta = 0.0;  // spatial regularity exponent, must be < 1/2
  int n_modes = 0;
  std::uint64_t seed = 0;

  NoiseSpec(double theta_noise, int modes, std::uint64_t seed_value);
};

struct OUState {
  double t = 0.0;
  SpectralField field;
};

// one joint draw per mode and step: the plain Brownian increment d_beta over
// dt together with the exact convolution increment eta, correlated so that
//   Var(d_beta) = dt,
//   Var(eta)    = lambda^{theta-1}(1 - e^{-2 lambda dt})/2,
//   Cov         = lambda^{theta/2} (1 - e^{-lambda dt})/lambda.
// The same pair feeds the state update and the change-of-measure integral.
struct ModeIncrements {
  std::vector<double> dbeta, eta;
};

struct OuStepTables {
  double dt = 0.0;
  double theta = 0.0;
  std::vector<double> decay;       // e^{-lambda_k dt}
  std::vector<double> psi;         // (1 - e^{-lambda_k dt})/lambda_k
  std::vector<double> c_shared;    // Cov/sqrt(dt), weight of the shared normal
  std::vector<double> c_extra;     // sqrt(Var - Cov^2/dt), independent part
  std::vector<double> g_scale;     // lambda_k^{theta/2}
  std::vector<double> ginv_scale;  // lambda_k^{-theta/2}

  static OuStepTables make(const GridSpec& g, double theta, double dt);
};

// counter = step index; draws use channel k for mode k
void sample_increments(const OuStepTables& tb, const CounterRng& rng,
                       std::uint64_t path, std::uint64_t step,
                       ModeIncrements& out);

// distribution of G(W_{t+dt} - W_t): mode k is N(0, lambda_k^theta dt)
SpectralField wiener_increment(const NoiseSpec& n, const GridSpec& g, double dt,
                               const CounterRng& rng, std::uint64_t path,
                               std::uint64_t step);

// exact one-step law of the stochastic convolution:
// mode k goes to e^{-lambda_k dt} c_k + N(0, lambda_k^{theta-1}(1-e^{-2 lambda_k dt})/2)
OUState ou_exact_step(const OUState& s, double dt, const NoiseSpec& n,
                      const GridSpec& g, const CounterRng& rng,
                      std::uint64_t path, std::uint64_t step);

struct SeriesValue {
  double value;       // truncated sum of lambda_k^{theta-1}/2
  double tail_bound;  // integral-comparison bound on the dropped tail
};
// time integral of the mode variance series; diverges iff theta >= 1/2
SeriesValue gamma_series_integrated(double theta, int n_modes);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

// Monte Carlo moment of the convolution at time t from a zero start,
// E |W_A(t)|_{p_norm}^{moment}; one exact step per path
MomentEstimate ou_moment_estimate(const NoiseSpec& n, const GridSpec& g,
                                  double t, double p_norm, int moment,
                                  int n_paths);

// E |W_A(t)|_{beta0,2}; requires beta0 + theta < 1/2
MomentEstimate sobolev_moment_estimate(const NoiseSpec& n, const GridSpec& g,
                                       double beta0, double t, int n_paths);

// operator norm of G^{-1} on the truncation: lambda_1^{-theta/2} = pi^{-theta}
double g_inverse_norm(const NoiseSpec& n);

}  // namespace srd
