#pragma once
// Long-run experiments: Krylov-Bogoliubov time averages with batch-mean
// standard errors, two-chain agreement from distinct starts, and upper-bound
// surrogates for the total variation distance between the laws from two
// points. TV itself is not directly estimable here, so both reported curves
// are certified upper bounds: coupling failure plus weight deviation, and
// the Pinsker route through the closed-form entropy bound.

#include <cstdint>
#include <string>
#include <vector>

#include "srdlab/montecarlo.hpp"

namespace srd {

// default order of the fractional-smoothness functional: the smallest of
// 0.2, the dimension constraint 1 - d(p-1)(q-2)/(2p(q+p-2)) with d = 1,
// just under the noise regularity 1/2 - theta, and d/p
double default_beta_tig(const DriftSpec& d, double theta, double p);

struct ErgodicRunSpec {
  double horizon = 0.0;
  double burn_in = 0.0;
  double observation_stride = 0.0;
  std::vector<Observable> observables;  // evaluated on top of the three norms
  double beta_tig = 0.0;                // order of |.|_{beta,p}; 0 = default
  std::vector<double> horizons;         // nested ends; empty = quarter points
  bool keep_samples = false;            // retain the per-stride values
};

struct KBSeries {
  std::string label;
  std::vector<double> value;  // time average at each nested horizon
  std::vector<double> se;     // batch-means standard error there
};

struct KBEstimate {
  std::vector<double> horizons;      // nested, ending at the run horizon
  std::vector<std::size_t> batches;  // batch count behind each horizon's se
  double beta_tig = 0.0;             // order actually used
  // user observables first, then |.|_p^p, |.|_{q+p-2}^{q+p-2}, |.|_{beta,p}
  std::vector<KBSeries> series;
  std::vector<double> sample_times;               // when keep_samples
  std::vector<std::vector<double>> samples;       // series-major rows
};

// time averages of every functional along one trajectory from the zero
// state, reported at the nested horizons
KBEstimate kb_average(const ErgodicRunSpec& spec, const ModelSpec& m,
                      const SchemeSpec& s, const CounterRng& rng,
                      std::uint64_t path);

// same engine from an arbitrary start
KBEstimate kb_average_from(const SpectralField& x0, const ErgodicRunSpec& spec,
                           const ModelSpec& m, const SchemeSpec& s,
                           const CounterRng& rng, std::uint64_t path);

struct ChainAgreement {
  std::string label;
  double mean_x = 0.0, se_x = 0.0;
  double mean_y = 0.0, se_y = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

struct TwoChainReport {
  KBEstimate chain_x, chain_y;
  std::vector<ChainAgreement> agreement;  // at the final horizon, per series
  bool all_agree = true;
  // companion pair driven by one noise, tracking the contraction envelope
  double lambda = 0.0, r0 = 0.0;
  std::vector<double> pair_times, pair_dist;
  bool envelope_checked = false;  // only meaningful when lambda > 0
  int envelope_violations = 0;
  int envelope_points = 0;  // times where the envelope is above the floor
};

TwoChainReport two_chain_convergence(const SpectralField& x0,
                                     const SpectralField& y0,
                                     const ErgodicRunSpec& spec,
                                     const ModelSpec& m, const SchemeSpec& s,
                                     const CounterRng& rng,
                                     std::uint64_t path_x, std::uint64_t path_y,
                                     std::uint64_t path_pair);

struct TvPoint {
  double t = 0.0;
  double frac_uncoupled = 0.0;
  double mean_abs_dev = 0.0;  // sampled E|M_t - 1|
  double se_abs_dev = 0.0;
  double coupling_bound = 0.0;  // 2 frac_uncoupled + E|M_t - 1|
  double pinsker_bound = 0.0;   // sqrt(2 lambda ginv^2 r0^2/(e^{2 lambda t}-1))
  int blowups = 0;
};

struct TvReport {
  double r0 = 0.0, lambda = 0.0, t0 = 0.0, tol_mc = 0.0;
  std::vector<TvPoint> points;  // one per requested time, ascending
  bool envelope_checked = false;  // lambda > 0 with two or more times >= t0
  bool envelope_ok_mc = true;     // ratio <= e^{-lambda dt}(1 + tol_mc)
  bool envelope_ok_closed = true; // same for the Pinsker curve, tight
};

// one coupling ensemble per requested time; ensemble ids ensemble,
// ensemble+1, ... are consumed, one per time
TvReport tv_decay_profile(const SpectralField& x0, const SpectralField& y0,
                          const std::vector<double>& times, const ModelSpec& m,
                          const SchemeSpec& s, std::size_t n_paths,
                          const CounterRng& rng, std::uint64_t ensemble,
                          int workers, double t0 = 0.25, double tol_mc = 0.15);

}  // namespace srd
