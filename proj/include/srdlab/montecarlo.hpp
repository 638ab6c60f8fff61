#pragma once
// Ensemble machinery: endpoint sampling, a small menu of observables, and the
// statistical checkers that compare sampled semigroup quantities against the
// closed-form rate bounds. Sampling fills slots indexed by path id and
// evaluation is sequential, so results are bitwise independent of the worker
// count.

#include <cstdint>
#include <string>
#include <vector>

#include "srdlab/common.hpp"
#include "srdlab/coupling.hpp"
#include "srdlab/integrator.hpp"

namespace srd {

struct ModelSpec {
  GridSpec grid;
  DriftSpec drift;
  NoiseSpec noise;
  double p = 2.0;  // contraction exponent

  double lambda() const;  // contraction rate of the pair distance
  double ginv() const;    // operator norm of G^{-1}, pi^{-theta}
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

enum class ObservableKind {
  bounded_trig,          // a + b sin(c_k), a > |b| keeps it positive
  clipped_exponential,   // clamp(exp(scale c_k), lo, hi)
  indicator_ball,        // offset + 1{ |x - center|_pn <= radius }
  linear_mode            // c_k
};

class Observable {
 public:
  static Observable bounded_trig(double a, double b, int mode);
  static Observable clipped_exponential(double scale, double lo, double hi,
                                        int mode);
  static Observable indicator_ball(SpectralField center, double radius,
                                   double pn, double offset);
  static Observable linear_mode(int mode);

  double operator()(const SpectralField& x) const;
  bool strictly_positive() const;
  ObservableKind kind() const { return kind_; }
  const std::string& label() const { return label_; }

 private:
  Observable() = default;
  ObservableKind kind_ = ObservableKind::linear_mode;
  double a_ = 0.0, b_ = 0.0, lo_ = 0.0, hi_ = 0.0, radius_ = 0.0, pn_ = 2.0,
         offset_ = 0.0;
  int mode_ = 1;
  std::vector<double> center_;
  std::string label_;
};

struct EndpointSet {
  GridSpec grid;
  double T = 0.0;
  std::uint64_t ensemble = 0;
  int blowups = 0;
  std::vector<SpectralField> states;  // slot i = path i; blown slots hold NaN

  EndpointSet(const GridSpec& g) : grid(g) {}
};

// runs n_paths independent trajectories from x0 to T and keeps the endpoints;
// the block partition only affects scheduling, never the values
EndpointSet sample_endpoints(const ModelSpec& m, const SchemeSpec& s,
                             const SpectralField& x0, double T,
                             std::size_t n_paths, const CounterRng& rng,
                             std::uint64_t ensemble, int workers);

Estimate estimate_on(const EndpointSet& set, const Observable& phi);
RunningMoments moments_on(const EndpointSet& set, const Observable& phi);

// ---- coupling ensembles ----

struct CouplingEnsemble {
  std::vector<double> obs_times;
  std::size_t n = 0;
  double T = 0.0, r0 = 0.0, cert_bound = 0.0;
  int blowups = 0;
  long cert_violations = 0;
  std::vector<std::uint8_t> coupled;
  std::vector<double> tau, v_energy, cert_margin, log_m_final;
  std::vector<double> log_m_at;  // row-major, n rows x obs_times.size() cols

  double frac_coupled() const;
  double min_margin() const;
  double max_v_energy() const;
};

CouplingEnsemble run_coupling_ensemble(const ModelSpec& m, const SchemeSpec& s,
                                       const SpectralField& x0,
                                       const SpectralField& y0, double T,
                                       const CouplingParams& par,
                                       std::size_t n_paths,
                                       const CounterRng& rng,
                                       std::uint64_t ensemble, int workers);

// statistics of the change-of-measure weight at observation index j,
// skipping rows from blown-up paths
Estimate weight_mean(const CouplingEnsemble& e, std::size_t j);
Estimate weight_entropy(const CouplingEnsemble& e, std::size_t j);  // E M log M
Estimate weight_power(const CouplingEnsemble& e, std::size_t j, double expo);
Estimate weight_abs_dev(const CouplingEnsemble& e, std::size_t j);  // E|M-1|

// ---- checkers ----

// lambda / (e^{2 lambda T} - 1), extended continuously to 1/(2T) at
// lambda = 0; positive for every lambda, strictly decreasing in T, and the
// common factor of the entropy, power, Harnack and gradient bounds
double rate_factor(double lambda, double T);

enum class Verdict { satisfied, violated, inconclusive };
const char* verdict_name(Verdict v);

struct CheckOutcome {
  Verdict verdict = Verdict::inconclusive;
  double lhs = 0.0, rhs = 0.0, sigma = 0.0;
  std::string note;
};

// E[M_s log M_s] <= lambda ginv^2 r0^2 / (e^{2 lambda T} - 1) at every
// observation time; fails closed (inconclusive) on blow-ups or when more
// than 1% of the pairs missed the horizon
std::vector<CheckOutcome> check_entropy(const CouplingEnsemble& e,
                                        const ModelSpec& m);

// E[M_T^{s/(s-1)}] <= exp(s lambda ginv^2 r0^2 / ((s-1)^2 (e^{2 lambda T}-1)))
CheckOutcome check_power(const CouplingEnsemble& e, const ModelSpec& m,
                         double s);

// the power bound above evaluated on a time ladder; true when decreasing
bool power_bound_decreasing(const ModelSpec& m, double r0, double s,
                            const std::vector<double>& times);

// per-path Novikov budget: (1/2) int |v|^2 <= ginv^2 (r0^2/gamma_0 + 10 dt)/2
CheckOutcome check_novikov(const CouplingEnsemble& e, const ModelSpec& m,
                           double dt);

// P_T log phi(y) <= log P_T phi(x) + lambda ginv^2 r^2 / (e^{2 lambda T} - 1)
CheckOutcome check_log_harnack(const EndpointSet& from_y,
                               const EndpointSet& from_x,
                               const Observable& phi, const ModelSpec& m,
                               double r);

// (P_T phi(y))^s <= P_T phi^s(x) exp(s lambda ginv^2 r^2 /
//                                     ((s-1)(e^{2 lambda T} - 1)))
CheckOutcome check_power_harnack(const EndpointSet& from_y,
                                 const EndpointSet& from_x,
                                 const Observable& phi, const ModelSpec& m,
                                 double r, double s);

struct GradientCheck {
  CheckOutcome outcome;
  double fd = 0.0, fd_half = 0.0, rhs = 0.0;
  bool richardson_ok = false;
};

// |D P_T phi(x)| <= sqrt(2 lambda ginv^2 / (e^{2 lambda T} - 1))
//                   sqrt(P_T phi^2(x) - (P_T phi(x))^2), probed by a central
// difference along h with shared noise across the four shifted starts
GradientCheck check_gradient(const ModelSpec& m, const SchemeSpec& s,
                             const SpectralField& x, const SpectralField& h,
                             double eps, double T, const Observable& phi,
                             std::size_t n_paths, const CounterRng& rng,
                             std::uint64_t ensemble, int workers);

}  // namespace srd
