#pragma once
// Declarative experiment descriptions: strict JSON parsing (unknown keys are
// errors, physics parameters have no silent defaults), canonical
// serialization, and the FNV-1a hash stamped on every output record.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srdlab/montecarlo.hpp"

namespace srd {

enum class ExperimentKind {
  simulate,
  couple,
  harnack,
  ergodic,
  noise_diag,
  validate_drift
};

const char* experiment_name(ExperimentKind k);
ExperimentKind experiment_from_name(const std::string& s);

// sparse start field, 1-based mode index -> amplitude
using ModeMap = std::map<int, double>;
SpectralField make_field(const ModeMap& modes, const GridSpec& g);

struct ObservableSpec {
  std::string kind;
  double a = 0.0, b = 0.0;                     // bounded_trig
  double scale = 0.0, lo = 0.0, hi = 0.0;      // clipped_exponential
  double radius = 0.0, pn = 2.0, offset = 0.0; // indicator_ball
  ModeMap center;                              // indicator_ball
  int mode = 1;                                // mode-indexed kinds
};
Observable make_observable(const ObservableSpec& os, const GridSpec& g);

struct SimulateParams {
  ModeMap x0;
  double horizon = 0.0;
  std::uint64_t trace_stride = 1;
  bool dump_coeffs = false;
};

struct CoupleParams {
  ModeMap x0, y0;
  double horizon = 0.0;
  std::uint64_t n_pairs = 0;
  std::vector<double> obs_times;
  bool same_noise = false;  // plain same-noise pairs instead of the coupling
};

struct GradientParams {
  bool enabled = false;
  int direction_mode = 1;
  double eps = 0.0;
  std::uint64_t n_paths = 0;
};

struct HarnackParams {
  ModeMap x0, y0;
  double horizon = 0.0;
  std::uint64_t n_paths = 0;
  std::vector<double> s_values;
  std::vector<double> obs_times;  // weight diagnostics along the coupling
  std::vector<ObservableSpec> observables;
  GradientParams gradient;
};

struct ErgodicParams {
  std::string mode;  // "average" | "two-chain" | "tv"
  double horizon = 0.0, burn_in = 0.0, observation_stride = 0.0;
  std::vector<double> horizons;
  double beta_tig = 0.0;
  bool keep_samples = false;
  std::vector<ObservableSpec> observables;
  ModeMap x0, y0;
  std::uint64_t n_paths = 0;  // tv mode
  std::vector<double> times;  // tv mode
};

struct NoiseDiagParams {
  double horizon = 0.0;
  std::uint64_t n_paths = 0;
  double beta0 = 0.0;
};

struct ValidateDriftParams {
  double radius = 3.0;   // half-width of the certificate pair grid
  double step = 0.005;
};

struct ExperimentConfig {
  ModelSpec model;
  SchemeSpec scheme;
  ExperimentKind experiment = ExperimentKind::validate_drift;
  SimulateParams simulate;
  CoupleParams couple;
  HarnackParams harnack;
  ErgodicParams ergodic;
  NoiseDiagParams noise_diag;
  ValidateDriftParams validate_drift;
  std::uint64_t seed = 0;
  int n_workers = 0;     // 0 = all hardware threads
  std::string out_dir;   // empty = env SRDLAB_OUT, else "."

  ExperimentConfig(ModelSpec m, SchemeSpec s)
      : model(std::move(m)), scheme(s) {}
};

// throws ConfigError naming the offending field path
ExperimentConfig parse_config(const std::string& json_text);

// full config re-serialized with sorted keys; parse(canonical(c)) == c
std::string canonical_config_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical {model, scheme, experiment, parameters, seed};
// engineering knobs (workers, output dir) do not move the hash
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

// configs shipped inside the binary; the same files live under configs/
std::vector<std::string> bundled_config_names();
const std::string& bundled_config(const std::string& name);

// reads the file if the path exists, otherwise resolves a bundled name
std::string load_config_text(const std::string& path_or_name);

}  // namespace srd
