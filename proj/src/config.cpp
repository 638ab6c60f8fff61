#include "srdlab/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "srdlab/integrator.hpp"

namespace srd {
namespace {

using nlohmann::json;

std::string sub(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

const json& need(const json& o, const char* key, const std::string& path) {
  auto it = o.find(key);
  if (it == o.end()) fail(sub(path, key), "required key is missing");
  return *it;
}

void need_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
}

void allow_keys(const json& o, const std::set<std::string>& allowed,
                const std::string& path) {
  for (const auto& item : o.items())
    if (!allowed.count(item.key())) fail(sub(path, item.key()), "unknown key");
}

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

double num_at(const json& o, const char* key, const std::string& path) {
  return as_num(need(o, key, path), sub(path, key));
}

double num_or(const json& o, const char* key, double dflt,
              const std::string& path) {
  auto it = o.find(key);
  return it == o.end() ? dflt : as_num(*it, sub(path, key));
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!(v.is_number_unsigned() ||
        (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
    fail(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t u64_at(const json& o, const char* key, const std::string& path) {
  return as_u64(need(o, key, path), sub(path, key));
}

std::uint64_t u64_or(const json& o, const char* key, std::uint64_t dflt,
                     const std::string& path) {
  auto it = o.find(key);
  return it == o.end() ? dflt : as_u64(*it, sub(path, key));
}

bool bool_or(const json& o, const char* key, bool dflt,
             const std::string& path) {
  auto it = o.find(key);
  if (it == o.end()) return dflt;
  if (!it->is_boolean()) fail(sub(path, key), "expected a boolean");
  return it->get<bool>();
}

std::string str_at(const json& o, const char* key, const std::string& path) {
  const json& v = need(o, key, path);
  if (!v.is_string()) fail(sub(path, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> num_array_at(const json& o, const char* key,
                                 const std::string& path) {
  const json& v = need(o, key, path);
  if (!v.is_array()) fail(sub(path, key), "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_num(v[i], sub(path, key) + "[" + std::to_string(i) + "]"));
  return out;
}

void check_times(const std::vector<double>& t, double horizon,
                 const std::string& path) {
  if (t.empty()) fail(path, "needs at least one time");
  double prev = 0.0;
  for (double x : t) {
    if (!(x > prev)) fail(path, "times must be positive, strictly increasing");
    prev = x;
  }
  if (t.back() > horizon * (1.0 + 1e-12))
    fail(path, "times must not exceed the horizon");
}

void check_horizon(double horizon, double dt, const std::string& path) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    fail(path, "horizon must be positive");
  try {
    (void)horizon_steps(horizon, dt);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

// span must be a whole positive multiple of unit, to 1e-9 relative
std::uint64_t grid_multiple(double span, double unit, const std::string& path,
                            const char* what) {
  double k = span / unit;
  auto ki = static_cast<std::uint64_t>(std::llround(k));
  if (ki < 1 ||
      std::abs(span - static_cast<double>(ki) * unit) >
          1e-9 * std::max(1.0, std::abs(span)))
    fail(path, std::string(what) + " must sit on the coarser time grid");
  return ki;
}

ModeMap parse_modes(const json& v, const GridSpec& g,
                    const std::string& path) {
  need_object(v, path);
  ModeMap m;
  for (const auto& item : v.items()) {
    const std::string& k = item.key();
    bool digits = !k.empty();
    for (char c : k)
      if (!std::isdigit(static_cast<unsigned char>(c))) digits = false;
    if (!digits) fail(sub(path, k), "mode keys are 1-based integers");
    long idx = std::strtol(k.c_str(), nullptr, 10);
    if (idx < 1 || idx > g.n_modes)
      fail(sub(path, k), "mode index out of 1.." + std::to_string(g.n_modes));
    m[static_cast<int>(idx)] = as_num(item.value(), sub(path, k));
  }
  return m;
}

int parse_mode_index(const json& o, const GridSpec& g,
                     const std::string& path) {
  std::uint64_t m = u64_at(o, "mode", path);
  if (m < 1 || m > static_cast<std::uint64_t>(g.n_modes))
    fail(sub(path, "mode"),
         "mode index out of 1.." + std::to_string(g.n_modes));
  return static_cast<int>(m);
}

ObservableSpec parse_observable(const json& v, const GridSpec& g,
                                const std::string& path) {
  need_object(v, path);
  ObservableSpec os;
  os.kind = str_at(v, "kind", path);
  if (os.kind == "bounded_trig") {
    allow_keys(v, {"kind", "a", "b", "mode"}, path);
    os.a = num_at(v, "a", path);
    os.b = num_at(v, "b", path);
    os.mode = parse_mode_index(v, g, path);
  } else if (os.kind == "clipped_exponential") {
    allow_keys(v, {"kind", "scale", "lo", "hi", "mode"}, path);
    os.scale = num_at(v, "scale", path);
    os.lo = num_at(v, "lo", path);
    os.hi = num_at(v, "hi", path);
    os.mode = parse_mode_index(v, g, path);
  } else if (os.kind == "indicator_ball") {
    allow_keys(v, {"kind", "radius", "p", "offset", "center"}, path);
    os.radius = num_at(v, "radius", path);
    os.pn = num_at(v, "p", path);
    os.offset = num_at(v, "offset", path);
    os.center = parse_modes(need(v, "center", path), g, sub(path, "center"));
  } else if (os.kind == "linear_mode") {
    allow_keys(v, {"kind", "mode"}, path);
    os.mode = parse_mode_index(v, g, path);
  } else {
    fail(sub(path, "kind"), "unknown observable kind '" + os.kind + "'");
  }
  try {
    (void)make_observable(os, g);  // run the factory's own validation now
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return os;
}

std::vector<ObservableSpec> parse_observables(const json& o, const char* key,
                                              const GridSpec& g,
                                              const std::string& path,
                                              bool required) {
  auto it = o.find(key);
  if (it == o.end()) {
    if (required) fail(sub(path, key), "required key is missing");
    return {};
  }
  if (!it->is_array()) fail(sub(path, key), "expected an array of observables");
  std::vector<ObservableSpec> out;
  for (std::size_t i = 0; i < it->size(); ++i)
    out.push_back(parse_observable(
        (*it)[i], g, sub(path, key) + "[" + std::to_string(i) + "]"));
  if (required && out.empty()) fail(sub(path, key), "needs at least one entry");
  return out;
}

const char* lip_name(LipKind k) {
  switch (k) {
    case LipKind::none: return "none";
    case LipKind::sin_scaled: return "sin_scaled";
    case LipKind::rational: return "rational";
    case LipKind::constant: return "constant";
  }
  return "none";
}

DriftSpec parse_drift(const json& v, const std::string& path) {
  need_object(v, path);
  allow_keys(v, {"poly", "lipschitz", "L_f", "theta_diss", "q", "L_f_prime"},
             path);
  std::vector<double> poly = num_array_at(v, "poly", path);
  LipschitzPart lip;
  if (v.contains("lipschitz")) {
    const json& l = v["lipschitz"];
    need_object(l, sub(path, "lipschitz"));
    allow_keys(l, {"kind", "scale"}, sub(path, "lipschitz"));
    std::string lk = str_at(l, "kind", sub(path, "lipschitz"));
    if (lk == "none")
      lip.kind = LipKind::none;
    else if (lk == "sin_scaled")
      lip.kind = LipKind::sin_scaled;
    else if (lk == "rational")
      lip.kind = LipKind::rational;
    else if (lk == "constant")
      lip.kind = LipKind::constant;
    else
      fail(sub(path, "lipschitz.kind"), "unknown kind '" + lk + "'");
    lip.scale = num_or(l, "scale", 0.0, sub(path, "lipschitz"));
  }
  double L_f = num_at(v, "L_f", path);
  double th = num_at(v, "theta_diss", path);
  double q = num_at(v, "q", path);
  double Lp = num_at(v, "L_f_prime", path);
  try {
    return make_drift(std::move(poly), lip, L_f, th, q, Lp);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

bool same_field(const ModeMap& a, const ModeMap& b, const GridSpec& g) {
  SpectralField fa = make_field(a, g), fb = make_field(b, g);
  for (int k = 0; k < g.n_modes; ++k)
    if (fa.c[k] != fb.c[k]) return false;
  return true;
}

void parse_params(const json& jp, ExperimentConfig& cfg) {
  const GridSpec& g = cfg.model.grid;
  const double dt = cfg.scheme.dt;
  const std::string path = "parameters";
  switch (cfg.experiment) {
    case ExperimentKind::simulate: {
      allow_keys(jp, {"x0", "horizon", "trace_stride", "dump_coeffs"}, path);
      SimulateParams& sp = cfg.simulate;
      sp.x0 = parse_modes(need(jp, "x0", path), g, sub(path, "x0"));
      sp.horizon = num_at(jp, "horizon", path);
      check_horizon(sp.horizon, dt, sub(path, "horizon"));
      sp.trace_stride = u64_or(jp, "trace_stride", 1, path);
      if (sp.trace_stride < 1)
        fail(sub(path, "trace_stride"), "stride must be at least 1");
      sp.dump_coeffs = bool_or(jp, "dump_coeffs", false, path);
      break;
    }
    case ExperimentKind::couple: {
      allow_keys(jp, {"x0", "y0", "horizon", "n_pairs", "obs_times",
                      "same_noise"},
                 path);
      CoupleParams& cp = cfg.couple;
      cp.x0 = parse_modes(need(jp, "x0", path), g, sub(path, "x0"));
      cp.y0 = parse_modes(need(jp, "y0", path), g, sub(path, "y0"));
      cp.horizon = num_at(jp, "horizon", path);
      check_horizon(cp.horizon, dt, sub(path, "horizon"));
      cp.n_pairs = u64_at(jp, "n_pairs", path);
      if (cp.n_pairs < 1) fail(sub(path, "n_pairs"), "needs at least one pair");
      cp.obs_times = num_array_at(jp, "obs_times", path);
      check_times(cp.obs_times, cp.horizon, sub(path, "obs_times"));
      cp.same_noise = bool_or(jp, "same_noise", false, path);
      break;
    }
    case ExperimentKind::harnack: {
      allow_keys(jp, {"x0", "y0", "horizon", "n_paths", "s_values",
                      "obs_times", "observables", "gradient"},
                 path);
      HarnackParams& hp = cfg.harnack;
      hp.x0 = parse_modes(need(jp, "x0", path), g, sub(path, "x0"));
      hp.y0 = parse_modes(need(jp, "y0", path), g, sub(path, "y0"));
      if (same_field(hp.x0, hp.y0, g))
        fail(sub(path, "y0"),
             "x0 and y0 must differ (the penalty needs a positive distance)");
      hp.horizon = num_at(jp, "horizon", path);
      check_horizon(hp.horizon, dt, sub(path, "horizon"));
      hp.n_paths = u64_at(jp, "n_paths", path);
      if (hp.n_paths < 2) fail(sub(path, "n_paths"), "needs at least 2 paths");
      hp.s_values = num_array_at(jp, "s_values", path);
      if (hp.s_values.empty())
        fail(sub(path, "s_values"), "needs at least one exponent");
      for (double s : hp.s_values)
        if (!(s > 1.0))
          fail(sub(path, "s_values"), "each exponent must exceed 1");
      hp.obs_times = num_array_at(jp, "obs_times", path);
      check_times(hp.obs_times, hp.horizon, sub(path, "obs_times"));
      hp.observables = parse_observables(jp, "observables", g, path, true);
      for (std::size_t i = 0; i < hp.observables.size(); ++i)
        if (!make_observable(hp.observables[i], g).strictly_positive())
          fail(sub(path, "observables") + "[" + std::to_string(i) + "]",
               "log bounds need strictly positive observables");
      if (jp.contains("gradient")) {
        const json& jg = jp["gradient"];
        need_object(jg, sub(path, "gradient"));
        allow_keys(jg, {"direction_mode", "eps", "n_paths"},
                   sub(path, "gradient"));
        GradientParams& gp = hp.gradient;
        gp.enabled = true;
        std::uint64_t dm = u64_at(jg, "direction_mode", sub(path, "gradient"));
        if (dm < 1 || dm > static_cast<std::uint64_t>(g.n_modes))
          fail(sub(path, "gradient.direction_mode"),
               "mode index out of 1.." + std::to_string(g.n_modes));
        gp.direction_mode = static_cast<int>(dm);
        gp.eps = num_at(jg, "eps", sub(path, "gradient"));
        if (!(gp.eps > 0.0))
          fail(sub(path, "gradient.eps"), "shift must be positive");
        gp.n_paths = u64_at(jg, "n_paths", sub(path, "gradient"));
        if (gp.n_paths < 2)
          fail(sub(path, "gradient.n_paths"), "needs at least 2 paths");
      }
      break;
    }
    case ExperimentKind::ergodic: {
      ErgodicParams& ep = cfg.ergodic;
      ep.mode = str_at(jp, "mode", path);
      if (ep.mode == "average" || ep.mode == "two-chain") {
        std::set<std::string> keys = {
            "mode",     "horizon",      "burn_in", "observation_stride",
            "horizons", "beta_tig",     "keep_samples", "observables", "x0"};
        if (ep.mode == "two-chain") keys.insert("y0");
        allow_keys(jp, keys, path);
        ep.horizon = num_at(jp, "horizon", path);
        check_horizon(ep.horizon, dt, sub(path, "horizon"));
        ep.burn_in = num_or(jp, "burn_in", 0.0, path);
        if (!(ep.burn_in >= 0.0 && ep.burn_in < ep.horizon))
          fail(sub(path, "burn_in"), "burn-in must lie in [0, horizon)");
        ep.observation_stride = num_at(jp, "observation_stride", path);
        if (!(ep.observation_stride > 0.0))
          fail(sub(path, "observation_stride"), "stride must be positive");
        std::uint64_t k_stride = grid_multiple(
            ep.observation_stride, dt, sub(path, "observation_stride"),
            "the stride");
        std::uint64_t t_steps = horizon_steps(ep.horizon, dt);
        std::uint64_t b_steps =
            ep.burn_in > 0.0
                ? grid_multiple(ep.burn_in, dt, sub(path, "burn_in"),
                                "the burn-in")
                : 0;
        if ((t_steps - b_steps) / k_stride < 8)
          fail(sub(path, "observation_stride"),
               "need at least 8 stride samples past the burn-in");
        if (jp.contains("horizons")) {
          ep.horizons = num_array_at(jp, "horizons", path);
          check_times(ep.horizons, ep.horizon, sub(path, "horizons"));
          if (std::abs(ep.horizons.back() - ep.horizon) >
              1e-9 * std::max(1.0, ep.horizon))
            fail(sub(path, "horizons"),
                 "the last nested horizon must equal the run horizon");
        }
        ep.beta_tig = num_or(jp, "beta_tig", 0.0, path);
        if (ep.beta_tig != 0.0 &&
            !(ep.beta_tig > 0.0 && ep.beta_tig < 1.0))
          fail(sub(path, "beta_tig"), "order must lie in (0, 1), or 0 for the default");
        ep.keep_samples = bool_or(jp, "keep_samples", false, path);
        ep.observables = parse_observables(jp, "observables", g, path, false);
        if (jp.contains("x0"))
          ep.x0 = parse_modes(jp["x0"], g, sub(path, "x0"));
        if (ep.mode == "two-chain")
          ep.y0 = parse_modes(need(jp, "y0", path), g, sub(path, "y0"));
      } else if (ep.mode == "tv") {
        allow_keys(jp, {"mode", "x0", "y0", "times", "n_paths"}, path);
        ep.x0 = parse_modes(need(jp, "x0", path), g, sub(path, "x0"));
        ep.y0 = parse_modes(need(jp, "y0", path), g, sub(path, "y0"));
        ep.times = num_array_at(jp, "times", path);
        check_times(ep.times, ep.times.back(), sub(path, "times"));
        for (double t : ep.times)
          check_horizon(t, dt, sub(path, "times"));
        ep.n_paths = u64_at(jp, "n_paths", path);
        if (ep.n_paths < 2)
          fail(sub(path, "n_paths"), "needs at least 2 paths");
      } else {
        fail(sub(path, "mode"),
             "unknown mode '" + ep.mode + "' (average, two-chain, tv)");
      }
      break;
    }
    case ExperimentKind::noise_diag: {
      allow_keys(jp, {"horizon", "n_paths", "beta0"}, path);
      NoiseDiagParams& np = cfg.noise_diag;
      np.horizon = num_at(jp, "horizon", path);
      if (!(np.horizon > 0.0))
        fail(sub(path, "horizon"), "horizon must be positive");
      np.n_paths = u64_at(jp, "n_paths", path);
      if (np.n_paths < 2) fail(sub(path, "n_paths"), "needs at least 2 paths");
      np.beta0 = num_at(jp, "beta0", path);
      if (!(np.beta0 >= 0.0))
        fail(sub(path, "beta0"), "order must be nonnegative");
      if (np.beta0 + cfg.model.noise.theta >= 0.5)
        fail(sub(path, "beta0"),
             "the smoothness probe needs beta0 + theta < 1/2");
      break;
    }
    case ExperimentKind::validate_drift: {
      allow_keys(jp, {"radius", "step"}, path);
      ValidateDriftParams& vp = cfg.validate_drift;
      vp.radius = num_or(jp, "radius", 3.0, path);
      if (!(vp.radius > 0.0))
        fail(sub(path, "radius"), "radius must be positive");
      vp.step = num_or(jp, "step", 0.005, path);
      if (!(vp.step > 0.0 && vp.step <= vp.radius))
        fail(sub(path, "step"), "step must lie in (0, radius]");
      break;
    }
  }
}

json modes_json(const ModeMap& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[std::to_string(k)] = v;
  return o;
}

json observable_json(const ObservableSpec& os) {
  json o;
  o["kind"] = os.kind;
  if (os.kind == "bounded_trig") {
    o["a"] = os.a;
    o["b"] = os.b;
    o["mode"] = os.mode;
  } else if (os.kind == "clipped_exponential") {
    o["scale"] = os.scale;
    o["lo"] = os.lo;
    o["hi"] = os.hi;
    o["mode"] = os.mode;
  } else if (os.kind == "indicator_ball") {
    o["radius"] = os.radius;
    o["p"] = os.pn;
    o["offset"] = os.offset;
    o["center"] = modes_json(os.center);
  } else {
    o["mode"] = os.mode;
  }
  return o;
}

json params_json(const ExperimentConfig& c) {
  json o = json::object();
  switch (c.experiment) {
    case ExperimentKind::simulate: {
      o["x0"] = modes_json(c.simulate.x0);
      o["horizon"] = c.simulate.horizon;
      o["trace_stride"] = c.simulate.trace_stride;
      o["dump_coeffs"] = c.simulate.dump_coeffs;
      break;
    }
    case ExperimentKind::couple: {
      o["x0"] = modes_json(c.couple.x0);
      o["y0"] = modes_json(c.couple.y0);
      o["horizon"] = c.couple.horizon;
      o["n_pairs"] = c.couple.n_pairs;
      o["obs_times"] = c.couple.obs_times;
      o["same_noise"] = c.couple.same_noise;
      break;
    }
    case ExperimentKind::harnack: {
      const HarnackParams& hp = c.harnack;
      o["x0"] = modes_json(hp.x0);
      o["y0"] = modes_json(hp.y0);
      o["horizon"] = hp.horizon;
      o["n_paths"] = hp.n_paths;
      o["s_values"] = hp.s_values;
      o["obs_times"] = hp.obs_times;
      json arr = json::array();
      for (const auto& os : hp.observables) arr.push_back(observable_json(os));
      o["observables"] = arr;
      if (hp.gradient.enabled) {
        json gx;
        gx["direction_mode"] = hp.gradient.direction_mode;
        gx["eps"] = hp.gradient.eps;
        gx["n_paths"] = hp.gradient.n_paths;
        o["gradient"] = gx;
      }
      break;
    }
    case ExperimentKind::ergodic: {
      const ErgodicParams& ep = c.ergodic;
      o["mode"] = ep.mode;
      if (ep.mode == "tv") {
        o["x0"] = modes_json(ep.x0);
        o["y0"] = modes_json(ep.y0);
        o["times"] = ep.times;
        o["n_paths"] = ep.n_paths;
      } else {
        o["horizon"] = ep.horizon;
        o["burn_in"] = ep.burn_in;
        o["observation_stride"] = ep.observation_stride;
        if (!ep.horizons.empty()) o["horizons"] = ep.horizons;
        o["beta_tig"] = ep.beta_tig;
        o["keep_samples"] = ep.keep_samples;
        json arr = json::array();
        for (const auto& os : ep.observables)
          arr.push_back(observable_json(os));
        o["observables"] = arr;
        o["x0"] = modes_json(ep.x0);
        if (ep.mode == "two-chain") o["y0"] = modes_json(ep.y0);
      }
      break;
    }
    case ExperimentKind::noise_diag: {
      o["horizon"] = c.noise_diag.horizon;
      o["n_paths"] = c.noise_diag.n_paths;
      o["beta0"] = c.noise_diag.beta0;
      break;
    }
    case ExperimentKind::validate_drift: {
      o["radius"] = c.validate_drift.radius;
      o["step"] = c.validate_drift.step;
      break;
    }
  }
  return o;
}

json config_json(const ExperimentConfig& c) {
  json o;
  o["experiment"] = experiment_name(c.experiment);
  json drift;
  drift["poly"] = c.model.drift.poly_coeffs;
  json lip;
  lip["kind"] = lip_name(c.model.drift.lip.kind);
  lip["scale"] = c.model.drift.lip.scale;
  drift["lipschitz"] = lip;
  drift["L_f"] = c.model.drift.L_f;
  drift["theta_diss"] = c.model.drift.theta_diss;
  drift["q"] = c.model.drift.q;
  drift["L_f_prime"] = c.model.drift.L_f_prime;
  json model;
  model["grid"] = {{"n_modes", c.model.grid.n_modes},
                   {"n_quad", c.model.grid.n_quad}};
  model["drift"] = drift;
  model["noise"] = {{"theta", c.model.noise.theta}};
  model["p"] = c.model.p;
  o["model"] = model;
  json scheme;
  scheme["dt"] = c.scheme.dt;
  scheme["kind"] = c.scheme.kind == SchemeKind::exponential_euler
                       ? "exponential_euler"
                       : "splitting_reference";
  if (c.scheme.taming) scheme["taming"] = *c.scheme.taming;
  o["scheme"] = scheme;
  o["parameters"] = params_json(c);
  o["seed"] = c.seed;
  o["n_workers"] = c.n_workers;
  return o;
}

// ---- bundled configs ----

const std::string kAllenCahnP2 = R"({
  "model": {
    "grid": {"n_modes": 64, "n_quad": 128},
    "drift": {"poly": [0.0, 1.0, 0.0, -1.0], "L_f": 1.0, "theta_diss": 0.25, "q": 4.0, "L_f_prime": 3.0},
    "noise": {"theta": 0.0},
    "p": 2.0
  },
  "scheme": {"dt": 1e-4, "kind": "exponential_euler"},
  "experiment": "harnack",
  "parameters": {
    "x0": {"1": 0.1},
    "y0": {},
    "horizon": 0.5,
    "n_paths": 800,
    "s_values": [1.5, 2.0],
    "obs_times": [0.125, 0.25, 0.375, 0.5],
    "observables": [
      {"kind": "bounded_trig", "a": 2.0, "b": 1.0, "mode": 1},
      {"kind": "clipped_exponential", "scale": 1.0, "lo": 0.2, "hi": 5.0, "mode": 1},
      {"kind": "indicator_ball", "radius": 0.3, "p": 2.0, "offset": 0.5, "center": {}}
    ],
    "gradient": {"direction_mode": 1, "eps": 0.05, "n_paths": 400}
  },
  "seed": 20260819,
  "n_workers": 0
}
)";

const std::string kLinearOu = R"({
  "model": {
    "grid": {"n_modes": 64, "n_quad": 128},
    "drift": {"poly": [], "L_f": 0.5, "theta_diss": 0.5, "q": 2.0, "L_f_prime": 0.5},
    "noise": {"theta": 0.0},
    "p": 2.0
  },
  "scheme": {"dt": 1e-3, "kind": "exponential_euler"},
  "experiment": "noise-diag",
  "parameters": {"horizon": 2.0, "n_paths": 20000, "beta0": 0.2},
  "seed": 1912,
  "n_workers": 0
}
)";

const std::string kAllenCahnP4 = R"({
  "model": {
    "grid": {"n_modes": 32, "n_quad": 64},
    "drift": {"poly": [0.0, 1.0, 0.0, -1.0], "L_f": 1.0, "theta_diss": 0.25, "q": 4.0, "L_f_prime": 3.0},
    "noise": {"theta": 0.0},
    "p": 4.0
  },
  "scheme": {"dt": 1e-3, "kind": "exponential_euler"},
  "experiment": "ergodic",
  "parameters": {
    "mode": "average",
    "horizon": 10.0,
    "burn_in": 0.0,
    "observation_stride": 0.05,
    "observables": [{"kind": "bounded_trig", "a": 2.0, "b": 1.0, "mode": 1}],
    "x0": {}
  },
  "seed": 41,
  "n_workers": 0
}
)";

}  // namespace

const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::couple: return "couple";
    case ExperimentKind::harnack: return "harnack";
    case ExperimentKind::ergodic: return "ergodic";
    case ExperimentKind::noise_diag: return "noise-diag";
    case ExperimentKind::validate_drift: return "validate-drift";
  }
  return "simulate";
}

ExperimentKind experiment_from_name(const std::string& s) {
  if (s == "simulate") return ExperimentKind::simulate;
  if (s == "couple") return ExperimentKind::couple;
  if (s == "harnack") return ExperimentKind::harnack;
  if (s == "ergodic") return ExperimentKind::ergodic;
  if (s == "noise-diag") return ExperimentKind::noise_diag;
  if (s == "validate-drift") return ExperimentKind::validate_drift;
  throw ConfigError("unknown experiment '" + s + "'");
}

SpectralField make_field(const ModeMap& modes, const GridSpec& g) {
  SpectralField x(g);
  for (const auto& [k, a] : modes) {
    if (k < 1 || k > g.n_modes)
      throw ConfigError("mode index " + std::to_string(k) + " out of 1.." +
                        std::to_string(g.n_modes));
    if (!std::isfinite(a))
      throw ConfigError("mode amplitudes must be finite");
    x.c[k - 1] = a;
  }
  return x;
}

Observable make_observable(const ObservableSpec& os, const GridSpec& g) {
  if (os.kind == "bounded_trig")
    return Observable::bounded_trig(os.a, os.b, os.mode);
  if (os.kind == "clipped_exponential")
    return Observable::clipped_exponential(os.scale, os.lo, os.hi, os.mode);
  if (os.kind == "indicator_ball")
    return Observable::indicator_ball(make_field(os.center, g), os.radius,
                                      os.pn, os.offset);
  if (os.kind == "linear_mode") return Observable::linear_mode(os.mode);
  throw ConfigError("unknown observable kind '" + os.kind + "'");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  need_object(j, "config");
  allow_keys(j, {"model", "scheme", "experiment", "parameters", "seed",
                 "n_workers", "out_dir"},
             "");
  std::uint64_t seed = u64_at(j, "seed", "");

  const json& jm = need(j, "model", "");
  need_object(jm, "model");
  allow_keys(jm, {"grid", "drift", "noise", "p"}, "model");
  const json& jg = need(jm, "grid", "model");
  need_object(jg, "model.grid");
  allow_keys(jg, {"n_modes", "n_quad"}, "model.grid");
  std::uint64_t nm = u64_at(jg, "n_modes", "model.grid");
  std::uint64_t nq = u64_at(jg, "n_quad", "model.grid");
  if (nm < 1 || nm > 4096) fail("model.grid.n_modes", "expected 1..4096");
  if (nq < 1 || nq > 65536) fail("model.grid.n_quad", "expected 1..65536");
  GridSpec grid = [&]() -> GridSpec {
    try {
      return GridSpec(static_cast<int>(nm), static_cast<int>(nq));
    } catch (const std::exception& e) {
      fail("model.grid", e.what());
    }
  }();

  DriftSpec drift = parse_drift(need(jm, "drift", "model"), "model.drift");

  const json& jn = need(jm, "noise", "model");
  need_object(jn, "model.noise");
  allow_keys(jn, {"theta"}, "model.noise");
  double theta = num_at(jn, "theta", "model.noise");
  if (!(theta >= 0.0 && theta < 0.5))
    fail("model.noise.theta",
         "noise coloring must satisfy 0 <= theta < 1/2 (the mode-variance "
         "series diverges otherwise)");
  NoiseSpec noise = [&]() -> NoiseSpec {
    try {
      return NoiseSpec(theta, static_cast<int>(nm), seed);
    } catch (const std::exception& e) {
      fail("model.noise", e.what());
    }
  }();

  double p = num_at(jm, "p", "model");
  if (!(p >= 2.0)) fail("model.p", "contraction exponent must satisfy p >= 2");

  const json& js = need(j, "scheme", "");
  need_object(js, "scheme");
  allow_keys(js, {"dt", "kind", "taming"}, "scheme");
  double dt = num_at(js, "dt", "scheme");
  if (!(dt > 0.0)) fail("scheme.dt", "dt must be positive");
  SchemeKind kind = SchemeKind::exponential_euler;
  if (js.contains("kind")) {
    std::string ks = str_at(js, "kind", "scheme");
    if (ks == "exponential_euler")
      kind = SchemeKind::exponential_euler;
    else if (ks == "splitting_reference")
      kind = SchemeKind::splitting_reference;
    else
      fail("scheme.kind", "unknown scheme kind '" + ks + "'");
  }
  std::optional<double> tame;
  if (js.contains("taming")) {
    double tv = as_num(js["taming"], "scheme.taming");
    if (!(tv > 0.0)) fail("scheme.taming", "taming strength must be positive");
    tame = tv;
  }
  SchemeSpec scheme = [&]() -> SchemeSpec {
    try {
      return SchemeSpec(dt, kind, tame);
    } catch (const std::exception& e) {
      fail("scheme", e.what());
    }
  }();

  ExperimentKind ek = [&] {
    try {
      return experiment_from_name(str_at(j, "experiment", ""));
    } catch (const std::exception& e) {
      fail("experiment", e.what());
    }
  }();

  ExperimentConfig cfg(ModelSpec{grid, std::move(drift), noise, p}, scheme);
  cfg.experiment = ek;
  cfg.seed = seed;
  if (j.contains("n_workers")) {
    std::uint64_t w = as_u64(j["n_workers"], "n_workers");
    if (w > 4096) fail("n_workers", "expected 0 (auto) or a count up to 4096");
    cfg.n_workers = static_cast<int>(w);
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) fail("out_dir", "expected a string");
    cfg.out_dir = j["out_dir"].get<std::string>();
  }

  const json& jp = need(j, "parameters", "");
  need_object(jp, "parameters");
  parse_params(jp, cfg);
  return cfg;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  return config_json(cfg).dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json o = config_json(cfg);
  o.erase("n_workers");
  return fnv1a64(o.dump());
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<std::string> bundled_config_names() {
  return {"allen-cahn-p2", "linear-ou", "allen-cahn-p4"};
}

const std::string& bundled_config(const std::string& name) {
  if (name == "allen-cahn-p2") return kAllenCahnP2;
  if (name == "linear-ou") return kLinearOu;
  if (name == "allen-cahn-p4") return kAllenCahnP4;
  throw ConfigError("unknown bundled config '" + name +
                    "' (have: allen-cahn-p2, linear-ou, allen-cahn-p4)");
}

std::string load_config_text(const std::string& path_or_name) {
  std::error_code ec;
  if (std::filesystem::exists(path_or_name, ec)) {
    std::ifstream in(path_or_name, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path_or_name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  try {
    return bundled_config(path_or_name);
  } catch (const ConfigError&) {
    throw ConfigError("no config file at '" + path_or_name +
                      "' and no bundled config of that name (have: "
                      "allen-cahn-p2, linear-ou, allen-cahn-p4)");
  }
}

}  // namespace srd
