#include "srdlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "srdlab/coupling.hpp"
#include "srdlab/ergodic.hpp"
#include "srdlab/integrator.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/parallel.hpp"

namespace srd {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void put(Record& r, const char* k, double v) { r.values.emplace_back(k, v); }

Record record(const std::string& tag, const std::string& label) {
  Record r;
  r.tag = tag;
  r.label = label;
  return r;
}

void add_outcome(Record& r, const CheckOutcome& oc) {
  put(r, "lhs", oc.lhs);
  put(r, "rhs", oc.rhs);
  put(r, "sigma", oc.sigma);
  r.verdict = verdict_name(oc.verdict);
  r.note = oc.note;
}

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < header.size(); ++i)
    ss << (i ? "," : "") << header[i];
  ss << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      ss << (i ? "," : "") << num(row[i]);
    ss << "\n";
  }
  return ss.str();
}

const char* equality_verdict(double mean, double target, double se,
                             double z_max) {
  double dev = std::abs(mean - target);
  bool ok = se > 0.0 ? dev <= z_max * se : dev == 0.0;
  return verdict_name(ok ? Verdict::satisfied : Verdict::violated);
}

// ---- simulate ----

void run_simulate(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const SimulateParams& sp = cfg.simulate;
  SpectralField x0 = make_field(sp.x0, m.grid);
  double T = sp.horizon;
  std::uint64_t n_steps = horizon_steps(T, cfg.scheme.dt);
  double p_tig = m.drift.q + m.p - 2.0;
  CounterRng rng(cfg.seed);

  std::vector<std::vector<double>> rows;
  double sup_p = 0.0;
  StepObserver obs = [&](const TrajectoryState& st) {
    double np = lp_norm(st.x, m.p);
    sup_p = std::max(sup_p, np);
    if (st.step % sp.trace_stride != 0 && st.step != n_steps) return;
    std::vector<double> row = {st.t, np, l2_coeff_norm(st.x),
                               lp_norm(st.x, p_tig)};
    if (sp.dump_coeffs) row.insert(row.end(), st.x.c.begin(), st.x.c.end());
    rows.push_back(std::move(row));
  };
  Trajectory tr = simulate_path(x0, T, {T}, m.grid, m.drift, m.noise,
                                cfg.scheme, rng, path_id(1, 0), obs);

  Record r = record("Zp", "running p-norm along one trajectory");
  put(r, "horizon", T);
  put(r, "n_steps", static_cast<double>(n_steps));
  put(r, "sup_norm_p", sup_p);
  put(r, "final_norm_p", lp_norm(tr.states.back(), m.p));
  put(r, "final_norm_2", l2_coeff_norm(tr.states.back()));
  out.records.push_back(std::move(r));

  std::vector<std::string> header = {"t", "norm_p", "norm_2", "norm_growth"};
  if (sp.dump_coeffs)
    for (int k = 1; k <= m.grid.n_modes; ++k)
      header.push_back("c" + std::to_string(k));
  out.csv_files.emplace_back("trajectory.csv", csv_text(header, rows));
}

// ---- couple ----

void weight_records(const CouplingEnsemble& e, const ModelSpec& m,
                    const SchemeSpec& sch,
                    const std::vector<double>& s_values, RunOutput& out) {
  {
    Record r = record("x-y", "pathwise coupling certificate");
    put(r, "n_pairs", static_cast<double>(e.n));
    put(r, "blowups", e.blowups);
    put(r, "frac_coupled", e.frac_coupled());
    put(r, "r0", e.r0);
    put(r, "cert_bound", e.cert_bound);
    put(r, "min_margin", e.min_margin());
    put(r, "violations", static_cast<double>(e.cert_violations));
    if (e.blowups > 0) {
      r.verdict = verdict_name(Verdict::inconclusive);
      r.note = "blow-ups in the coupling ensemble";
    } else {
      r.verdict = verdict_name(e.cert_violations == 0 ? Verdict::satisfied
                                                      : Verdict::violated);
    }
    out.records.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < e.obs_times.size(); ++j) {
    Estimate w = weight_mean(e, j);
    Record r = record("M", "weight mean at t = " + num(e.obs_times[j]));
    put(r, "t", e.obs_times[j]);
    put(r, "mean", w.mean);
    put(r, "se", w.se);
    put(r, "n", static_cast<double>(w.n));
    r.verdict = equality_verdict(w.mean, 1.0, w.se, 4.0);
    out.records.push_back(std::move(r));
  }
  std::vector<CheckOutcome> ents = check_entropy(e, m);
  for (std::size_t j = 0; j < ents.size(); ++j) {
    Record r =
        record("est-R", "weight entropy bound at t = " + num(e.obs_times[j]));
    put(r, "t", e.obs_times[j]);
    add_outcome(r, ents[j]);
    out.records.push_back(std::move(r));
  }
  for (double s : s_values) {
    Record r = record("est-R+", "weight power bound at s = " + num(s));
    put(r, "s", s);
    add_outcome(r, check_power(e, m, s));
    out.records.push_back(std::move(r));
  }
  {
    Record r = record("nov", "per-path control energy budget");
    add_outcome(r, check_novikov(e, m, sch.dt));
    out.records.push_back(std::move(r));
  }
}

void run_couple(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const CoupleParams& cp = cfg.couple;
  SpectralField x0 = make_field(cp.x0, m.grid);
  SpectralField y0 = make_field(cp.y0, m.grid);
  double T = cp.horizon;
  CounterRng rng(cfg.seed);
  int workers = resolve_workers(cfg.n_workers);

  if (cp.same_noise) {
    double lam = m.lambda();
    SpectralField diff(m.grid);
    for (int k = 0; k < m.grid.n_modes; ++k) diff.c[k] = x0.c[k] - y0.c[k];
    double r0 = lp_norm(diff, m.p);
    std::size_t nt = cp.obs_times.size();
    std::vector<RunningMoments> pw(nt);
    std::vector<double> max_dist(nt, 0.0);
    std::vector<long> violations(nt, 0);
    double slack = 1.0 + 5.0 * cfg.scheme.dt;
    for (std::uint64_t i = 0; i < cp.n_pairs; ++i) {
      PairTrajectory pt =
          simulate_pair_same_noise(x0, y0, T, cp.obs_times, m.p, m.grid,
                                   m.drift, m.noise, cfg.scheme, rng,
                                   path_id(1, i));
      for (std::size_t j = 0; j < nt; ++j) {
        double d = pt.dist_p[j];
        pw[j].add(std::pow(d, m.p));
        max_dist[j] = std::max(max_dist[j], d);
        if (d > slack * std::exp(-lam * cp.obs_times[j]) * r0) ++violations[j];
      }
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < nt; ++j) {
      double t = cp.obs_times[j];
      double env = std::exp(-lam * t) * r0;
      Record rc = record("con", "per-path contraction at t = " + num(t));
      put(rc, "t", t);
      put(rc, "r0", r0);
      put(rc, "envelope", env);
      put(rc, "max_dist", max_dist[j]);
      put(rc, "violations", static_cast<double>(violations[j]));
      rc.verdict = verdict_name(violations[j] == 0 ? Verdict::satisfied
                                                   : Verdict::violated);
      out.records.push_back(std::move(rc));

      double mp = pw[j].mean();
      double lhs = mp > 0.0 ? std::pow(mp, 1.0 / m.p) : 0.0;
      double se = mp > 0.0 ? std::pow(mp, 1.0 / m.p - 1.0) / m.p *
                                 pw[j].stderror()
                           : 0.0;
      Record rw = record("was", "transport distance surrogate at t = " +
                                    num(t));
      put(rw, "t", t);
      put(rw, "lhs", lhs);
      put(rw, "rhs", env);
      put(rw, "sigma", se);
      rw.verdict = verdict_name(lhs <= env + 3.0 * se ? Verdict::satisfied
                                                      : Verdict::violated);
      out.records.push_back(std::move(rw));
      rows.push_back({t, env, max_dist[j], lhs,
                      static_cast<double>(violations[j])});
    }
    out.csv_files.emplace_back(
        "contraction.csv",
        csv_text({"t", "envelope", "max_dist", "mean_dist_p", "violations"},
                 rows));
    return;
  }

  CouplingParams par;
  par.obs_times = cp.obs_times;
  CouplingEnsemble e = run_coupling_ensemble(m, cfg.scheme, x0, y0, T, par,
                                             cp.n_pairs, rng, 1, workers);
  weight_records(e, m, cfg.scheme, {2.0}, out);

  // re-run the first pair with the trace switched on for plotting
  CouplingDriver drv(m.grid, m.drift, m.noise, cfg.scheme, m.p);
  CouplingParams tp = par;
  tp.record_trace = true;
  std::uint64_t n_steps = horizon_steps(T, cfg.scheme.dt);
  tp.trace_stride = static_cast<int>(std::max<std::uint64_t>(
      1, n_steps / 2000));
  CouplingResult first = drv.run(x0, y0, T, tp, rng, path_id(1, 0));
  std::vector<std::vector<double>> rows;
  for (const CouplingTraceRow& row : first.trace)
    rows.push_back({row.t, row.dist, row.gamma, row.log_m});
  out.csv_files.emplace_back(
      "coupling_trace.csv",
      csv_text({"t", "dist", "gamma", "log_m"}, rows));
}

// ---- harnack ----

void run_harnack(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const HarnackParams& hp = cfg.harnack;
  SpectralField x0 = make_field(hp.x0, m.grid);
  SpectralField y0 = make_field(hp.y0, m.grid);
  double T = hp.horizon;
  SpectralField diff(m.grid);
  for (int k = 0; k < m.grid.n_modes; ++k) diff.c[k] = x0.c[k] - y0.c[k];
  double r = lp_norm(diff, m.p);
  CounterRng rng(cfg.seed);
  int workers = resolve_workers(cfg.n_workers);

  EndpointSet from_x =
      sample_endpoints(m, cfg.scheme, x0, T, hp.n_paths, rng, 1, workers);
  EndpointSet from_y =
      sample_endpoints(m, cfg.scheme, y0, T, hp.n_paths, rng, 2, workers);

  for (const ObservableSpec& os : hp.observables) {
    Observable phi = make_observable(os, m.grid);
    struct Side {
      const EndpointSet *pen, *ref;
      const char* name;
    };
    Side sides[2] = {{&from_y, &from_x, "y|x"}, {&from_x, &from_y, "x|y"}};
    for (const Side& sd : sides) {
      Record rl = record("har-log", "log bound, " + phi.label() +
                                        ", sides " + sd.name);
      put(rl, "r", r);
      add_outcome(rl, check_log_harnack(*sd.pen, *sd.ref, phi, m, r));
      out.records.push_back(std::move(rl));
      for (double s : hp.s_values) {
        Record rp = record("har-pow", "power bound s = " + num(s) + ", " +
                                          phi.label() + ", sides " + sd.name);
        put(rp, "s", s);
        put(rp, "r", r);
        add_outcome(rp, check_power_harnack(*sd.pen, *sd.ref, phi, m, r, s));
        out.records.push_back(std::move(rp));
      }
    }
  }

  CouplingParams par;
  par.obs_times = hp.obs_times;
  CouplingEnsemble e = run_coupling_ensemble(m, cfg.scheme, x0, y0, T, par,
                                             hp.n_paths, rng, 3, workers);
  weight_records(e, m, cfg.scheme, hp.s_values, out);

  if (hp.gradient.enabled) {
    SpectralField h(m.grid);
    h.c[hp.gradient.direction_mode - 1] = 1.0;
    Observable phi = make_observable(hp.observables.front(), m.grid);
    GradientCheck gc =
        check_gradient(m, cfg.scheme, x0, h, hp.gradient.eps, T, phi,
                       hp.gradient.n_paths, rng, 4, workers);
    Record r2 = record("est-gra", "directional derivative bound, " +
                                      phi.label());
    put(r2, "eps", hp.gradient.eps);
    put(r2, "fd", gc.fd);
    put(r2, "fd_half", gc.fd_half);
    put(r2, "richardson_ok", gc.richardson_ok ? 1.0 : 0.0);
    add_outcome(r2, gc.outcome);
    out.records.push_back(std::move(r2));
  }
}

// ---- ergodic ----

const char* kb_tag(std::size_t idx, std::size_t n_obs) {
  if (idx < n_obs) return "mun";
  if (idx == n_obs) return "Zp";
  if (idx == n_obs + 1) return "est-tig1";
  return "est-tig2";
}

void kb_records(const KBEstimate& kb, std::size_t n_obs,
                const std::string& suffix, RunOutput& out) {
  std::size_t last = kb.horizons.size() - 1;
  for (std::size_t i = 0; i < kb.series.size(); ++i) {
    const KBSeries& ser = kb.series[i];
    Record r = record(kb_tag(i, n_obs),
                      "time average of " + ser.label + suffix);
    put(r, "horizon", kb.horizons[last]);
    put(r, "value", ser.value[last]);
    put(r, "se", ser.se[last]);
    put(r, "batches", static_cast<double>(kb.batches[last]));
    out.records.push_back(std::move(r));
  }
}

std::string kb_series_csv(const KBEstimate& kb) {
  std::ostringstream ss;
  ss << "horizon,series,value,se,batches\n";
  for (std::size_t e = 0; e < kb.horizons.size(); ++e)
    for (const KBSeries& ser : kb.series)
      ss << num(kb.horizons[e]) << ",\"" << ser.label << "\","
         << num(ser.value[e]) << "," << num(ser.se[e]) << ","
         << kb.batches[e] << "\n";
  return ss.str();
}

std::string kb_samples_csv(const KBEstimate& kb) {
  std::ostringstream ss;
  ss << "t";
  for (const KBSeries& ser : kb.series) ss << ",\"" << ser.label << "\"";
  ss << "\n";
  for (std::size_t j = 0; j < kb.sample_times.size(); ++j) {
    ss << num(kb.sample_times[j]);
    for (const auto& row : kb.samples) ss << "," << num(row[j]);
    ss << "\n";
  }
  return ss.str();
}

void run_ergodic(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const ErgodicParams& ep = cfg.ergodic;
  CounterRng rng(cfg.seed);
  int workers = resolve_workers(cfg.n_workers);

  if (ep.mode == "tv") {
    SpectralField x0 = make_field(ep.x0, m.grid);
    SpectralField y0 = make_field(ep.y0, m.grid);
    TvReport rep = tv_decay_profile(x0, y0, ep.times, m, cfg.scheme,
                                    ep.n_paths, rng, 1, workers);
    std::vector<std::vector<double>> rows;
    for (const TvPoint& pt : rep.points) {
      Record r = record("tv", "distance-in-law bounds at t = " + num(pt.t));
      put(r, "t", pt.t);
      put(r, "frac_uncoupled", pt.frac_uncoupled);
      put(r, "mean_abs_dev", pt.mean_abs_dev);
      put(r, "se_abs_dev", pt.se_abs_dev);
      put(r, "coupling_bound", pt.coupling_bound);
      put(r, "pinsker_bound", pt.pinsker_bound);
      put(r, "blowups", pt.blowups);
      out.records.push_back(std::move(r));
      rows.push_back({pt.t, pt.frac_uncoupled, pt.mean_abs_dev, pt.se_abs_dev,
                      pt.coupling_bound, pt.pinsker_bound});
    }
    Record r = record("tv", "decay rate of the upper-bound curves");
    put(r, "lambda", rep.lambda);
    put(r, "r0", rep.r0);
    put(r, "t0", rep.t0);
    put(r, "n_times", static_cast<double>(rep.points.size()));
    put(r, "ok_sampled", rep.envelope_ok_mc ? 1.0 : 0.0);
    put(r, "ok_closed", rep.envelope_ok_closed ? 1.0 : 0.0);
    if (!rep.envelope_checked) {
      r.verdict = verdict_name(Verdict::inconclusive);
      r.note = "rate check needs lambda > 0 and two times past t0";
    } else {
      r.verdict =
          verdict_name(rep.envelope_ok_mc && rep.envelope_ok_closed
                           ? Verdict::satisfied
                           : Verdict::violated);
    }
    out.records.push_back(std::move(r));
    out.csv_files.emplace_back(
        "tv_profile.csv",
        csv_text({"t", "frac_uncoupled", "mean_abs_dev", "se_abs_dev",
                  "coupling_bound", "pinsker_bound"},
                 rows));
    return;
  }

  ErgodicRunSpec spec;
  spec.horizon = ep.horizon;
  spec.burn_in = ep.burn_in;
  spec.observation_stride = ep.observation_stride;
  spec.beta_tig = ep.beta_tig;
  spec.horizons = ep.horizons;
  spec.keep_samples = ep.keep_samples;
  for (const ObservableSpec& os : ep.observables)
    spec.observables.push_back(make_observable(os, m.grid));
  std::size_t n_obs = spec.observables.size();

  if (ep.mode == "average") {
    KBEstimate kb = kb_average_from(make_field(ep.x0, m.grid), spec, m,
                                    cfg.scheme, rng, 1);
    kb_records(kb, n_obs, "", out);
    out.csv_files.emplace_back("kb_series.csv", kb_series_csv(kb));
    if (ep.keep_samples)
      out.csv_files.emplace_back("kb_samples.csv", kb_samples_csv(kb));
    return;
  }

  // two-chain
  SpectralField x0 = make_field(ep.x0, m.grid);
  SpectralField y0 = make_field(ep.y0, m.grid);
  TwoChainReport rep =
      two_chain_convergence(x0, y0, spec, m, cfg.scheme, rng, 1, 2, 3);
  for (const ChainAgreement& a : rep.agreement) {
    Record r = record("tm-erg", "two-chain agreement, " + a.label);
    put(r, "mean_x", a.mean_x);
    put(r, "se_x", a.se_x);
    put(r, "mean_y", a.mean_y);
    put(r, "se_y", a.se_y);
    r.verdict = verdict_name(a.verdict);
    out.records.push_back(std::move(r));
  }
  {
    Record r = record("con", "companion pair inside the decay envelope");
    put(r, "lambda", rep.lambda);
    put(r, "r0", rep.r0);
    put(r, "points", rep.envelope_points);
    put(r, "violations", rep.envelope_violations);
    if (!rep.envelope_checked) {
      r.verdict = verdict_name(Verdict::inconclusive);
      r.note = "envelope check needs lambda > 0";
    } else {
      r.verdict = verdict_name(rep.envelope_violations == 0
                                   ? Verdict::satisfied
                                   : Verdict::violated);
    }
    out.records.push_back(std::move(r));
  }
  out.csv_files.emplace_back("chain_x.csv", kb_series_csv(rep.chain_x));
  out.csv_files.emplace_back("chain_y.csv", kb_series_csv(rep.chain_y));
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < rep.pair_times.size(); ++j)
    rows.push_back({rep.pair_times[j], rep.pair_dist[j],
                    rep.lambda > 0.0
                        ? std::exp(-rep.lambda * rep.pair_times[j]) * rep.r0
                        : std::numeric_limits<double>::quiet_NaN()});
  out.csv_files.emplace_back("pair_decay.csv",
                             csv_text({"t", "dist", "envelope"}, rows));
}

// ---- noise diagnostics ----

void run_noise_diag(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const NoiseDiagParams& np = cfg.noise_diag;
  const GridSpec& g = m.grid;
  double t = np.horizon;
  int n_paths = static_cast<int>(np.n_paths);

  SeriesValue sv = gamma_series_integrated(m.noise.theta, g.n_modes);
  {
    Record r = record("gamma", "integrated mode-variance series");
    put(r, "theta", m.noise.theta);
    put(r, "n_modes", g.n_modes);
    put(r, "value", sv.value);
    put(r, "tail_bound", sv.tail_bound);
    out.records.push_back(std::move(r));
  }
  {
    Record r = record("G-1", "inverse noise-operator norm");
    put(r, "value", g_inverse_norm(m.noise));
    out.records.push_back(std::move(r));
  }

  MomentEstimate me = ou_moment_estimate(m.noise, g, t, 2.0, 2, n_paths);
  double closed = 0.0;
  for (int k = 1; k <= g.n_modes; ++k) {
    double lk = g.eigenvalue(k);
    closed += std::pow(lk, m.noise.theta - 1.0) *
              (1.0 - std::exp(-2.0 * lk * t)) / 2.0;
  }
  {
    Record r = record("wa1", "squared length of the driving convolution at "
                             "t = " + num(t));
    put(r, "t", t);
    put(r, "estimate", me.mean);
    put(r, "se", me.se);
    put(r, "n", me.n);
    put(r, "closed_form", closed);
    r.verdict = equality_verdict(me.mean, closed, me.se, 3.0);
    out.records.push_back(std::move(r));
  }

  // per-mode law check with one exact step per path
  CounterRng rng(cfg.seed);
  std::vector<RunningMoments> mom(g.n_modes);
  for (int i = 0; i < n_paths; ++i) {
    OUState st = ou_exact_step(OUState{0.0, SpectralField(g)}, t, m.noise, g,
                               rng, path_id(1, i), 0);
    for (int k = 0; k < g.n_modes; ++k) mom[k].add(st.field.c[k]);
  }
  double max_z_mean = 0.0, max_z_var = 0.0;
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < g.n_modes; ++k) {
    double lk = g.eigenvalue(k + 1);
    double target = std::pow(lk, m.noise.theta - 1.0) *
                    (1.0 - std::exp(-2.0 * lk * t)) / 2.0;
    double z_mean =
        mom[k].stderror() > 0.0 ? std::abs(mom[k].mean()) / mom[k].stderror()
                                : 0.0;
    double se_var = target * std::sqrt(2.0 / std::max(1, n_paths - 1));
    double z_var = std::abs(mom[k].variance() - target) / se_var;
    max_z_mean = std::max(max_z_mean, z_mean);
    max_z_var = std::max(max_z_var, z_var);
    rows.push_back({static_cast<double>(k + 1), lk, mom[k].mean(),
                    mom[k].variance(), target, z_mean, z_var});
  }
  {
    Record r = record("wa1", "per-mode conditional laws at t = " + num(t));
    put(r, "n_modes", g.n_modes);
    put(r, "n_paths", n_paths);
    put(r, "max_z_mean", max_z_mean);
    put(r, "max_z_var", max_z_var);
    r.verdict = verdict_name(max_z_mean <= 4.0 && max_z_var <= 4.0
                                 ? Verdict::satisfied
                                 : Verdict::violated);
    out.records.push_back(std::move(r));
  }
  out.csv_files.emplace_back(
      "mode_laws.csv",
      csv_text({"k", "lambda_k", "mean", "var", "target_var", "z_mean",
                "z_var"},
               rows));

  MomentEstimate sm =
      sobolev_moment_estimate(m.noise, g, np.beta0, t, n_paths);
  {
    Record r = record("wa+", "fractional-smoothness moment of the "
                             "convolution");
    put(r, "beta0", np.beta0);
    put(r, "t", t);
    put(r, "estimate", sm.mean);
    put(r, "se", sm.se);
    put(r, "n", sm.n);
    out.records.push_back(std::move(r));
  }
}

// ---- drift validation ----

void run_validate_drift(const ExperimentConfig& cfg, RunOutput& out) {
  const ModelSpec& m = cfg.model;
  const ValidateDriftParams& vp = cfg.validate_drift;
  GridCheckReport f = validate_dissipativity(m.drift, vp.radius, vp.step);
  {
    Record r = record("f", "one-sided dissipativity certificate");
    put(r, "radius", vp.radius);
    put(r, "step", vp.step);
    put(r, "pass", f.pass ? 1.0 : 0.0);
    put(r, "worst_margin", f.worst_margin);
    put(r, "xi", f.xi);
    put(r, "eta", f.eta);
    r.verdict = verdict_name(f.pass ? Verdict::satisfied : Verdict::violated);
    r.note = f.note;
    out.records.push_back(std::move(r));
  }
  GridCheckReport fp = validate_growth(m.drift, vp.radius, vp.step);
  {
    Record r = record("f+", "polynomial growth certificate");
    put(r, "radius", vp.radius);
    put(r, "step", vp.step);
    put(r, "pass", fp.pass ? 1.0 : 0.0);
    put(r, "worst_margin", fp.worst_margin);
    put(r, "xi", fp.xi);
    put(r, "eta", fp.eta);
    r.verdict =
        verdict_name(fp.pass ? Verdict::satisfied : Verdict::violated);
    r.note = fp.note;
    out.records.push_back(std::move(r));
  }
  {
    Record r = record("lam", "contraction rate of the pair distance");
    put(r, "lambda", m.lambda());
    put(r, "lambda_1", m.grid.eigenvalue(1));
    put(r, "L_f", m.drift.L_f);
    put(r, "theta_diss", m.drift.theta_diss);
    put(r, "q", m.drift.q);
    put(r, "p", m.p);
    out.records.push_back(std::move(r));
  }
  DimensionCheck dc = check_dimension_condition(1, m.p, m.drift.q);
  {
    Record r = record("d", "dimension constraint for the superlinear term");
    put(r, "dim", 1.0);
    put(r, "pass", dc.pass ? 1.0 : 0.0);
    put(r, "vacuous", dc.vacuous ? 1.0 : 0.0);
    put(r, "bound", dc.bound);
    r.verdict = verdict_name(dc.pass ? Verdict::satisfied : Verdict::violated);
    r.note = dc.note;
    out.records.push_back(std::move(r));
  }
  {
    Record r = record("G-1", "inverse noise-operator norm");
    put(r, "value", g_inverse_norm(m.noise));
    out.records.push_back(std::move(r));
  }
}

// ---- persistence ----

json record_json(const Record& r, const std::string& hash_text,
                 std::uint64_t seed, double wall_ms) {
  json o;
  o["tag"] = r.tag;
  o["label"] = r.label;
  json vals = json::object();
  for (const auto& [k, v] : r.values) vals[k] = v;
  o["values"] = vals;
  if (!r.verdict.empty()) o["verdict"] = r.verdict;
  if (!r.note.empty()) o["note"] = r.note;
  o["config_hash"] = hash_text;
  o["seed"] = seed;
  o["version"] = kVersion;
  o["wallclock_ms"] = wall_ms;
  return o;
}

void write_atomic(const std::filesystem::path& target,
                  const std::string& text) {
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ConfigError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::string summary_text(const ExperimentConfig& cfg, const RunOutput& out,
                         int code, double wall_ms) {
  std::ostringstream ss;
  ss << "srdlab " << kVersion << "  experiment="
     << experiment_name(cfg.experiment) << "  seed=" << cfg.seed
     << "  hash=" << hash_hex(config_hash(cfg)) << "  wallclock_ms="
     << num(wall_ms) << "\n";
  for (const Record& r : out.records) {
    ss << "[" << r.tag << "] " << r.label << ":";
    for (const auto& [k, v] : r.values) ss << " " << k << "=" << num(v);
    if (!r.verdict.empty()) ss << " verdict=" << r.verdict;
    if (!r.note.empty()) ss << " note=\"" << r.note << "\"";
    ss << "\n";
  }
  for (const auto& [name, text] : out.csv_files)
    ss << "wrote " << name << " (" << text.size() << " bytes)\n";
  ss << "exit status: " << code << "\n";
  return ss.str();
}

json records_json(const RunOutput& out, const ExperimentConfig& cfg,
                  double wall_ms) {
  std::string hash_text = hash_hex(config_hash(cfg));
  json arr = json::array();
  for (const Record& r : out.records)
    arr.push_back(record_json(r, hash_text, cfg.seed, wall_ms));
  return arr;
}

// removes the timing field everywhere so replays compare pure content
json strip_wallclock(json v) {
  if (v.is_object()) v.erase("wallclock_ms");
  if (v.is_array())
    for (auto& e : v) e = strip_wallclock(e);
  return v;
}

}  // namespace

RunOutput execute(const ExperimentConfig& cfg) {
  RunOutput out;
  switch (cfg.experiment) {
    case ExperimentKind::simulate: run_simulate(cfg, out); break;
    case ExperimentKind::couple: run_couple(cfg, out); break;
    case ExperimentKind::harnack: run_harnack(cfg, out); break;
    case ExperimentKind::ergodic: run_ergodic(cfg, out); break;
    case ExperimentKind::noise_diag: run_noise_diag(cfg, out); break;
    case ExperimentKind::validate_drift: run_validate_drift(cfg, out); break;
  }
  return out;
}

int exit_code_for(const RunOutput& out) {
  for (const Record& r : out.records)
    if (r.verdict == verdict_name(Verdict::violated)) return 2;
  return 0;
}

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  RunOutput out = execute(cfg);
  double wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  int code = exit_code_for(out);

  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);

  json doc;
  doc["version"] = kVersion;
  doc["experiment"] = experiment_name(cfg.experiment);
  doc["config_hash"] = hash_hex(config_hash(cfg));
  doc["seed"] = cfg.seed;
  doc["config"] = json::parse(canonical_config_json(cfg));
  doc["records"] = records_json(out, cfg, wall_ms);
  doc["wallclock_ms"] = wall_ms;
  write_atomic(dir / "results.json", doc.dump(2) + "\n");
  write_atomic(dir / "summary.txt", summary_text(cfg, out, code, wall_ms));
  for (const auto& [name, text] : out.csv_files)
    write_atomic(dir / name, text);
  return code;
}

int replay_results(const std::string& results_path, int workers_override) {
  std::ifstream in(results_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read results file " + results_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("results file is not valid JSON: ") +
                      e.what());
  }
  if (!doc.is_object() || !doc.contains("config") || !doc.contains("seed") ||
      !doc.contains("records"))
    throw ConfigError(
        "results file lacks the config/seed/records metadata; not "
        "replayable");

  ExperimentConfig cfg = parse_config(doc["config"].dump());
  if (workers_override > 0) cfg.n_workers = workers_override;

  RunOutput fresh = execute(cfg);
  json stored = strip_wallclock(doc["records"]);
  json redone = strip_wallclock(records_json(fresh, cfg, 0.0));

  std::size_t mism = 0;
  std::string stored_hash = doc.value("config_hash", "");
  if (stored_hash != hash_hex(config_hash(cfg))) {
    std::printf("replay: config hash mismatch (stored %s, recomputed %s)\n",
                stored_hash.c_str(), hash_hex(config_hash(cfg)).c_str());
    ++mism;
  }
  if (stored.size() != redone.size()) {
    std::printf("replay: record count differs (stored %zu, recomputed %zu)\n",
                stored.size(), redone.size());
    ++mism;
  }
  std::size_t n = std::min(stored.size(), redone.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (stored[i] == redone[i]) continue;
    ++mism;
    std::string tag = redone[i].is_object()
                          ? redone[i].value("tag", std::string("?"))
                          : std::string("?");
    std::printf("replay: record %zu [%s] differs\n", i, tag.c_str());
  }
  if (mism == 0) {
    std::printf("replay: exact match (%zu records)\n", n);
    return 0;
  }
  std::printf("replay: %zu mismatch(es)\n", mism);
  return 3;
}

std::string resolve_out_dir(const std::string& flag_value,
                            const ExperimentConfig& cfg) {
  if (!flag_value.empty()) return flag_value;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  const char* env = std::getenv("SRDLAB_OUT");
  if (env && *env) return env;
  return ".";
}

}  // namespace srd
