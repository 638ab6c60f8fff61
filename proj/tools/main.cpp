// Command-line driver: declarative experiments in, tagged records out.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "srdlab/config.hpp"
#include "srdlab/runner.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config,
                  "config file path or bundled name (allen-cahn-p2, "
                  "linear-ou, allen-cahn-p4)")
      ->required();
  cmd->add_option("--seed", f.seed, "override the config seed")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--workers", f.workers,
                  "override the worker count (0 = all hardware threads)");
  cmd->add_option("--out", f.out, "output directory");
}

int run_one(srd::ExperimentKind want, const CommonFlags& f) {
  srd::ExperimentConfig cfg =
      srd::parse_config(srd::load_config_text(f.config));
  if (cfg.experiment != want) {
    // drift certification needs only the model, so it accepts any config;
    // every other subcommand needs its own parameter block
    if (want == srd::ExperimentKind::validate_drift) {
      cfg.experiment = srd::ExperimentKind::validate_drift;
      cfg.validate_drift = srd::ValidateDriftParams{};
    } else {
      throw srd::ConfigError(
          std::string("the config describes a '") +
          srd::experiment_name(cfg.experiment) +
          "' experiment; run that subcommand or change the config");
    }
  }
  if (f.seed_set) {
    cfg.seed = f.seed;
    cfg.model.noise.seed = f.seed;
  }
  if (f.workers >= 0) cfg.n_workers = f.workers;
  std::string dir = srd::resolve_out_dir(f.out, cfg);
  int code = srd::run_experiment(cfg, dir);
  std::printf("experiment=%s seed=%llu hash=%s out=%s exit=%d\n",
              srd::experiment_name(cfg.experiment),
              static_cast<unsigned long long>(cfg.seed),
              srd::hash_hex(srd::config_hash(cfg)).c_str(), dir.c_str(),
              code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral simulation lab for a dissipative stochastic "
               "reaction-diffusion equation"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    srd::ExperimentKind kind;
  };
  const SubSpec subs[] = {
      {"simulate", "run one trajectory and trace its norms",
       srd::ExperimentKind::simulate},
      {"couple", "run an ensemble of coupled or same-noise pairs",
       srd::ExperimentKind::couple},
      {"harnack", "check the semigroup inequalities on an observable menu",
       srd::ExperimentKind::harnack},
      {"ergodic", "long-run averages, two-chain agreement, decay profiles",
       srd::ExperimentKind::ergodic},
      {"noise-diag", "closed-form checks of the driving convolution",
       srd::ExperimentKind::noise_diag},
      {"validate-drift", "certify the reaction-term constants",
       srd::ExperimentKind::validate_drift},
  };

  CommonFlags flags[6];
  srd::ExperimentKind picked = srd::ExperimentKind::validate_drift;
  int picked_idx = -1;
  for (int i = 0; i < 6; ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(cmd, flags[i]);
    cmd->callback([&, i] {
      picked = subs[i].kind;
      picked_idx = i;
    });
  }

  std::string replay_path;
  int replay_workers = -1;
  CLI::App* replay =
      app.add_subcommand("replay", "re-run a results file and compare");
  replay->add_option("results", replay_path, "path to results.json")
      ->required();
  replay->add_option("--workers", replay_workers,
                     "override the worker count for the re-run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) return srd::replay_results(replay_path, replay_workers);
    return run_one(picked, flags[picked_idx]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
