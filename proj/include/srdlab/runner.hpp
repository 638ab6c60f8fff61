#pragma once
// Experiment execution: dispatches a parsed config to the matching module,
// collects tagged records, and persists results.json, summary.txt and the
// CSV traces atomically. Replay re-executes the config embedded in a results
// file and compares the records bit for bit (wall-clock excluded).

#include <string>
#include <utility>
#include <vector>

#include "srdlab/config.hpp"

namespace srd {

struct Record {
  std::string tag;    // quantity identifier stamped on the output
  std::string label;  // human-readable description
  std::vector<std::pair<std::string, double>> values;
  std::string verdict;  // empty when the record is purely descriptive
  std::string note;
};

struct RunOutput {
  std::vector<Record> records;
  // file name -> full text, written next to results.json
  std::vector<std::pair<std::string, std::string>> csv_files;
};

// deterministic in (config, seed); independent of the worker count
RunOutput execute(const ExperimentConfig& cfg);

// 0 when no record failed, 2 when at least one verdict reports a violation
int exit_code_for(const RunOutput& out);

// executes and persists the artifacts into out_dir; returns exit_code_for
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// 0 = exact match, 3 = mismatch; throws ConfigError on missing metadata
int replay_results(const std::string& results_path, int workers_override);

// precedence: --out flag, then config.out_dir, then $SRDLAB_OUT, then "."
std::string resolve_out_dir(const std::string& flag_value,
                            const ExperimentConfig& cfg);

}  // namespace srd
