#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/simulator.hpp"

namespace fedsim {

// Invalid configuration (bad file, bad value, bad combination). The CLI
// maps this to exit code 1; runtime failures map to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  FederationConfig config;
  std::filesystem::path outdir = "out";
  std::string label = "run";
  // (policy, aggregator) pairs for sweep mode; empty for single runs.
  std::vector<std::pair<SelectionPolicy, AggregatorKind>> sweep_pairs;
};

struct RunOutput {
  std::filesystem::path rounds_path;
  std::filesystem::path summary_path;
  std::filesystem::path store_path;
  std::string label;
  int rounds = 0;
  double final_score = 0.0;
  double final_loss = 0.0;
  double cumulative_time = 0.0;
};

// Runs one federation and writes <outdir>/<label>/{rounds.jsonl,
// summary.json, store.jsonl}.
RunOutput run_experiment(const ExperimentSpec& spec);

struct SweepOutput {
  std::vector<RunOutput> runs;
  std::filesystem::path comparison_path;
  // labels of pairs that failed, with their error messages
  std::vector<std::pair<std::string, std::string>> failures;
};

// Runs every (policy, aggregator) pair with the same seed (hence the
// same datasets), one label directory per pair, plus a combined
// comparison.csv. Pair failures are collected, not fatal.
SweepOutput run_sweep(const ExperimentSpec& spec);

// Parsers shared by the config file and the CLI.
SelectionPolicy parse_policy(const std::string& text);
AggregatorKind parse_aggregator(const std::string& text);
HarmonicMode parse_harmonic_mode(const std::string& text);
std::vector<std::pair<SelectionPolicy, AggregatorKind>> parse_sweep_pairs(
    const std::string& text);
std::string pair_label(SelectionPolicy policy, AggregatorKind aggregator);

std::string to_string(HarmonicMode mode);

// Config file: one `key = value` per line, `#` comments, blank lines
// ignored. Unknown keys and malformed values raise ConfigError with
// `<file>:<line>:` prefixes.
ExperimentSpec load_spec_file(const std::filesystem::path& path);

// Applies a single key/value pair to the spec; `context` prefixes error
// messages (e.g. "config.txt:7"). Shared by file loading and tests.
void apply_key_value(ExperimentSpec& spec, const std::string& key,
                     const std::string& value, const std::string& context);

}  // namespace fedsim
