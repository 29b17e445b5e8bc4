// fedsim — federated-learning simulation driver.
//
//   fedsim run   [options]   run one federation and export metrics
//   fedsim sweep [options]   run several policy+aggregator pairs on the
//                            same seed and write a comparison table
//
// Options mirror the config-file keys; flags override file values and
// the FEDSIM_OUTDIR environment variable supplies the default output
// directory. Exit codes: 0 success, 1 config error, 2 runtime error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedsim/experiment.hpp"

namespace {

struct CliOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<int> collaborators;
  std::optional<double> fraction;
  std::optional<std::string> policy;
  std::optional<std::string> aggregator;
  std::optional<std::string> agg_mode;
  std::optional<double> epsilon;
  std::optional<double> heterogeneity;
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<int> dimension;
  std::optional<int> samples;
  std::optional<double> noise_std;
  std::optional<int> validation_samples;
  std::optional<double> overhead;
  std::optional<int> threads;
  bool identical_datasets = false;
  std::optional<std::string> outdir;
  std::optional<std::string> label;
  std::optional<std::string> pairs;
};

void add_common_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value lines)");
  cmd->add_option("--seed", opts.seed, "federation seed");
  cmd->add_option("--rounds", opts.rounds, "communication rounds");
  cmd->add_option("--collaborators", opts.collaborators, "number of collaborators");
  cmd->add_option("--fraction", opts.fraction, "participation fraction per round");
  cmd->add_option("--policy", opts.policy,
                  "selection policy: recommender | sliding-window | random");
  cmd->add_option("--aggregator", opts.aggregator,
                  "aggregator: hsimagg | fedavg | simagg");
  cmd->add_option("--agg-mode", opts.agg_mode,
                  "harmonic mode: standard | literal");
  cmd->add_option("--epsilon", opts.epsilon, "aggregation epsilon");
  cmd->add_option("--heterogeneity", opts.heterogeneity,
                  "client distribution shift level");
  cmd->add_option("--learning-rate", opts.learning_rate, "local learning rate");
  cmd->add_option("--epochs", opts.epochs, "local epochs per round");
  cmd->add_option("--dimension", opts.dimension, "synthetic task dimension");
  cmd->add_option("--samples", opts.samples, "training samples per collaborator");
  cmd->add_option("--noise-std", opts.noise_std, "target noise level");
  cmd->add_option("--validation-samples", opts.validation_samples,
                  "held-out validation set size");
  cmd->add_option("--overhead", opts.overhead,
                  "communication overhead (simulated seconds)");
  cmd->add_option("--threads", opts.threads, "local-training threads per round");
  cmd->add_flag("--identical-datasets", opts.identical_datasets,
                "share one data stream across clients");
  cmd->add_option("--outdir", opts.outdir, "output directory");
  cmd->add_option("--label", opts.label, "run label (output subdirectory)");
  cmd->add_option("--pairs", opts.pairs,
                  "sweep pairs, e.g. recommender+hsimagg,random+fedavg");
}

fedsim::ExperimentSpec build_spec(const CliOptions& opts) {
  fedsim::ExperimentSpec spec;
  if (const char* env = std::getenv("FEDSIM_OUTDIR"); env && *env) {
    spec.outdir = env;
  }
  if (opts.config_path) {
    const auto loaded = fedsim::load_spec_file(*opts.config_path);
    const bool file_sets_outdir = loaded.outdir != fedsim::ExperimentSpec{}.outdir;
    const auto env_outdir = spec.outdir;
    spec = loaded;
    if (!file_sets_outdir && env_outdir != fedsim::ExperimentSpec{}.outdir) {
      spec.outdir = env_outdir;
    }
  }

  auto& config = spec.config;
  if (opts.seed) config.seed = *opts.seed;
  if (opts.rounds) config.rounds = *opts.rounds;
  if (opts.collaborators) config.n_collaborators = *opts.collaborators;
  if (opts.fraction) config.fraction = *opts.fraction;
  if (opts.policy) config.policy = fedsim::parse_policy(*opts.policy);
  if (opts.aggregator)
    config.aggregator = fedsim::parse_aggregator(*opts.aggregator);
  if (opts.agg_mode)
    config.aggregation_mode = fedsim::parse_harmonic_mode(*opts.agg_mode);
  if (opts.epsilon) config.epsilon = *opts.epsilon;
  if (opts.heterogeneity) config.heterogeneity = *opts.heterogeneity;
  if (opts.learning_rate) config.learning_rate = *opts.learning_rate;
  if (opts.epochs) config.epochs_per_round = *opts.epochs;
  if (opts.dimension) config.dimension = *opts.dimension;
  if (opts.samples) config.samples_per_collaborator = *opts.samples;
  if (opts.noise_std) config.noise_std = *opts.noise_std;
  if (opts.validation_samples)
    config.validation_samples = *opts.validation_samples;
  if (opts.overhead) config.communication_overhead = *opts.overhead;
  if (opts.threads) config.threads = *opts.threads;
  if (opts.identical_datasets) config.identical_datasets = true;
  if (opts.outdir) spec.outdir = *opts.outdir;
  if (opts.label) spec.label = *opts.label;
  if (opts.pairs) spec.sweep_pairs = fedsim::parse_sweep_pairs(*opts.pairs);
  return spec;
}

int do_run(const CliOptions& opts) {
  const auto spec = build_spec(opts);
  const auto output = fedsim::run_experiment(spec);
  std::cout << "rounds: " << output.rounds << "\n"
            << "final score: " << output.final_score << "\n"
            << "final loss: " << output.final_loss << "\n"
            << "simulated time: " << output.cumulative_time << "\n"
            << "wrote " << output.rounds_path.string() << ", "
            << output.summary_path.string() << ", "
            << output.store_path.string() << "\n";
  return 0;
}

int do_sweep(const CliOptions& opts) {
  const auto spec = build_spec(opts);
  const auto output = fedsim::run_sweep(spec);
  for (const auto& run : output.runs) {
    std::cout << run.label << ": score=" << run.final_score
              << " loss=" << run.final_loss
              << " sim_time=" << run.cumulative_time << "\n";
  }
  std::cout << "wrote " << output.comparison_path.string() << "\n";
  if (!output.failures.empty()) {
    for (const auto& [label, message] : output.failures) {
      std::cerr << "pair " << label << " failed: " << message << "\n";
    }
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated-learning simulation driver"};
  app.require_subcommand(1);

  CliOptions run_opts;
  CliOptions sweep_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run one federation");
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "compare policy+aggregator pairs");
  add_common_options(run_cmd, run_opts);
  add_common_options(sweep_cmd, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      return do_run(run_opts);
    }
    return do_sweep(sweep_opts);
  } catch (const fedsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
