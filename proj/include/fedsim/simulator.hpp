#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/params.hpp"
#include "fedsim/recommender.hpp"

namespace fedsim {

enum class AggregatorKind { kHsimagg, kFedAvg, kSimaggArithmetic };

std::string to_string(AggregatorKind kind);

struct FederationConfig {
  int n_collaborators = 33;
  int rounds = 20;
  double fraction = 0.2;
  double learning_rate = 0.01;
  int epochs_per_round = 1;
  double epsilon = 1e-5;
  SelectionPolicy policy = SelectionPolicy::kRecommender;
  AggregatorKind aggregator = AggregatorKind::kHsimagg;
  HarmonicMode aggregation_mode = HarmonicMode::kStandardHarmonic;
  std::uint64_t seed = 42;

  // Synthetic regression task: y = a.x + noise, with each collaborator's
  // inputs mean-shifted by `heterogeneity` along a per-client direction.
  int dimension = 8;
  int samples_per_collaborator = 64;
  double heterogeneity = 0.5;
  double noise_std = 0.1;
  int validation_samples = 256;

  double communication_overhead = 1.0;  // simulated seconds per round trip
  bool identical_datasets = false;      // share one input stream across clients
  int threads = 1;                      // local-training parallelism per round
};

// Throws std::invalid_argument naming the first offending field.
void validate_config(const FederationConfig& config);

struct LocalDataset {
  std::size_t sample_count = 0;
  std::size_t dimension = 0;
  std::vector<double> inputs;   // row-major sample_count x dimension
  std::vector<double> targets;  // one per sample

  friend bool operator==(const LocalDataset&, const LocalDataset&) = default;
};

struct SimCollaborator {
  CollaboratorId id = 0;
  LocalDataset data;
  std::int64_t sample_count = 0;  // N_c
  double speed_factor = 1.0;      // simulated compute speed
};

struct RoundLog {
  int round = 0;
  std::vector<CollaboratorId> selected_ids;
  SelectionPolicy policy = SelectionPolicy::kRecommender;
  SelectionMode mode = SelectionMode::kFallbackRandom;
  AggregationWeights weights;
  double performance_score = 0.0;  // global model on the held-out set
  double loss = 0.0;
  double duration = 0.0;  // max over selected collaborators (synchronous)
  double cumulative_time = 0.0;
};

struct Federation {
  FederationConfig config;
  std::vector<SimCollaborator> collaborators;
  LocalDataset validation;
  std::vector<double> true_params;
  ParameterVector global_params;
  std::vector<CollaboratorId> window_permutation;
  MetricsStore store;
};

// Builds collaborators, datasets, the shared held-out validation set and
// the sliding-window permutation, all derived deterministically from the
// config seed. The global model starts at zero.
Federation make_federation(const FederationConfig& config);

double dataset_mse(const LocalDataset& data, const ParameterVector& params);
std::vector<double> dataset_mse_gradient(const LocalDataset& data,
                                         const ParameterVector& params);

struct LocalTrainResult {
  ParameterVector params;
  double train_loss = 0.0;
};

// Full-batch gradient descent on the collaborator's local MSE for
// `epochs` passes starting from the broadcast parameters. Throws
// "divergence" if a gradient or parameter goes non-finite.
LocalTrainResult local_train(const SimCollaborator& collaborator,
                             const ParameterVector& global_params,
                             double learning_rate, int epochs);

// (performance_score, loss): loss is the held-out MSE and the score is
// the bounded proxy 1 / (1 + loss).
std::pair<double, double> validate(const ParameterVector& params,
                                   const LocalDataset& validation);

// epochs * N_c / speed + overhead, in simulated seconds.
double simulate_duration(const SimCollaborator& collaborator, int epochs,
                         double overhead = 1.0);

// Runs R communication rounds of select -> broadcast -> local-train ->
// aggregate -> validate, recording history after every round. Errors
// abort with the failing round named.
std::vector<RoundLog> run_federation(Federation& federation);
std::vector<RoundLog> run_federation(const FederationConfig& config);

}  // namespace fedsim
