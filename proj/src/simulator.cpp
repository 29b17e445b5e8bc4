#include "fedsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kTaskStream = 0x7461736bULL;
constexpr std::uint64_t kDirectionStream = 0x646972ULL;
constexpr std::uint64_t kDataStream = 0x64617461ULL;
constexpr std::uint64_t kValidationStream = 0x76616cULL;
constexpr std::uint64_t kSpeedStream = 0x7370656564ULL;
constexpr std::uint64_t kWindowStream = 0x77696e646fULL;

LocalDataset draw_dataset(std::size_t samples, std::size_t dimension,
                          const std::vector<double>& true_params,
                          const std::vector<double>& mean_shift,
                          double noise_std, RandomStream& stream) {
  LocalDataset data;
  data.sample_count = samples;
  data.dimension = dimension;
  data.inputs.resize(samples * dimension);
  data.targets.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    double target = 0.0;
    for (std::size_t j = 0; j < dimension; ++j) {
      const double x = mean_shift[j] + stream.normal();
      data.inputs[i * dimension + j] = x;
      target += true_params[j] * x;
    }
    data.targets[i] = target + noise_std * stream.normal();
  }
  return data;
}

void check_dataset_params(const LocalDataset& data, std::size_t param_size) {
  if (data.sample_count == 0) {
    throw std::invalid_argument("empty dataset");
  }
  if (data.dimension != param_size) {
    throw std::invalid_argument("dimension mismatch");
  }
}

double mse_raw(const LocalDataset& data, const std::vector<double>& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.sample_count; ++i) {
    double prediction = 0.0;
    for (std::size_t j = 0; j < data.dimension; ++j) {
      prediction += weights[j] * data.inputs[i * data.dimension + j];
    }
    const double residual = prediction - data.targets[i];
    total += residual * residual;
  }
  return total / static_cast<double>(data.sample_count);
}

std::vector<double> mse_gradient_raw(const LocalDataset& data,
                                     const std::vector<double>& weights) {
  std::vector<double> gradient(data.dimension, 0.0);
  for (std::size_t i = 0; i < data.sample_count; ++i) {
    double prediction = 0.0;
    for (std::size_t j = 0; j < data.dimension; ++j) {
      prediction += weights[j] * data.inputs[i * data.dimension + j];
    }
    const double residual = prediction - data.targets[i];
    for (std::size_t j = 0; j < data.dimension; ++j) {
      gradient[j] += residual * data.inputs[i * data.dimension + j];
    }
  }
  const double scale = 2.0 / static_cast<double>(data.sample_count);
  for (double& g : gradient) {
    g *= scale;
  }
  return gradient;
}

SelectionDecision select_for_round(Federation& federation, int round) {
  const FederationConfig& config = federation.config;
  const int count = selection_count(config.n_collaborators, config.fraction);
  switch (config.policy) {
    case SelectionPolicy::kRecommender:
      return select_recommender(federation.store, round, config.n_collaborators,
                                config.fraction, config.seed);
    case SelectionPolicy::kSlidingWindow:
      return select_sliding_window(federation.window_permutation, round, count);
    case SelectionPolicy::kRandom:
      return select_random(config.n_collaborators, count, round, config.seed);
  }
  throw std::logic_error("unknown selection policy");
}

}  // namespace

std::string to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kHsimagg:
      return "hsimagg";
    case AggregatorKind::kFedAvg:
      return "fedavg";
    case AggregatorKind::kSimaggArithmetic:
      return "simagg";
  }
  return "unknown";
}

void validate_config(const FederationConfig& config) {
  if (config.n_collaborators < 1) {
    throw std::invalid_argument("n_collaborators must be positive");
  }
  if (config.rounds < 1) {
    throw std::invalid_argument("rounds must be positive");
  }
  if (!(config.fraction > 0.0) || config.fraction > 1.0) {
    throw std::invalid_argument("fraction out of range");
  }
  if (!(config.learning_rate >= 0.0) ||
      !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("learning_rate must be nonnegative");
  }
  if (config.epochs_per_round < 1) {
    throw std::invalid_argument("epochs_per_round must be positive");
  }
  if (!(config.epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (config.dimension < 1) {
    throw std::invalid_argument("dimension must be positive");
  }
  if (config.samples_per_collaborator < 1) {
    throw std::invalid_argument("samples_per_collaborator must be positive");
  }
  if (!(config.heterogeneity >= 0.0)) {
    throw std::invalid_argument("heterogeneity must be nonnegative");
  }
  if (!(config.noise_std >= 0.0)) {
    throw std::invalid_argument("noise_std must be nonnegative");
  }
  if (config.validation_samples < 1) {
    throw std::invalid_argument("validation_samples must be positive");
  }
  if (!(config.communication_overhead >= 0.0)) {
    throw std::invalid_argument("communication_overhead must be nonnegative");
  }
  if (config.threads < 1) {
    throw std::invalid_argument("threads must be positive");
  }
}

Federation make_federation(const FederationConfig& config) {
  validate_config(config);
  const auto dimension = static_cast<std::size_t>(config.dimension);
  const auto samples = static_cast<std::size_t>(config.samples_per_collaborator);

  Federation federation;
  federation.config = config;

  RandomStream task_stream(derive_seed(config.seed, kTaskStream));
  federation.true_params.resize(dimension);
  for (double& value : federation.true_params) {
    value = task_stream.normal();
  }

  federation.collaborators.reserve(static_cast<std::size_t>(config.n_collaborators));
  for (CollaboratorId id = 0; id < config.n_collaborators; ++id) {
    SimCollaborator collaborator;
    collaborator.id = id;

    // Mean shift of heterogeneity * unit direction, per client.
    std::vector<double> shift(dimension, 0.0);
    if (config.heterogeneity > 0.0) {
      RandomStream direction_stream(derive_seed(
          config.seed, kDirectionStream, static_cast<std::uint64_t>(id)));
      double norm = 0.0;
      for (double& value : shift) {
        value = direction_stream.normal();
        norm += value * value;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        shift[0] = 1.0;
        norm = 1.0;
      }
      for (double& value : shift) {
        value *= config.heterogeneity / norm;
      }
    }

    const std::uint64_t data_index =
        config.identical_datasets ? 0 : static_cast<std::uint64_t>(id);
    RandomStream data_stream(derive_seed(config.seed, kDataStream, data_index));
    collaborator.data = draw_dataset(samples, dimension, federation.true_params,
                                     shift, config.noise_std, data_stream);
    collaborator.sample_count = config.samples_per_collaborator;

    RandomStream speed_stream(derive_seed(config.seed, kSpeedStream,
                                          static_cast<std::uint64_t>(id)));
    collaborator.speed_factor = speed_stream.uniform(0.5, 2.0);
    federation.collaborators.push_back(std::move(collaborator));
  }

  RandomStream validation_stream(derive_seed(config.seed, kValidationStream));
  const std::vector<double> no_shift(dimension, 0.0);
  federation.validation = draw_dataset(
      static_cast<std::size_t>(config.validation_samples), dimension,
      federation.true_params, no_shift, config.noise_std, validation_stream);

  federation.global_params = ParameterVector::zeros(dimension);

  federation.window_permutation.resize(
      static_cast<std::size_t>(config.n_collaborators));
  std::iota(federation.window_permutation.begin(),
            federation.window_permutation.end(), 0);
  RandomStream window_stream(derive_seed(config.seed, kWindowStream));
  for (std::size_t i = federation.window_permutation.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(window_stream.next_below(i));
    std::swap(federation.window_permutation[i - 1],
              federation.window_permutation[j]);
  }
  return federation;
}

double dataset_mse(const LocalDataset& data, const ParameterVector& params) {
  check_dataset_params(data, params.size());
  return mse_raw(data, params.values());
}

std::vector<double> dataset_mse_gradient(const LocalDataset& data,
                                         const ParameterVector& params) {
  check_dataset_params(data, params.size());
  return mse_gradient_raw(data, params.values());
}

LocalTrainResult local_train(const SimCollaborator& collaborator,
                             const ParameterVector& global_params,
                             double learning_rate, int epochs) {
  if (epochs < 1) {
    throw std::invalid_argument("epochs must be at least 1");
  }
  check_dataset_params(collaborator.data, global_params.size());

  std::vector<double> weights = global_params.values();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<double> gradient =
        mse_gradient_raw(collaborator.data, weights);
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (!std::isfinite(gradient[j])) {
        throw std::runtime_error("divergence: non-finite gradient");
      }
      weights[j] -= learning_rate * gradient[j];
      if (!std::isfinite(weights[j])) {
        throw std::runtime_error("divergence: non-finite parameters");
      }
    }
  }
  LocalTrainResult result;
  result.train_loss = mse_raw(collaborator.data, weights);
  result.params = ParameterVector(std::move(weights));
  return result;
}

std::pair<double, double> validate(const ParameterVector& params,
                                   const LocalDataset& validation) {
  const double loss = dataset_mse(validation, params);
  return {1.0 / (1.0 + loss), loss};
}

double simulate_duration(const SimCollaborator& collaborator, int epochs,
                         double overhead) {
  if (epochs < 0) {
    throw std::invalid_argument("epochs must be nonnegative");
  }
  if (!(collaborator.speed_factor > 0.0)) {
    throw std::invalid_argument("speed_factor must be positive");
  }
  return static_cast<double>(epochs) *
             static_cast<double>(collaborator.sample_count) /
             collaborator.speed_factor +
         overhead;
}

std::vector<RoundLog> run_federation(Federation& federation) {
  const FederationConfig& config = federation.config;
  validate_config(config);

  std::vector<RoundLog> logs;
  logs.reserve(static_cast<std::size_t>(config.rounds));
  double cumulative_time = 0.0;

  for (int round = 1; round <= config.rounds; ++round) {
    try {
      SelectionDecision decision = select_for_round(federation, round);
      const std::size_t selected = decision.selected_ids.size();

      // Local training; collaborators within a round are independent, so
      // results are identical whether or not this executes in parallel.
      std::vector<LocalTrainResult> results(selected);
      auto train_one = [&](std::size_t i) {
        const SimCollaborator& collaborator =
            federation.collaborators[static_cast<std::size_t>(
                decision.selected_ids[i])];
        return local_train(collaborator, federation.global_params,
                           config.learning_rate, config.epochs_per_round);
      };
      if (config.threads > 1 && selected > 1) {
        std::vector<std::future<LocalTrainResult>> futures;
        futures.reserve(selected);
        for (std::size_t i = 0; i < selected; ++i) {
          futures.push_back(
              std::async(std::launch::async, [&, i] { return train_one(i); }));
        }
        for (std::size_t i = 0; i < selected; ++i) {
          results[i] = futures[i].get();
        }
      } else {
        for (std::size_t i = 0; i < selected; ++i) {
          results[i] = train_one(i);
        }
      }

      std::vector<CollaboratorUpdate> updates;
      updates.reserve(selected);
      for (std::size_t i = 0; i < selected; ++i) {
        const CollaboratorId id = decision.selected_ids[i];
        updates.push_back(
            {id, results[i].params,
             federation.collaborators[static_cast<std::size_t>(id)].sample_count});
      }

      RoundLog log;
      log.round = round;
      log.selected_ids = decision.selected_ids;
      log.policy = decision.policy;
      log.mode = decision.mode;
      switch (config.aggregator) {
        case AggregatorKind::kHsimagg: {
          AggregateResult aggregate =
              hsimagg(updates, config.epsilon, config.aggregation_mode);
          federation.global_params = std::move(aggregate.params);
          log.weights = std::move(aggregate.weights);
          break;
        }
        case AggregatorKind::kFedAvg: {
          federation.global_params = fedavg(updates);
          log.weights.epsilon = config.epsilon;
          log.weights.sample = sample_weights(updates);
          log.weights.combined = log.weights.sample;
          break;
        }
        case AggregatorKind::kSimaggArithmetic: {
          AggregateResult aggregate = simagg_arithmetic(updates, config.epsilon);
          federation.global_params = std::move(aggregate.params);
          log.weights = std::move(aggregate.weights);
          break;
        }
      }

      const auto [score, loss] =
          validate(federation.global_params, federation.validation);
      log.performance_score = score;
      log.loss = loss;

      std::map<CollaboratorId, RoundMetrics> metrics;
      std::map<CollaboratorId, double> durations;
      double round_duration = 0.0;
      for (std::size_t i = 0; i < selected; ++i) {
        const CollaboratorId id = decision.selected_ids[i];
        const auto [collab_score, collab_loss] =
            validate(results[i].params, federation.validation);
        metrics[id] = {collab_score, collab_loss};
        const double duration = simulate_duration(
            federation.collaborators[static_cast<std::size_t>(id)],
            config.epochs_per_round, config.communication_overhead);
        durations[id] = duration;
        round_duration = std::max(round_duration, duration);
      }
      federation.store.record_round(round, decision, metrics, durations);

      cumulative_time += round_duration;
      log.duration = round_duration;
      log.cumulative_time = cumulative_time;
      logs.push_back(std::move(log));
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(round) + ": " +
                               e.what());
    }
  }
  return logs;
}

std::vector<RoundLog> run_federation(const FederationConfig& config) {
  Federation federation = make_federation(config);
  return run_federation(federation);
}

}  // namespace fedsim
