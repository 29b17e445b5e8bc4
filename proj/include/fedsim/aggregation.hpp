#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "fedsim/params.hpp"

namespace fedsim {

inline constexpr double kDefaultEpsilon = 1e-5;

// One collaborator's contribution to a round: its locally trained
// parameters and the size of its local training set (N_c).
struct CollaboratorUpdate {
  CollaboratorId id = 0;
  ParameterVector params;
  std::int64_t sample_count = 1;
};

// How the final per-coordinate combination is evaluated. The standard
// weighted harmonic mean is the default; the literal variant multiplies
// it by the weighted arithmetic mean and is kept for fidelity
// experiments (it is not idempotent: identical scalar inputs p give p^2).
enum class HarmonicMode { kStandardHarmonic, kLiteralEq6 };

using WeightMap = std::map<CollaboratorId, double>;

// Intermediate and final aggregation weights of one round. Each map sums
// to 1 and all entries lie in [0, 1].
struct AggregationWeights {
  WeightMap similarity;  // inverse-distance weights
  WeightMap sample;      // dataset-size weights
  WeightMap combined;    // final aggregation weights
  double epsilon = kDefaultEpsilon;
};

// Weights proportional to each collaborator's inverse L1 distance from
// the unweighted parameter average, normalized to sum 1. When all
// collaborators are identical (every distance zero) the weights are
// uniform.
WeightMap similarity_weights(std::span<const CollaboratorUpdate> updates,
                             double epsilon = kDefaultEpsilon);

// Weights proportional to each collaborator's sample count.
WeightMap sample_weights(std::span<const CollaboratorUpdate> updates);

// Renormalized sum of two unit-sum weight maps over the same ids.
WeightMap combine_weights(const WeightMap& similarity, const WeightMap& sample);

// Per-coordinate weighted harmonic combination. Coordinates where any
// entry has magnitude below epsilon, or where the entries do not all
// share one sign, fall back to the weighted arithmetic mean (the
// harmonic mean is undefined across zero).
ParameterVector harmonic_aggregate(std::span<const CollaboratorUpdate> updates,
                                   const WeightMap& weights, HarmonicMode mode,
                                   double epsilon = kDefaultEpsilon);

ParameterVector weighted_arithmetic_aggregate(
    std::span<const CollaboratorUpdate> updates, const WeightMap& weights);

struct AggregateResult {
  ParameterVector params;
  AggregationWeights weights;
};

// Full pipeline: average -> similarity weights -> sample weights ->
// combined weights -> harmonic combination. Returns the master
// parameters together with every intermediate weight map for logging.
AggregateResult hsimagg(std::span<const CollaboratorUpdate> updates,
                        double epsilon = kDefaultEpsilon,
                        HarmonicMode mode = HarmonicMode::kStandardHarmonic);

// Baseline: sample-weighted arithmetic mean.
ParameterVector fedavg(std::span<const CollaboratorUpdate> updates);

// Baseline for ablation: the same weight pipeline as hsimagg followed by
// a weighted arithmetic mean.
AggregateResult simagg_arithmetic(std::span<const CollaboratorUpdate> updates,
                                  double epsilon = kDefaultEpsilon);

}  // namespace fedsim
