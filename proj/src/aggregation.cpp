#include "fedsim/aggregation.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fedsim {

namespace {

void check_updates(std::span<const CollaboratorUpdate> updates) {
  if (updates.empty()) {
    throw std::invalid_argument("no collaborators");
  }
  const std::size_t dim = updates[0].params.size();
  if (dim == 0) {
    throw std::invalid_argument("empty parameters");
  }
  std::set<CollaboratorId> seen;
  for (const CollaboratorUpdate& u : updates) {
    if (u.params.size() != dim) {
      throw std::invalid_argument("dimension mismatch");
    }
    if (u.sample_count < 1) {
      throw std::invalid_argument("sample_count must be at least 1");
    }
    if (!seen.insert(u.id).second) {
      throw std::invalid_argument("duplicate collaborator id");
    }
  }
}

// Weights aligned to update order; validates coverage and unit sum.
std::vector<double> align_weights(std::span<const CollaboratorUpdate> updates,
                                  const WeightMap& weights) {
  if (weights.size() != updates.size()) {
    throw std::invalid_argument("weight key sets differ");
  }
  std::vector<double> out;
  out.reserve(updates.size());
  double total = 0.0;
  for (const CollaboratorUpdate& u : updates) {
    auto it = weights.find(u.id);
    if (it == weights.end()) {
      throw std::invalid_argument("weight key sets differ");
    }
    out.push_back(it->second);
    total += it->second;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("weights do not sum to 1");
  }
  return out;
}

}  // namespace

WeightMap similarity_weights(std::span<const CollaboratorUpdate> updates,
                             double epsilon) {
  check_updates(updates);
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  std::vector<ParameterVector> all;
  all.reserve(updates.size());
  for (const CollaboratorUpdate& u : updates) {
    all.push_back(u.params);
  }
  const ParameterVector center = mean(all);

  std::vector<double> distance(updates.size());
  double total_distance = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    distance[i] = l1_distance(updates[i].params, center);
    total_distance += distance[i];
  }

  WeightMap result;
  if (total_distance == 0.0) {
    // All collaborators identical; any inverse-distance rule degenerates
    // to 0/0, so fall back to uniform weights.
    const double uniform = 1.0 / static_cast<double>(updates.size());
    for (const CollaboratorUpdate& u : updates) {
      result[u.id] = uniform;
    }
    return result;
  }

  std::vector<double> similarity(updates.size());
  double total_similarity = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    similarity[i] = total_distance / (distance[i] + epsilon);
    total_similarity += similarity[i];
  }
  for (std::size_t i = 0; i < updates.size(); ++i) {
    result[updates[i].id] = similarity[i] / total_similarity;
  }
  return result;
}

WeightMap sample_weights(std::span<const CollaboratorUpdate> updates) {
  check_updates(updates);
  double total = 0.0;
  for (const CollaboratorUpdate& u : updates) {
    total += static_cast<double>(u.sample_count);
  }
  WeightMap result;
  for (const CollaboratorUpdate& u : updates) {
    result[u.id] = static_cast<double>(u.sample_count) / total;
  }
  return result;
}

WeightMap combine_weights(const WeightMap& similarity, const WeightMap& sample) {
  if (similarity.size() != sample.size()) {
    throw std::invalid_argument("weight key sets differ");
  }
  double total = 0.0;
  for (const auto& [id, u] : similarity) {
    auto it = sample.find(id);
    if (it == sample.end()) {
      throw std::invalid_argument("weight key sets differ");
    }
    total += u + it->second;
  }
  WeightMap result;
  for (const auto& [id, u] : similarity) {
    result[id] = (u + sample.at(id)) / total;
  }
  return result;
}

ParameterVector harmonic_aggregate(std::span<const CollaboratorUpdate> updates,
                                   const WeightMap& weights, HarmonicMode mode,
                                   double epsilon) {
  check_updates(updates);
  const std::vector<double> w = align_weights(updates, weights);
  const std::size_t dim = updates[0].params.size();

  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    bool fallback = false;
    const bool positive = updates[0].params[j] > 0.0;
    for (const CollaboratorUpdate& u : updates) {
      const double value = u.params[j];
      if (std::abs(value) < epsilon || (value > 0.0) != positive) {
        fallback = true;
        break;
      }
    }
    if (fallback) {
      double linear = 0.0;
      for (std::size_t i = 0; i < updates.size(); ++i) {
        linear += w[i] * updates[i].params[j];
      }
      out[j] = linear;
      continue;
    }
    double reciprocal = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      reciprocal += w[i] / updates[i].params[j];
    }
    const double harmonic = 1.0 / reciprocal;
    if (mode == HarmonicMode::kLiteralEq6) {
      double linear = 0.0;
      for (std::size_t i = 0; i < updates.size(); ++i) {
        linear += w[i] * updates[i].params[j];
      }
      out[j] = harmonic * linear;
    } else {
      out[j] = harmonic;
    }
  }
  return ParameterVector(std::move(out));
}

ParameterVector weighted_arithmetic_aggregate(
    std::span<const CollaboratorUpdate> updates, const WeightMap& weights) {
  check_updates(updates);
  const std::vector<double> w = align_weights(updates, weights);
  const std::size_t dim = updates[0].params.size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out[j] += w[i] * updates[i].params[j];
    }
  }
  return ParameterVector(std::move(out));
}

AggregateResult hsimagg(std::span<const CollaboratorUpdate> updates,
                        double epsilon, HarmonicMode mode) {
  AggregationWeights weights;
  weights.epsilon = epsilon;
  weights.similarity = similarity_weights(updates, epsilon);
  weights.sample = sample_weights(updates);
  weights.combined = combine_weights(weights.similarity, weights.sample);
  ParameterVector params =
      harmonic_aggregate(updates, weights.combined, mode, epsilon);
  return {std::move(params), std::move(weights)};
}

ParameterVector fedavg(std::span<const CollaboratorUpdate> updates) {
  return weighted_arithmetic_aggregate(updates, sample_weights(updates));
}

AggregateResult simagg_arithmetic(std::span<const CollaboratorUpdate> updates,
                                  double epsilon) {
  AggregationWeights weights;
  weights.epsilon = epsilon;
  weights.similarity = similarity_weights(updates, epsilon);
  weights.sample = sample_weights(updates);
  weights.combined = combine_weights(weights.similarity, weights.sample);
  ParameterVector params =
      weighted_arithmetic_aggregate(updates, weights.combined);
  return {std::move(params), std::move(weights)};
}

}  // namespace fedsim
