#include <cmath>
#include <vector>

#include <doctest.h>

#include "fedsim/aggregation.hpp"
#include "fedsim/rng.hpp"

using fedsim::AggregateResult;
using fedsim::CollaboratorUpdate;
using fedsim::HarmonicMode;
using fedsim::ParameterVector;
using fedsim::RandomStream;
using fedsim::WeightMap;

namespace {

CollaboratorUpdate scalar_update(int id, double value, std::int64_t samples = 1) {
  return {id, ParameterVector({value}), samples};
}

std::vector<CollaboratorUpdate> random_updates(RandomStream& stream, int n,
                                               std::size_t dim,
                                               double lo = -10.0,
                                               double hi = 10.0) {
  std::vector<CollaboratorUpdate> updates;
  for (int i = 0; i < n; ++i) {
    std::vector<double> values(dim);
    for (double& v : values) {
      v = stream.uniform(lo, hi);
    }
    updates.push_back({i, ParameterVector(std::move(values)),
                       static_cast<std::int64_t>(1 + stream.next_below(50))});
  }
  return updates;
}

double weight_sum(const WeightMap& weights) {
  double total = 0.0;
  for (const auto& [id, w] : weights) {
    total += w;
  }
  return total;
}

void check_unit_weights(const WeightMap& weights) {
  CHECK(weight_sum(weights) == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& [id, w] : weights) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
}

}  // namespace

TEST_SUITE("aggregation") {

TEST_CASE("similarity_weights: two collaborators are always equidistant") {
  const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0),
                                                scalar_update(1, 42.0)};
  const WeightMap u = fedsim::similarity_weights(updates);
  CHECK(u.at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(u.at(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("similarity_weights: scalar (1, 1, 4) example") {
  const std::vector<CollaboratorUpdate> updates{
      scalar_update(0, 1.0), scalar_update(1, 1.0), scalar_update(2, 4.0)};
  const WeightMap u = fedsim::similarity_weights(updates, 1e-5);
  CHECK(std::abs(u.at(0) - 0.4) < 1e-4);
  CHECK(std::abs(u.at(1) - 0.4) < 1e-4);
  CHECK(std::abs(u.at(2) - 0.2) < 1e-4);
}

TEST_CASE("similarity_weights: all-identical degenerates to uniform") {
  std::vector<CollaboratorUpdate> updates;
  for (int i = 0; i < 4; ++i) {
    updates.push_back({i, ParameterVector({2.0, -3.0}), 5});
  }
  const WeightMap u = fedsim::similarity_weights(updates);
  for (int i = 0; i < 4; ++i) {
    CHECK(u.at(i) == 0.25);
  }
}

TEST_CASE("similarity_weights: dimension mismatch") {
  const std::vector<CollaboratorUpdate> updates{
      {0, ParameterVector({1.0}), 1}, {1, ParameterVector({1.0, 2.0}), 1}};
  CHECK_THROWS_WITH_AS(fedsim::similarity_weights(updates),
                       "dimension mismatch", std::invalid_argument);
}

TEST_CASE("sample_weights: examples") {
  {
    const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0, 10),
                                                  scalar_update(1, 2.0, 30)};
    const WeightMap v = fedsim::sample_weights(updates);
    CHECK(v.at(0) == doctest::Approx(0.25));
    CHECK(v.at(1) == doctest::Approx(0.75));
  }
  {
    const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0, 5),
                                                  scalar_update(1, 2.0, 5),
                                                  scalar_update(2, 3.0, 5)};
    const WeightMap v = fedsim::sample_weights(updates);
    for (int i = 0; i < 3; ++i) {
      CHECK(v.at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
  {
    std::vector<CollaboratorUpdate> updates;
    for (int i = 0; i < 4; ++i) {
      updates.push_back(scalar_update(i, 0.5, i + 1));
    }
    const WeightMap v = fedsim::sample_weights(updates);
    CHECK(v.at(0) == doctest::Approx(0.1));
    CHECK(v.at(1) == doctest::Approx(0.2));
    CHECK(v.at(2) == doctest::Approx(0.3));
    CHECK(v.at(3) == doctest::Approx(0.4));
  }
}

TEST_CASE("combine_weights: examples and key mismatch") {
  CHECK(fedsim::combine_weights({{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {1, 0.5}}) ==
        WeightMap{{0, 0.5}, {1, 0.5}});

  const WeightMap w = fedsim::combine_weights({{0, 0.4}, {1, 0.4}, {2, 0.2}},
                                              {{0, 0.25}, {1, 0.25}, {2, 0.5}});
  CHECK(w.at(0) == doctest::Approx(0.325).epsilon(1e-12));
  CHECK(w.at(1) == doctest::Approx(0.325).epsilon(1e-12));
  CHECK(w.at(2) == doctest::Approx(0.35).epsilon(1e-12));

  CHECK(fedsim::combine_weights({{7, 1.0}}, {{7, 1.0}}) == WeightMap{{7, 1.0}});

  CHECK_THROWS_WITH_AS(fedsim::combine_weights({{0, 1.0}}, {{1, 1.0}}),
                       "weight key sets differ", std::invalid_argument);
}

TEST_CASE("harmonic_aggregate: idempotent on identical updates (standard)") {
  const ParameterVector p({0.75, -2.5, 1e4, 0.125});
  std::vector<CollaboratorUpdate> updates;
  WeightMap w;
  for (int i = 0; i < 3; ++i) {
    updates.push_back({i, p, 1});
    w[i] = 1.0 / 3.0;
  }
  const ParameterVector out =
      fedsim::harmonic_aggregate(updates, w, HarmonicMode::kStandardHarmonic);
  for (std::size_t j = 0; j < p.size(); ++j) {
    CHECK(std::abs(out[j] - p[j]) <= 1e-12 * std::max(1.0, std::abs(p[j])));
  }
}

TEST_CASE("harmonic_aggregate: scalar (1, 3) examples") {
  const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0),
                                                scalar_update(1, 3.0)};
  const WeightMap w{{0, 0.5}, {1, 0.5}};
  const ParameterVector standard =
      fedsim::harmonic_aggregate(updates, w, HarmonicMode::kStandardHarmonic);
  CHECK(standard[0] == doctest::Approx(1.5).epsilon(1e-9));
  const ParameterVector literal =
      fedsim::harmonic_aggregate(updates, w, HarmonicMode::kLiteralEq6);
  CHECK(literal[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("harmonic_aggregate: mixed signs use the arithmetic fallback") {
  const std::vector<CollaboratorUpdate> updates{scalar_update(0, -1.0),
                                                scalar_update(1, 1.0)};
  const WeightMap w{{0, 0.5}, {1, 0.5}};
  const ParameterVector out =
      fedsim::harmonic_aggregate(updates, w, HarmonicMode::kStandardHarmonic);
  CHECK(out[0] == 0.0);
}

TEST_CASE("harmonic_aggregate: near-zero coordinates use the fallback") {
  // 1e-6 < epsilon, so this coordinate averages arithmetically.
  const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1e-6),
                                                scalar_update(1, 4.0)};
  const WeightMap w{{0, 0.5}, {1, 0.5}};
  const ParameterVector out =
      fedsim::harmonic_aggregate(updates, w, HarmonicMode::kStandardHarmonic);
  CHECK(out[0] == doctest::Approx(0.5 * 1e-6 + 2.0));
}

TEST_CASE("harmonic_aggregate: errors") {
  const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0),
                                                scalar_update(1, 3.0)};
  CHECK_THROWS_WITH_AS(
      fedsim::harmonic_aggregate(updates, {{0, 0.7}, {1, 0.7}},
                                 HarmonicMode::kStandardHarmonic),
      "weights do not sum to 1", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      fedsim::harmonic_aggregate(updates, {{0, 0.5}, {2, 0.5}},
                                 HarmonicMode::kStandardHarmonic),
      "weight key sets differ", std::invalid_argument);

  const std::vector<CollaboratorUpdate> mismatched{
      {0, ParameterVector({1.0}), 1}, {1, ParameterVector({1.0, 2.0}), 1}};
  CHECK_THROWS_WITH_AS(
      fedsim::harmonic_aggregate(mismatched, {{0, 0.5}, {1, 0.5}},
                                 HarmonicMode::kStandardHarmonic),
      "dimension mismatch", std::invalid_argument);
}

TEST_CASE("hsimagg: single collaborator and identical pair are identities") {
  {
    const std::vector<CollaboratorUpdate> updates{
        {3, ParameterVector({1.5, -0.5, 2.0}), 17}};
    const AggregateResult result = fedsim::hsimagg(updates);
    CHECK(result.params == updates[0].params);
    CHECK(result.weights.combined.at(3) == 1.0);
  }
  {
    const ParameterVector shared({2.0, 4.0});
    const std::vector<CollaboratorUpdate> updates{{0, shared, 10}, {1, shared, 10}};
    const AggregateResult result = fedsim::hsimagg(updates);
    for (std::size_t j = 0; j < shared.size(); ++j) {
      CHECK(result.params[j] ==
            doctest::Approx(shared[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("hsimagg: resists a scaled outlier better than fedavg") {
  RandomStream stream(424242);
  std::vector<CollaboratorUpdate> updates;
  std::vector<ParameterVector> inliers;
  const std::size_t dim = 10;
  std::vector<double> base(dim);
  for (double& b : base) {
    b = stream.uniform(2.0, 8.0);
  }
  for (int i = 0; i < 4; ++i) {
    std::vector<double> values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      values[j] = base[j] + 0.1 * stream.normal();
    }
    ParameterVector params(std::move(values));
    inliers.push_back(params);
    updates.push_back({i, std::move(params), 10});
  }
  std::vector<double> outlier(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    outlier[j] = 10.0 * base[j];
  }
  updates.push_back({4, ParameterVector(std::move(outlier)), 10});

  const ParameterVector inlier_mean = fedsim::mean(inliers);
  const ParameterVector robust = fedsim::hsimagg(updates).params;
  const ParameterVector averaged = fedsim::fedavg(updates);
  double robust_distance = 0.0;
  double averaged_distance = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    robust_distance += std::pow(robust[j] - inlier_mean[j], 2);
    averaged_distance += std::pow(averaged[j] - inlier_mean[j], 2);
  }
  CHECK(robust_distance < averaged_distance);
}

TEST_CASE("fedavg: examples and weighted-sum oracle") {
  {
    const std::vector<CollaboratorUpdate> updates{scalar_update(0, 0.0, 7),
                                                  scalar_update(1, 2.0, 7)};
    CHECK(fedsim::fedavg(updates)[0] == doctest::Approx(1.0));
  }
  {
    const std::vector<CollaboratorUpdate> updates{scalar_update(0, 0.0, 1),
                                                  scalar_update(1, 4.0, 3)};
    CHECK(fedsim::fedavg(updates)[0] == doctest::Approx(3.0));
  }
  RandomStream stream(505);
  const auto updates = random_updates(stream, 6, 4);
  const ParameterVector result = fedsim::fedavg(updates);
  double total_samples = 0.0;
  for (const auto& u : updates) {
    total_samples += static_cast<double>(u.sample_count);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double expected = 0.0;
    for (const auto& u : updates) {
      expected += static_cast<double>(u.sample_count) / total_samples * u.params[j];
    }
    CHECK(result[j] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("simagg_arithmetic: examples and oracle") {
  {
    const ParameterVector shared({1.0, -2.0});
    const std::vector<CollaboratorUpdate> updates{{0, shared, 4}, {1, shared, 4}};
    const ParameterVector out = fedsim::simagg_arithmetic(updates).params;
    for (std::size_t j = 0; j < shared.size(); ++j) {
      CHECK(out[j] == doctest::Approx(shared[j]).epsilon(1e-12));
    }
  }
  {
    const std::vector<CollaboratorUpdate> updates{scalar_update(0, 1.0, 5),
                                                  scalar_update(1, 3.0, 5)};
    CHECK(fedsim::simagg_arithmetic(updates).params[0] ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
  RandomStream stream(606);
  const auto updates = random_updates(stream, 5, 3);
  const AggregateResult result = fedsim::simagg_arithmetic(updates);
  for (std::size_t j = 0; j < 3; ++j) {
    double expected = 0.0;
    for (const auto& u : updates) {
      expected += result.weights.combined.at(u.id) * u.params[j];
    }
    CHECK(result.params[j] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("weight maps always sum to 1 and stay in [0, 1]") {
  RandomStream stream(707);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(2 + stream.next_below(8));
    const auto dim = static_cast<std::size_t>(1 + stream.next_below(12));
    const auto updates = random_updates(stream, n, dim);
    const AggregateResult result = fedsim::hsimagg(updates);
    check_unit_weights(result.weights.similarity);
    check_unit_weights(result.weights.sample);
    check_unit_weights(result.weights.combined);
  }
}

TEST_CASE("standard harmonic output stays within elementwise bounds") {
  RandomStream stream(808);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(2 + stream.next_below(6));
    const auto dim = static_cast<std::size_t>(1 + stream.next_below(8));
    const auto updates = random_updates(stream, n, dim, 0.5, 9.5);
    const ParameterVector out = fedsim::hsimagg(updates).params;
    for (std::size_t j = 0; j < dim; ++j) {
      double lo = updates[0].params[j];
      double hi = lo;
      for (const auto& u : updates) {
        lo = std::min(lo, u.params[j]);
        hi = std::max(hi, u.params[j]);
      }
      CHECK(out[j] >= lo - 1e-12);
      CHECK(out[j] <= hi + 1e-12);
    }
  }
}

TEST_CASE("increasing a collaborator's distance strictly lowers its weight") {
  RandomStream stream(909);
  for (int trial = 0; trial < 30; ++trial) {
    auto updates = random_updates(stream, 4, 3);
    const WeightMap before = fedsim::similarity_weights(updates);
    // Push collaborator 0 farther from the average along a fixed offset.
    std::vector<double> pushed = updates[0].params.values();
    for (double& value : pushed) {
      value += 25.0;
    }
    updates[0].params = ParameterVector(std::move(pushed));
    const WeightMap after = fedsim::similarity_weights(updates);
    CHECK(after.at(0) < before.at(0));
  }
}

TEST_CASE("hsimagg equals the composition of its four stages") {
  RandomStream stream(111213);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(2 + stream.next_below(7));
    const auto dim = static_cast<std::size_t>(1 + stream.next_below(9));
    const auto updates = random_updates(stream, n, dim);
    for (const HarmonicMode mode :
         {HarmonicMode::kStandardHarmonic, HarmonicMode::kLiteralEq6}) {
      const AggregateResult pipeline = fedsim::hsimagg(updates, 1e-5, mode);
      const WeightMap u = fedsim::similarity_weights(updates, 1e-5);
      const WeightMap v = fedsim::sample_weights(updates);
      const WeightMap w = fedsim::combine_weights(u, v);
      const ParameterVector composed =
          fedsim::harmonic_aggregate(updates, w, mode, 1e-5);
      CHECK(pipeline.weights.combined == w);
      for (std::size_t j = 0; j < dim; ++j) {
        CHECK(pipeline.params[j] ==
              doctest::Approx(composed[j]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("update validation: duplicates and bad sample counts") {
  const std::vector<CollaboratorUpdate> duplicate{scalar_update(1, 1.0),
                                                  scalar_update(1, 2.0)};
  CHECK_THROWS_WITH_AS(fedsim::fedavg(duplicate), "duplicate collaborator id",
                       std::invalid_argument);
  const std::vector<CollaboratorUpdate> bad_count{{0, ParameterVector({1.0}), 0}};
  CHECK_THROWS_AS(fedsim::fedavg(bad_count), std::invalid_argument);
  CHECK_THROWS_WITH_AS(fedsim::fedavg(std::vector<CollaboratorUpdate>{}),
                       "no collaborators", std::invalid_argument);
}

}  // TEST_SUITE
