#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"

using fedsim::ParameterVector;
using fedsim::RandomStream;

namespace {

ParameterVector random_vector(RandomStream& stream, std::size_t size) {
  std::vector<double> values(size);
  for (double& v : values) {
    v = stream.uniform(-10.0, 10.0);
  }
  return ParameterVector(std::move(values));
}

}  // namespace

TEST_SUITE("params") {

TEST_CASE("construction rejects non-finite and empty input") {
  CHECK_THROWS_AS(ParameterVector({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(ParameterVector({std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ParameterVector(std::vector<double>{}), std::invalid_argument);
  CHECK(ParameterVector::zeros(3).size() == 3);
}

TEST_CASE("mean: identity and midpoint") {
  const std::vector<ParameterVector> same{ParameterVector({1.0, 2.0}),
                                          ParameterVector({1.0, 2.0})};
  CHECK(fedsim::mean(same) == ParameterVector({1.0, 2.0}));

  const std::vector<ParameterVector> pair{ParameterVector({0.0, 0.0}),
                                          ParameterVector({2.0, 4.0})};
  const ParameterVector mid = fedsim::mean(pair);
  CHECK(mid[0] == doctest::Approx(1.0));
  CHECK(mid[1] == doctest::Approx(2.0));
}

TEST_CASE("mean: three seeded random 5-vectors match a summation oracle") {
  RandomStream stream(101);
  const std::vector<ParameterVector> params{random_vector(stream, 5),
                                            random_vector(stream, 5),
                                            random_vector(stream, 5)};
  const ParameterVector result = fedsim::mean(params);
  for (std::size_t j = 0; j < 5; ++j) {
    const double expected = (params[0][j] + params[1][j] + params[2][j]) / 3.0;
    CHECK(result[j] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mean: errors") {
  CHECK_THROWS_WITH_AS(fedsim::mean(std::vector<ParameterVector>{}),
                       "no collaborators", std::invalid_argument);
  const std::vector<ParameterVector> mismatched{ParameterVector({1.0}),
                                                ParameterVector({1.0, 2.0})};
  CHECK_THROWS_WITH_AS(fedsim::mean(mismatched), "dimension mismatch",
                       std::invalid_argument);
}

TEST_CASE("mean: permutation invariance and exact idempotence") {
  RandomStream stream(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ParameterVector> params;
    const auto n = static_cast<std::size_t>(2 + stream.next_below(6));
    for (std::size_t i = 0; i < n; ++i) {
      params.push_back(random_vector(stream, 4));
    }
    const ParameterVector forward = fedsim::mean(params);
    std::reverse(params.begin(), params.end());
    const ParameterVector backward = fedsim::mean(params);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(forward[j] == doctest::Approx(backward[j]).epsilon(1e-12));
    }

    const ParameterVector p = random_vector(stream, 6);
    const std::vector<ParameterVector> copies(n, p);
    CHECK(fedsim::mean(copies) == p);  // bit-exact
  }
}

TEST_CASE("l1_distance: examples and oracle") {
  CHECK(fedsim::l1_distance(ParameterVector({1.0, 2.0}),
                            ParameterVector({1.0, 2.0})) == 0.0);
  CHECK(fedsim::l1_distance(ParameterVector({0.0, 0.0}),
                            ParameterVector({3.0, 4.0})) == 7.0);

  RandomStream stream(202);
  const ParameterVector a = random_vector(stream, 9);
  const ParameterVector b = random_vector(stream, 9);
  double expected = 0.0;
  for (std::size_t j = 0; j < 9; ++j) {
    expected += std::abs(a[j] - b[j]);
  }
  CHECK(fedsim::l1_distance(a, b) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(
      fedsim::l1_distance(ParameterVector({1.0}), ParameterVector({1.0, 2.0})),
      "dimension mismatch", std::invalid_argument);
}

TEST_CASE("l1_distance: symmetric, nonnegative, zero iff equal") {
  RandomStream stream(303);
  for (int trial = 0; trial < 50; ++trial) {
    const ParameterVector a = random_vector(stream, 5);
    const ParameterVector b = random_vector(stream, 5);
    const double ab = fedsim::l1_distance(a, b);
    CHECK(ab == fedsim::l1_distance(b, a));
    CHECK(ab >= 0.0);
    CHECK((ab == 0.0) == (a == b));
    CHECK(fedsim::l1_distance(a, a) == 0.0);
  }
}

}  // TEST_SUITE
