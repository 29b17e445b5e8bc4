#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedsim {

using CollaboratorId = int;

// Flat, fixed-length vector of model parameters as exchanged between
// collaborators and the server. Entries are validated finite at
// construction; the length never changes afterwards.
class ParameterVector {
 public:
  // Default construction yields an empty placeholder (e.g. a struct member
  // awaiting assignment); building one explicitly requires at least one entry.
  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> values);

  static ParameterVector zeros(std::size_t size);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

// Elementwise arithmetic mean. Accumulates deviations from the first
// vector so that the mean of n identical vectors is bit-exact.
ParameterVector mean(std::span<const ParameterVector> params);

// Sum of absolute coordinate differences.
double l1_distance(const ParameterVector& a, const ParameterVector& b);

}  // namespace fedsim
