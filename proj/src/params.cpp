#include "fedsim/params.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fedsim {

ParameterVector::ParameterVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) {
    throw std::invalid_argument("ParameterVector: no entries");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ParameterVector: non-finite entry");
    }
  }
}

ParameterVector ParameterVector::zeros(std::size_t size) {
  return ParameterVector(std::vector<double>(size, 0.0));
}

ParameterVector mean(std::span<const ParameterVector> params) {
  if (params.empty()) {
    throw std::invalid_argument("no collaborators");
  }
  const std::size_t dim = params[0].size();
  for (const ParameterVector& p : params) {
    if (p.size() != dim) {
      throw std::invalid_argument("dimension mismatch");
    }
  }
  const double n = static_cast<double>(params.size());
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double base = params[0][j];
    double deviation = 0.0;
    for (std::size_t i = 1; i < params.size(); ++i) {
      deviation += params[i][j] - base;
    }
    out[j] = base + deviation / n;
  }
  return ParameterVector(std::move(out));
}

double l1_distance(const ParameterVector& a, const ParameterVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    total += std::abs(a[j] - b[j]);
  }
  return total;
}

}  // namespace fedsim
