#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedsim {

// Dense row-major matrix; sized for the collaborator-metrics use case
// (tens of rows, a handful of columns).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Nonnegative factors V ~ W * H plus the per-iteration Frobenius
// reconstruction error (entry 0 is the error of the random init).
struct FactorizationResult {
  Matrix w;  // n x k, per-row latent scores
  Matrix h;  // k x m, latent-feature loadings
  std::vector<double> error_trace;
  int iterations_run = 0;
};

double frobenius_error(const Matrix& v, const Matrix& w, const Matrix& h);

// Multiplicative-update NNMF (Lee-Seung, Frobenius objective):
//   H <- H .* (W'V) ./ (W'WH + delta)
//   W <- W .* (VH') ./ (WHH' + delta)
// Factors are initialized uniformly from (0, 1] with the given seed.
// Stops after max_iters updates or once the relative error improvement
// drops below tol (tol = 0 disables early stopping).
FactorizationResult factorize(const Matrix& v, int k, int max_iters = 500,
                              double tol = 1e-6, std::uint64_t seed = 0,
                              double delta = 1e-9);

// Row indices sorted by the first latent column of W, descending; ties
// break toward the lower row index.
std::vector<std::size_t> rank_by_first_factor(const FactorizationResult& result);

}  // namespace fedsim
