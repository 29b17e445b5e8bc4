#include "fedsim/nnmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t l = 0; l < a.cols; ++l) {
      const double aval = a.at(i, l);
      for (std::size_t j = 0; j < b.cols; ++j) {
        out.at(i, j) += aval * b.at(l, j);
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      out.at(j, i) = a.at(i, j);
    }
  }
  return out;
}

}  // namespace

double frobenius_error(const Matrix& v, const Matrix& w, const Matrix& h) {
  const Matrix approx = multiply(w, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < v.rows; ++i) {
    for (std::size_t j = 0; j < v.cols; ++j) {
      const double diff = v.at(i, j) - approx.at(i, j);
      sum += diff * diff;
    }
  }
  return std::sqrt(sum);
}

FactorizationResult factorize(const Matrix& v, int k, int max_iters, double tol,
                              std::uint64_t seed, double delta) {
  if (v.rows == 0 || v.cols == 0) {
    throw std::invalid_argument("empty matrix");
  }
  if (k < 1 || static_cast<std::size_t>(k) > std::min(v.rows, v.cols)) {
    throw std::invalid_argument("k out of range");
  }
  if (max_iters < 0) {
    throw std::invalid_argument("max_iters must be nonnegative");
  }
  for (double value : v.data) {
    if (value < 0.0) {
      throw std::invalid_argument("matrix not nonnegative");
    }
  }

  const std::size_t n = v.rows;
  const std::size_t m = v.cols;
  const std::size_t rank = static_cast<std::size_t>(k);

  // Zero init is a fixed point of the multiplicative updates, so entries
  // are drawn from (0, 1].
  RandomStream stream(seed);
  FactorizationResult result;
  result.w = Matrix(n, rank);
  result.h = Matrix(rank, m);
  for (double& entry : result.w.data) {
    entry = stream.next_unit_positive();
  }
  for (double& entry : result.h.data) {
    entry = stream.next_unit_positive();
  }

  double previous = frobenius_error(v, result.w, result.h);
  result.error_trace.push_back(previous);

  for (int iter = 0; iter < max_iters; ++iter) {
    // H update
    {
      const Matrix wt = transpose(result.w);
      const Matrix numerator = multiply(wt, v);
      const Matrix denominator = multiply(multiply(wt, result.w), result.h);
      for (std::size_t i = 0; i < rank; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          result.h.at(i, j) *=
              numerator.at(i, j) / (denominator.at(i, j) + delta);
        }
      }
    }
    // W update
    {
      const Matrix ht = transpose(result.h);
      const Matrix numerator = multiply(v, ht);
      const Matrix denominator = multiply(result.w, multiply(result.h, ht));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < rank; ++j) {
          result.w.at(i, j) *=
              numerator.at(i, j) / (denominator.at(i, j) + delta);
        }
      }
    }

    const double current = frobenius_error(v, result.w, result.h);
    result.error_trace.push_back(current);
    ++result.iterations_run;

    if (tol > 0.0) {
      const double improvement =
          previous > 0.0 ? (previous - current) / previous : 0.0;
      if (improvement < tol) {
        break;
      }
    }
    previous = current;
  }
  return result;
}

std::vector<std::size_t> rank_by_first_factor(const FactorizationResult& result) {
  if (result.w.cols == 0) {
    throw std::invalid_argument("factorization has no components");
  }
  std::vector<std::size_t> order(result.w.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double score_a = result.w.at(a, 0);
    const double score_b = result.w.at(b, 0);
    if (score_a != score_b) {
      return score_a > score_b;
    }
    return a < b;
  });
  return order;
}

}  // namespace fedsim
