#include "latte/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latte/error.hpp"

namespace latte {

SparseMatrix normalize(const SparseMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency matrix must be square");
  const SparseMatrix transposed = adjacency.transpose();
  if (SparseMatrix(adjacency - transposed).norm() > 1e-12 * std::max(1.0, adjacency.norm()))
    throw ShapeError("adjacency matrix must be symmetric");

  Vector inv_sqrt_degree = Vector::Zero(adjacency.rows());
  for (Index k = 0; k < adjacency.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(adjacency, k); it; ++it) {
      if (it.value() < 0.0) throw ShapeError("adjacency matrix must be nonnegative");
      inv_sqrt_degree(it.row()) += it.value();
    }
  }
  for (Index i = 0; i < inv_sqrt_degree.size(); ++i) {
    const double d = inv_sqrt_degree(i);
    inv_sqrt_degree(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  SparseMatrix b = adjacency;
  for (Index k = 0; k < b.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(b, k); it; ++it) {
      it.valueRef() *= inv_sqrt_degree(it.row()) * inv_sqrt_degree(it.col());
    }
  }
  return b;
}

ProximityStack::ProximityStack(SparseMatrix transition, std::size_t max_order)
    : transition_(std::move(transition)) {
  if (max_order < 1) throw ShapeError("proximity order cap must be at least 1");
  if (transition_.rows() != transition_.cols()) throw ShapeError("transition matrix must be square");
  powers_.reserve(max_order);
  powers_.emplace_back(Matrix(transition_));
  for (std::size_t m = 2; m <= max_order; ++m) {
    // (B_{m-1} B)^T = B B_{m-1}; B is symmetric so dense * sparse suffices.
    powers_.emplace_back(powers_.back() * transition_);
  }
}

const Matrix& ProximityStack::power(std::size_t order) const {
  if (order < 1 || order > powers_.size())
    throw ShapeError("proximity order " + std::to_string(order) + " outside 1.." + std::to_string(powers_.size()));
  return powers_[order - 1];
}

ProximityStack power_stack(const SparseMatrix& transition, std::size_t max_order) {
  return ProximityStack(transition, max_order);
}

const Matrix& global_proximity(const ProximityStack& stack) {
  return stack.power(stack.max_order());
}

}  // namespace latte
