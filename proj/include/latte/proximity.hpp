#pragma once

#include <cstddef>
#include <vector>

#include "latte/hetgraph.hpp"
#include "latte/types.hpp"

namespace latte {

// B = D^{-1/2} A D^{-1/2}. Zero-degree rows and columns stay zero. Throws
// ShapeError on a non-square or asymmetric input.
SparseMatrix normalize(const SparseMatrix& adjacency);
inline SparseMatrix normalize(const AdjacencyMatrix& a) { return normalize(a.matrix); }

// Powers B_1 = B, B_m = B_{m-1} B for m up to the order cap. B itself is kept
// sparse; the powers fill in and are stored dense.
class ProximityStack {
 public:
  ProximityStack() = default;
  ProximityStack(SparseMatrix transition, std::size_t max_order);

  std::size_t max_order() const { return powers_.size(); }
  std::size_t size() const { return static_cast<std::size_t>(transition_.rows()); }
  const SparseMatrix& transition() const { return transition_; }
  // order is 1-based: power(1) == B.
  const Matrix& power(std::size_t order) const;
  const std::vector<Matrix>& powers() const { return powers_; }

 private:
  SparseMatrix transition_;
  std::vector<Matrix> powers_;
};

ProximityStack power_stack(const SparseMatrix& transition, std::size_t max_order);

// The highest-order matrix of the stack, used as global proximity.
const Matrix& global_proximity(const ProximityStack& stack);

inline constexpr std::size_t kDefaultMaxOrder = 3;

}  // namespace latte
