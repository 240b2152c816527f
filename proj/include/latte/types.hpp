#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace latte {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

}  // namespace latte
