#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ncelm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Output weights of every base learner, one D×J matrix per learner. This is
/// the state the fixed-point map acts on.
using StackedBetas = std::vector<Matrix>;

inline StackedBetas zero_betas(Index learners, Index hidden, Index classes) {
  return StackedBetas(static_cast<std::size_t>(learners), Matrix::Zero(hidden, classes));
}

}  // namespace ncelm
