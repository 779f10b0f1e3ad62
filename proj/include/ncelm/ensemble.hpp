#pragma once

#include "ncelm/config.hpp"
#include "ncelm/elm.hpp"
#include "ncelm/errors.hpp"
#include "ncelm/parallel.hpp"
#include "ncelm/types.hpp"

#include <memory>
#include <sstream>
#include <utility>
#include <vector>

namespace ncelm {

/// Everything about an ensemble that stays fixed while its output weights
/// iterate: the hidden layers, the cached hidden outputs H^(s) on the training
/// set, one Cholesky factor of I/C + H'H per learner and the right-hand sides H'Y.
class NcelmSystem {
 public:
  NcelmSystem(std::vector<HiddenLayer> layers, const Matrix& features, const Matrix& targets, double C,
              std::size_t threads = 1)
      : layers_(std::move(layers)), targets_(targets), C_(C) {
    if (layers_.empty()) throw ConfigError("ensemble needs at least one learner");
    if (features.rows() != targets.rows()) throw DataError("feature and target row counts differ");
    hidden_.resize(layers_.size());
    parallel_for(layers_.size(), threads, [&](std::size_t s) { hidden_[s] = hidden_map(layers_[s], features); });
    prepare(threads);
  }

  /// System over given hidden-layer outputs H^(s) (no layers attached).
  NcelmSystem(std::vector<Matrix> hidden_outputs, const Matrix& targets, double C, std::size_t threads = 1)
      : hidden_(std::move(hidden_outputs)), targets_(targets), C_(C) {
    if (hidden_.empty()) throw ConfigError("ensemble needs at least one learner");
    prepare(threads);
  }

  std::size_t learners() const { return hidden_.size(); }
  Index hidden() const { return hidden_.front().cols(); }
  Index classes() const { return targets_.cols(); }
  Index patterns() const { return targets_.rows(); }
  double C() const { return C_; }

  const std::vector<HiddenLayer>& layers() const { return layers_; }
  const Matrix& hidden_output(std::size_t s) const { return hidden_[s]; }
  const std::vector<Matrix>& hidden_outputs() const { return hidden_; }
  const Eigen::LLT<Matrix>& ridge_factorization(std::size_t s) const { return factors_[s]; }
  const Matrix& targets() const { return targets_; }

  /// Plain ridge solution (I/C + H'H)^-1 H'Y of learner s.
  const Matrix& ridge_solution(std::size_t s) const { return ridge_[s]; }

  /// F = (1/S) sum_s H^(s) beta^(s).
  Matrix ensemble_output(const StackedBetas& betas) const {
    check_shape(betas);
    Matrix sum = Matrix::Zero(patterns(), classes());
    for (std::size_t s = 0; s < learners(); ++s) sum += hidden_[s] * betas[s];
    return sum / static_cast<double>(learners());
  }

  /// Minimizer of ||b||^2 + C||H b - Y_j||^2 + lambda <H b, F_j>^2 for each
  /// column j, i.e. (I/C + H'H + (lambda/C) H'F_j F_j'H)^-1 H'Y_j. The rank-one
  /// penalty is folded into the cached factor with Sherman-Morrison.
  Matrix solve_learner(std::size_t s, const Matrix& ensemble_out, double lambda) const {
    Matrix beta = ridge_[s];
    if (lambda == 0.0) return beta;
    const double c = lambda / C_;
    for (Index j = 0; j < classes(); ++j) {
      const Vector u = hidden_[s].transpose() * ensemble_out.col(j);
      if (u.isZero(0.0)) continue;
      const Vector z = factors_[s].solve(u);
      const double denom = 1.0 + c * u.dot(z);
      beta.col(j) -= (c * u.dot(ridge_[s].col(j)) / denom) * z;
    }
    if (!beta.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite output weights for learner " << s << " (lambda=" << lambda << ", C=" << C_ << ")";
      throw NumericalDegeneracy(msg.str());
    }
    return beta;
  }

  /// Every learner re-solved against one frozen ensemble output.
  StackedBetas solve_all(const Matrix& ensemble_out, double lambda, std::size_t threads = 1) const {
    StackedBetas out(learners());
    parallel_for(learners(), threads, [&](std::size_t s) { out[s] = solve_learner(s, ensemble_out, lambda); });
    return out;
  }

  /// The fixed-point map T(B).
  StackedBetas apply(const StackedBetas& betas, double lambda, std::size_t threads = 1) const {
    return solve_all(ensemble_output(betas), lambda, threads);
  }

  void check_shape(const StackedBetas& betas) const {
    if (betas.size() != learners()) throw DataError("stacked betas have the wrong learner count");
    for (const auto& b : betas) {
      if (b.rows() != hidden() || b.cols() != classes()) throw DataError("stacked beta has the wrong shape");
    }
  }

 private:
  void prepare(std::size_t threads) {
    if (targets_.rows() < 1) throw DataError("empty training set");
    const std::size_t S = hidden_.size();
    factors_.resize(S);
    hty_.resize(S);
    ridge_.resize(S);
    parallel_for(S, threads, [&](std::size_t s) {
      if (hidden_[s].rows() != targets_.rows()) throw DataError("hidden output and target row counts differ");
      if (hidden_[s].cols() != hidden_.front().cols()) throw ConfigError("all learners must share D");
      factors_[s] = ridge_factor(hidden_[s], C_);
      hty_[s] = hidden_[s].transpose() * targets_;
      ridge_[s] = factors_[s].solve(hty_[s]);
    });
  }

  std::vector<HiddenLayer> layers_;
  std::vector<Matrix> hidden_;
  std::vector<Eigen::LLT<Matrix>> factors_;
  std::vector<Matrix> hty_;
  std::vector<Matrix> ridge_;
  Matrix targets_;
  double C_;
};

/// The iterate B_(r) together with the fixed system it lives in.
struct EnsembleState {
  std::shared_ptr<const NcelmSystem> system;
  StackedBetas betas;
  int iteration = 0;

  /// B_(0) = 0.
  static EnsembleState initial(std::shared_ptr<const NcelmSystem> system) {
    auto betas = zero_betas(static_cast<Index>(system->learners()), system->hidden(), system->classes());
    return {std::move(system), std::move(betas), 0};
  }

  const std::vector<Matrix>& hidden_outputs() const { return system->hidden_outputs(); }

  std::vector<BaseLearner> learners() const {
    std::vector<BaseLearner> out;
    for (std::size_t s = 0; s < betas.size(); ++s) out.push_back({system->layers()[s], betas[s]});
    return out;
  }
};

inline Matrix ensemble_output(const EnsembleState& state) { return state.system->ensemble_output(state.betas); }

/// One synchronous update: F is computed from the current betas, then every
/// learner is re-solved against that same F.
inline EnsembleState ncelm_step(const EnsembleState& state, const NcelmConfig& cfg, std::size_t threads = 1) {
  const Matrix F = ensemble_output(state);
  EnsembleState next{state.system, {}, state.iteration + 1};
  try {
    next.betas = state.system->solve_all(F, cfg.lambda, threads);
  } catch (const NumericalDegeneracy& e) {
    std::ostringstream msg;
    msg << e.what() << " at iteration " << next.iteration;
    throw NumericalDegeneracy(msg.str());
  }
  return next;
}

}  // namespace ncelm
