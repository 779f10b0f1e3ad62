#pragma once

#include "ncelm/config.hpp"
#include "ncelm/dataset.hpp"
#include "ncelm/diagnostics.hpp"
#include "ncelm/elm.hpp"
#include "ncelm/ensemble.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ncelm {

struct TrainedEnsemble {
  std::vector<BaseLearner> learners;
  NcelmConfig config;
  StandardizationParams standardization;
  std::vector<std::string> class_labels;
  ConvergenceTrace trace;
};

struct TrainOptions {
  bool standardize = true;
  std::size_t threads = 1;
  /// Called with B_(0) and after every step.
  std::function<void(const EnsembleState&)> observer;
};

inline std::vector<HiddenLayer> make_hidden_layers(const NcelmConfig& cfg, Index inputs) {
  std::vector<HiddenLayer> layers;
  for (int s = 0; s < cfg.learners; ++s) {
    layers.push_back(make_hidden_layer(cfg.seed + static_cast<std::uint64_t>(s), inputs, cfg.hidden, cfg.activation));
  }
  return layers;
}

/// Fixed-point iteration B_(r) = T(B_(r-1)) from B_(0) = 0. Runs
/// max_iterations steps, or stops early once the step distance d_l2 is at
/// most a positive tolerance.
inline TrainedEnsemble train(const Dataset& data, const NcelmConfig& cfg, const TrainOptions& opts = {}) {
  cfg.validate();
  if (data.size() < 1) throw DataError("cannot train on an empty dataset");

  TrainedEnsemble out;
  out.config = cfg;
  out.class_labels = data.class_labels;
  Matrix features;
  if (opts.standardize) {
    auto [standardized, params] = standardize(data);
    features = std::move(standardized.features);
    out.standardization = std::move(params);
  } else {
    features = data.features;
    out.standardization = StandardizationParams::identity(data.num_features());
  }

  auto system = std::make_shared<const NcelmSystem>(make_hidden_layers(cfg, data.num_features()), features,
                                                    data.targets, cfg.C, opts.threads);
  EnsembleState state = EnsembleState::initial(system);
  if (opts.observer) opts.observer(state);

  const Matrix zero = Matrix::Zero(system->patterns(), system->classes());
  Matrix f_before = zero;
  Matrix f_prev = zero;
  std::vector<IterationMeasurement> history;
  for (int r = 1; r <= cfg.max_iterations; ++r) {
    EnsembleState next = ncelm_step(state, cfg, opts.threads);
    Matrix f_curr = ensemble_output(next);
    history.push_back(
        measure_iteration(*system, r, f_before, f_prev, f_curr, state.betas, next.betas, cfg.lambda, opts.threads));
    state = std::move(next);
    if (opts.observer) opts.observer(state);
    f_before = std::move(f_prev);
    f_prev = std::move(f_curr);
    if (cfg.tolerance > 0.0 && history.back().l2.total <= cfg.tolerance) break;
  }

  out.learners = state.learners();
  out.trace = build_trace(history, cfg);
  return out;
}

/// Ensemble scores (1/S) sum_s h^(s)(x)' beta^(s) on raw (unstandardized) features.
inline Matrix ensemble_scores(const TrainedEnsemble& e, const Matrix& features) {
  if (e.learners.empty()) throw DataError("ensemble has no learners");
  const Matrix x = apply_standardization(features, e.standardization);
  Matrix sum = Matrix::Zero(x.rows(), e.learners.front().beta.cols());
  for (const auto& learner : e.learners) sum += learner_output(learner, x);
  return sum / static_cast<double>(e.learners.size());
}

/// Index of the largest score in each row; ties go to the lowest index.
inline std::vector<Index> argmax_rows(const Matrix& scores) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (Index n = 0; n < scores.rows(); ++n) {
    Index best = 0;
    for (Index j = 1; j < scores.cols(); ++j) {
      if (scores(n, j) > scores(n, best)) best = j;
    }
    out.push_back(best);
  }
  return out;
}

inline std::vector<std::string> predict(const TrainedEnsemble& e, const Matrix& features) {
  std::vector<std::string> labels;
  for (Index j : argmax_rows(ensemble_scores(e, features))) labels.push_back(e.class_labels[static_cast<std::size_t>(j)]);
  return labels;
}

inline double accuracy(const TrainedEnsemble& e, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const auto predicted = predict(e, data.features);
  const auto truth = data.label_indices();
  std::size_t hits = 0;
  for (std::size_t n = 0; n < predicted.size(); ++n) {
    hits += predicted[n] == data.class_labels[static_cast<std::size_t>(truth[n])] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace ncelm
