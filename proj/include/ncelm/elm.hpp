#pragma once

#include "ncelm/errors.hpp"
#include "ncelm/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace ncelm {

enum class Activation { sigmoid, tanh };

inline std::string_view to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

inline Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected sigmoid or tanh)");
}

/// Random input-to-hidden projection. Weights and biases are a pure function
/// of (seed, inputs, hidden), so a layer is fully described by those values
/// plus the activation.
struct HiddenLayer {
  Matrix input_weights;  // K×D
  Vector biases;         // D
  Activation activation = Activation::sigmoid;
  std::uint64_t seed = 0;

  Index inputs() const { return input_weights.rows(); }
  Index hidden() const { return input_weights.cols(); }
};

/// Uniform draw on [-1, 1) from the top 53 bits of a mt19937_64 output. The
/// mapping is spelled out rather than using std::uniform_real_distribution,
/// whose algorithm differs between standard libraries.
inline double uniform_symmetric(std::mt19937_64& rng) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * unit - 1.0;
}

/// Weights are drawn row-major (k outer, d inner), then the D biases.
inline HiddenLayer make_hidden_layer(std::uint64_t seed, Index inputs, Index hidden,
                                     Activation activation = Activation::sigmoid) {
  if (inputs < 1 || hidden < 1) throw ConfigError("hidden layer needs K >= 1 and D >= 1");
  std::mt19937_64 rng(seed);
  HiddenLayer layer{Matrix(inputs, hidden), Vector(hidden), activation, seed};
  for (Index k = 0; k < inputs; ++k) {
    for (Index d = 0; d < hidden; ++d) layer.input_weights(k, d) = uniform_symmetric(rng);
  }
  for (Index d = 0; d < hidden; ++d) layer.biases(d) = uniform_symmetric(rng);
  return layer;
}

inline double activate(Activation a, double z) {
  return a == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-z)) : std::tanh(z);
}

/// H[n][d] = act(sum_k x[n][k] W[k][d] + b[d]), summed left to right over k.
inline Matrix hidden_map(const HiddenLayer& layer, const Matrix& features) {
  if (features.cols() != layer.inputs()) {
    throw DataError("hidden layer expects " + std::to_string(layer.inputs()) + " features, got " +
                    std::to_string(features.cols()));
  }
  Matrix out(features.rows(), layer.hidden());
  for (Index n = 0; n < features.rows(); ++n) {
    for (Index d = 0; d < layer.hidden(); ++d) {
      double z = 0.0;
      for (Index k = 0; k < layer.inputs(); ++k) z += features(n, k) * layer.input_weights(k, d);
      out(n, d) = activate(layer.activation, z + layer.biases(d));
    }
  }
  return out;
}

/// Cholesky factor of I/C + H'H.
inline Eigen::LLT<Matrix> ridge_factor(const Matrix& hidden_out, double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("C must be a positive finite number");
  Matrix gram = hidden_out.transpose() * hidden_out;
  gram.diagonal().array() += 1.0 / C;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Cholesky of I/C + H'H failed (C=" << C << ", D=" << gram.rows()
        << ", min diagonal=" << gram.diagonal().minCoeff() << ")";
    throw NumericalDegeneracy(msg.str());
  }
  return llt;
}

/// Ridge output weights: solves (I/C + H'H) beta = H'Y for all columns of Y
/// against one factorization.
inline Matrix elm_solve(const Matrix& hidden_out, const Matrix& targets, double C) {
  if (hidden_out.rows() != targets.rows()) throw DataError("H and Y row counts differ");
  if (!hidden_out.allFinite() || !targets.allFinite()) throw DataError("H or Y has non-finite entries");
  const auto llt = ridge_factor(hidden_out, C);
  return llt.solve(Matrix(hidden_out.transpose() * targets));
}

struct BaseLearner {
  HiddenLayer hidden;
  Matrix beta;  // D×J
};

inline Matrix learner_output(const BaseLearner& learner, const Matrix& features) {
  return hidden_map(learner.hidden, features) * learner.beta;
}

}  // namespace ncelm
