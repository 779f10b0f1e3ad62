#include "ncelm/elm.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace ncelm {
namespace {

TEST(HiddenLayer, DeterministicBoundedAndSeedDependent) {
  const auto a = make_hidden_layer(1, 2, 3);
  const auto b = make_hidden_layer(1, 2, 3);
  EXPECT_EQ(a.input_weights, b.input_weights);
  EXPECT_EQ(a.biases, b.biases);
  EXPECT_EQ(a.inputs(), 2);
  EXPECT_EQ(a.hidden(), 3);

  const auto big = make_hidden_layer(99, 20, 40);
  EXPECT_LE(big.input_weights.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LE(big.biases.cwiseAbs().maxCoeff(), 1.0);
  // not degenerate: both signs present
  EXPECT_LT(big.input_weights.minCoeff(), -0.5);
  EXPECT_GT(big.input_weights.maxCoeff(), 0.5);

  const auto c = make_hidden_layer(2, 2, 3);
  EXPECT_NE(a.input_weights, c.input_weights);
  EXPECT_THROW(make_hidden_layer(1, 0, 3), ConfigError);
  EXPECT_THROW(make_hidden_layer(1, 2, 0), ConfigError);
}

TEST(HiddenLayer, FirstDrawsMatchDocumentedGenerator) {
  std::mt19937_64 rng(1);
  const double first = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  EXPECT_EQ(make_hidden_layer(1, 2, 3).input_weights(0, 0), first);
}

TEST(HiddenMap, ZeroLayer) {
  HiddenLayer layer{Matrix::Zero(2, 3), Vector::Zero(3), Activation::sigmoid, 0};
  const Matrix x = Matrix::Random(4, 2);
  EXPECT_EQ(hidden_map(layer, x), Matrix::Constant(4, 3, 0.5));
  layer.activation = Activation::tanh;
  EXPECT_EQ(hidden_map(layer, x), Matrix::Zero(4, 3));
}

TEST(HiddenMap, HandComputedTwoByTwo) {
  HiddenLayer layer{Matrix(2, 2), Vector(2), Activation::sigmoid, 0};
  layer.input_weights << 0.5, -1.0, 0.25, 2.0;
  layer.biases << 0.1, -0.3;
  Matrix x(1, 2);
  x << 2.0, -1.0;
  const Matrix h = hidden_map(layer, x);
  const double z0 = 2.0 * 0.5 + (-1.0) * 0.25 + 0.1;
  const double z1 = 2.0 * -1.0 + (-1.0) * 2.0 - 0.3;
  EXPECT_NEAR(h(0, 0), 1.0 / (1.0 + std::exp(-z0)), 1e-12);
  EXPECT_NEAR(h(0, 1), 1.0 / (1.0 + std::exp(-z1)), 1e-12);
  EXPECT_THROW(hidden_map(layer, Matrix::Zero(1, 3)), DataError);
}

TEST(ElmSolve, NearLeastSquaresLimit) {
  const Matrix beta = elm_solve(Matrix::Identity(4, 4), Matrix::Identity(4, 4), 1e12);
  EXPECT_LE((beta - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ElmSolve, ScalarFormula) {
  Matrix h(2, 1);
  h << 1, 1;
  Matrix y(2, 1);
  y << 1, 0;
  // (1/C + sum h^2)^-1 sum h y = 1 / 3
  EXPECT_NEAR(elm_solve(h, y, 1.0)(0, 0), 1.0 / 3.0, 1e-15);
}

TEST(ElmSolve, ErrorsOnBadInput) {
  EXPECT_THROW(elm_solve(Matrix::Ones(3, 2), Matrix::Ones(2, 2), 1.0), DataError);
  EXPECT_THROW(elm_solve(Matrix::Ones(3, 2), Matrix::Ones(3, 2), 0.0), ConfigError);
  EXPECT_THROW(elm_solve(Matrix::Ones(3, 2), Matrix::Ones(3, 2), -1.0), ConfigError);
  Matrix h = Matrix::Ones(3, 2);
  h(0, 0) = std::nan("");
  EXPECT_THROW(elm_solve(h, Matrix::Ones(3, 2), 1.0), DataError);
}

// Property: first-order optimality, agreement with a QR oracle, and no
// coordinate perturbation lowers the objective.
TEST(ElmSolveProperties, OptimalOnRandomInstances) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 19);
    const Index d = 1 + static_cast<Index>(rng() % 10);
    const Index j = 1 + static_cast<Index>(rng() % 3);
    const double C = std::pow(10.0, -2.0 + 4.0 * static_cast<double>(rng() % 100) / 100.0);
    const Matrix h = testing::random_matrix(rng, n, d, 0.0, 1.0);
    const Matrix y = testing::random_matrix(rng, n, j);
    const Matrix beta = elm_solve(h, y, C);

    const Matrix grad = 2.0 * beta / C + 2.0 * h.transpose() * (h * beta - y);
    EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    EXPECT_LE((beta - testing::ridge_by_qr(h, y, C)).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + beta.cwiseAbs().maxCoeff()));

    for (Index c = 0; c < j; ++c) {
      auto objective = [&](const Vector& b) { return b.squaredNorm() + C * (h * b - y.col(c)).squaredNorm(); };
      const double best = objective(beta.col(c));
      for (Index k = 0; k < d; ++k) {
        for (double step : {-1e-3, 1e-3}) {
          Vector moved = beta.col(c);
          moved(k) += step;
          EXPECT_GE(objective(moved), best);
        }
      }
    }
  }
}

TEST(ElmSolveProperties, StrongerRegularizationShrinksWeights) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix h = testing::random_matrix(rng, 15, 6, 0.0, 1.0);
    const Matrix y = testing::random_matrix(rng, 15, 2);
    double previous = 0.0;
    for (double C : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
      const double norm = elm_solve(h, y, C).norm();
      EXPECT_GE(norm, previous);
      previous = norm;
    }
  }
}

TEST(LearnerOutput, LinearInBeta) {
  const auto layer = make_hidden_layer(3, 2, 4);
  const Matrix x = Matrix::Random(5, 2);
  EXPECT_EQ(learner_output({layer, Matrix::Zero(4, 3)}, x), Matrix::Zero(5, 3));
  EXPECT_EQ(learner_output({layer, Matrix::Ones(4, 3)}, x).rows(), 5);
  EXPECT_EQ(learner_output({layer, Matrix::Ones(4, 3)}, x).cols(), 3);
  EXPECT_THROW(learner_output({layer, Matrix::Ones(4, 3)}, Matrix::Ones(2, 3)), DataError);
}

TEST(LearnerOutput, SinglePatternByHand) {
  HiddenLayer layer{Matrix(1, 2), Vector(2), Activation::tanh, 0};
  layer.input_weights << 1.0, -0.5;
  layer.biases << 0.0, 0.2;
  Matrix beta(2, 2);
  beta << 1.0, 2.0, -1.0, 0.5;
  Matrix x(1, 1);
  x << 0.4;
  const double h0 = std::tanh(0.4);
  const double h1 = std::tanh(-0.2 + 0.2);
  const Matrix out = learner_output({layer, beta}, x);
  EXPECT_NEAR(out(0, 0), h0 * 1.0 + h1 * -1.0, 1e-12);
  EXPECT_NEAR(out(0, 1), h0 * 2.0 + h1 * 0.5, 1e-12);
}

}  // namespace
}  // namespace ncelm
