#pragma once

#include "ncelm/config.hpp"
#include "ncelm/ensemble.hpp"
#include "ncelm/errors.hpp"
#include "ncelm/parallel.hpp"
#include "ncelm/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncelm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Distances between stacked weight states

struct DistanceL2 {
  double total = 0.0;
  std::vector<double> per_learner;
};

namespace detail {

inline void check_same_shape(const StackedBetas& u, const StackedBetas& v) {
  if (u.size() != v.size()) throw DataError("stacked betas differ in learner count");
  for (std::size_t s = 0; s < u.size(); ++s) {
    if (u[s].rows() != v[s].rows() || u[s].cols() != v[s].cols()) {
      throw DataError("stacked betas differ in shape at learner " + std::to_string(s));
    }
  }
}

}  // namespace detail

/// d(U, V) = sum_s ||U^(s) - V^(s)||_F^2, with the per-learner terms d^(s).
/// Note this is the squared form; it is not itself a metric.
inline DistanceL2 distance_l2(const StackedBetas& u, const StackedBetas& v) {
  detail::check_same_shape(u, v);
  DistanceL2 out;
  for (std::size_t s = 0; s < u.size(); ++s) {
    out.per_learner.push_back((u[s] - v[s]).squaredNorm());
    out.total += out.per_learner.back();
  }
  return out;
}

/// Entry-wise L1 difference summed over learners, classes and hidden units.
inline double distance_l1(const StackedBetas& u, const StackedBetas& v) {
  detail::check_same_shape(u, v);
  double total = 0.0;
  for (std::size_t s = 0; s < u.size(); ++s) total += (u[s] - v[s]).cwiseAbs().sum();
  return total;
}

// ---------------------------------------------------------------------------
// delta = F_j F_j' - Fhat_j Fhat_j'

/// Rank-two symmetric matrix current*current' - previous*previous', kept in
/// factored form. It is N×N when dense, so only tests materialize it.
struct RankTwoDelta {
  Vector current;
  Vector previous;

  Matrix dense() const { return current * current.transpose() - previous * previous.transpose(); }
  bool is_zero() const { return current == previous; }
};

inline RankTwoDelta delta_factors(const Matrix& f_curr, const Matrix& f_prev, Index j) {
  if (f_curr.rows() != f_prev.rows() || f_curr.cols() != f_prev.cols()) throw DataError("F shapes differ");
  if (j < 0 || j >= f_curr.cols()) throw DataError("class index out of range");
  return {f_curr.col(j), f_prev.col(j)};
}

inline Matrix delta_outer(const Matrix& f_curr, const Matrix& f_prev, Index j) {
  return delta_factors(f_curr, f_prev, j).dense();
}

/// Spectral norm of a a' - b b' from 2×2 Gram quantities. With e = a - b the
/// nonzero eigenvalues are ((p-q) ± sqrt((p-q)^2 + 4 g)) / 2, where
/// p - q = e·(a+b) and g = |a|^2 |e|^2 - (a·e)^2 is the Gram determinant.
inline double delta_norm(const RankTwoDelta& delta) {
  const Vector& a = delta.current;
  const Vector e = a - delta.previous;
  const double diff = e.dot(a + delta.previous);
  const double a_dot_e = a.dot(e);
  const double gram_det = std::max(0.0, a.squaredNorm() * e.squaredNorm() - a_dot_e * a_dot_e);
  return 0.5 * (std::abs(diff) + std::sqrt(diff * diff + 4.0 * gram_det));
}

inline double delta_norm(const Matrix& f_curr, const Matrix& f_prev, Index j) {
  return delta_norm(delta_factors(f_curr, f_prev, j));
}

// ---------------------------------------------------------------------------
// Norms

struct SpectralNorm {
  double value = 0.0;
  bool converged = true;
  double achieved_tolerance = 0.0;
  int iterations = 0;
};

/// Largest singular value by power iteration on M'M, started from the
/// normalized all-ones vector. Stops when the Rayleigh quotient changes by at
/// most 1e-10 relative, or after 10000 iterations (then converged = false).
inline SpectralNorm spectral_norm(const Matrix& m, double rel_tol = 1e-10, int max_iterations = 10000) {
  if (!m.allFinite()) throw DataError("spectral_norm: non-finite entries");
  SpectralNorm out;
  if (m.size() == 0) return out;
  Vector v = Vector::Ones(m.cols()).normalized();
  Vector w = m.transpose() * (m * v);
  // All-ones can be annihilated; fall back to coordinate vectors.
  for (Index i = 0; w.norm() == 0.0 && i < m.cols(); ++i) {
    v = Vector::Unit(m.cols(), i);
    w = m.transpose() * (m * v);
  }
  double estimate = w.norm();
  if (estimate == 0.0) return out;
  out.achieved_tolerance = kInfinity;
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    v = w / w.norm();
    w = m.transpose() * (m * v);
    const double next = v.dot(w);
    out.achieved_tolerance = std::abs(next - estimate) / std::max(next, std::numeric_limits<double>::min());
    estimate = next;
    if (out.achieved_tolerance <= rel_tol) break;
  }
  out.converged = out.achieved_tolerance <= rel_tol;
  out.iterations = std::min(out.iterations, max_iterations);
  out.value = std::sqrt(std::max(0.0, estimate));
  return out;
}

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> symmetric_extremes(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalDegeneracy("symmetric eigensolver failed");
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

/// ||A^-1|| for SPD A, i.e. 1 / lambda_min(A).
inline double spd_inverse_norm(const Matrix& a) {
  const double lo = symmetric_extremes(a).first;
  if (!(lo > 0.0)) throw NumericalDegeneracy("matrix expected to be SPD has lambda_min <= 0");
  return 1.0 / lo;
}

/// A = I/C + H'H + (lambda/C) u u' with u = H' Fhat_j.
inline Matrix penalized_system(const Matrix& ridge_gram, const Vector& u, double lambda, double C) {
  Matrix a = ridge_gram;
  if (lambda != 0.0) a.noalias() += (lambda / C) * u * u.transpose();
  return a;
}

inline Matrix ridge_gram(const Matrix& hidden_out, double C) {
  Matrix g = hidden_out.transpose() * hidden_out;
  g.diagonal().array() += 1.0 / C;
  return g;
}

// ---------------------------------------------------------------------------
// Woodbury correction

/// Delta = A^-1 H' (C/lambda I + delta H A^-1 H')^-1 delta H, so that
/// (A + (lambda/C) H' delta H)^-1 = A^-1 - Delta A^-1.
///
/// With delta = X M X' (X = [current previous], M = diag(1, -1)) the N×N inner
/// inverse collapses to 2×2: Delta = W (C/lambda I + M Z'W)^-1 M Z', where
/// Z = H'X and W = A^-1 Z.
inline Matrix woodbury_delta(const Matrix& hidden_out, const Eigen::LLT<Matrix>& a_factor, const RankTwoDelta& delta,
                             double C, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("woodbury_delta: lambda must be > 0");
  if (delta.current.size() != hidden_out.rows() || delta.previous.size() != hidden_out.rows()) {
    throw DataError("woodbury_delta: delta size does not match H");
  }
  const Index D = hidden_out.cols();
  if (delta.is_zero()) return Matrix::Zero(D, D);

  Matrix z(D, 2);
  z.col(0) = hidden_out.transpose() * delta.current;
  z.col(1) = hidden_out.transpose() * delta.previous;
  const Matrix w = a_factor.solve(z);
  const Eigen::Matrix2d m = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  Eigen::Matrix2d inner = m * (z.transpose() * w);
  inner.diagonal().array() += C / lambda;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(inner);
  if (!lu.isInvertible()) {
    std::ostringstream msg;
    msg << "Woodbury inner matrix is singular (lambda=" << lambda << ", C=" << C
        << ", |delta current|=" << delta.current.norm() << ", |delta previous|=" << delta.previous.norm() << ")";
    throw NumericalDegeneracy(msg.str());
  }
  return w * lu.inverse() * m * z.transpose();
}

// ---------------------------------------------------------------------------
// Scalar quantities of the contraction analysis

/// eta = ||A_U^-1|| / ||A_V^-1||.
inline double eta(double a_inv_norm_u, double a_inv_norm_v) {
  if (!(a_inv_norm_v > 0.0)) throw std::logic_error("eta: ||A_V^-1|| must be positive");
  return a_inv_norm_u / a_inv_norm_v;
}

/// Finite generalized eigenvalue of diag(|Delta_U|^2, |Delta_V|^2) against
/// [[1, -1], [-1, 1]]: x y / (x + y).
inline double gamma_eig(double delta_matrix_norm_u, double delta_matrix_norm_v) {
  const double x = delta_matrix_norm_u * delta_matrix_norm_u;
  const double y = delta_matrix_norm_v * delta_matrix_norm_v;
  if (x == 0.0 || y == 0.0) return 0.0;
  return 1.0 / (1.0 / x + 1.0 / y);
}

/// The same quantity from a dense QZ solve of the 2×2 pencil. The second
/// matrix is singular, so the pencil also has an infinite eigenvalue; the
/// largest finite one is returned.
inline double gamma_pencil(double delta_matrix_norm_u, double delta_matrix_norm_v) {
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = delta_matrix_norm_u * delta_matrix_norm_u;
  x(1, 1) = delta_matrix_norm_v * delta_matrix_norm_v;
  Matrix y(2, 2);
  y << 1.0, -1.0, -1.0, 1.0;
  Eigen::GeneralizedEigenSolver<Matrix> ges(x, y, false);
  const auto& alphas = ges.alphas();
  const auto& betas = ges.betas();
  double best = 0.0;
  bool any = false;
  for (Index i = 0; i < alphas.size(); ++i) {
    const double scale = std::max(std::abs(alphas(i)), 1.0);
    if (std::abs(betas(i)) <= 1e-14 * scale) continue;
    const double value = std::real(alphas(i)) / betas(i);
    best = any ? std::max(best, value) : value;
    any = true;
  }
  return any ? best : 0.0;
}

namespace detail {

/// sqrt((eta |dU|^2 + |dV|^2) / (|dU|^2 |dV|^2)), infinite when either norm is 0.
inline double relaxation_factor(double eta_value, double delta_u_norm, double delta_v_norm) {
  if (delta_u_norm == 0.0 || delta_v_norm == 0.0) return kInfinity;
  return std::sqrt(eta_value / (delta_v_norm * delta_v_norm) + 1.0 / (delta_u_norm * delta_u_norm));
}

}  // namespace detail

/// Computable upper bound on lambda:
///   2 ||I + C H'H|| / (3 (1 + ||H' Fhat_U Fhat_U' H||)) * sqrt((eta|dU|^2 + |dV|^2) / (|dU|^2 |dV|^2)).
/// Infinite (vacuous) when either delta norm is zero.
inline double lambda_bound_prime(double ridge_norm, double penalty_norm, double eta_value, double delta_u_norm,
                                 double delta_v_norm) {
  const double factor = detail::relaxation_factor(eta_value, delta_u_norm, delta_v_norm);
  if (std::isinf(factor)) return kInfinity;
  return 2.0 * ridge_norm / (3.0 * (1.0 + penalty_norm)) * factor;
}

/// The implicit bound 2C / (3 ||A_U^-1||) * sqrt(...), evaluated with norms
/// taken at the current lambda.
inline double lambda_bound(double C, double a_inv_norm_u, double eta_value, double delta_u_norm,
                           double delta_v_norm) {
  const double factor = detail::relaxation_factor(eta_value, delta_u_norm, delta_v_norm);
  if (std::isinf(factor)) return kInfinity;
  return 2.0 * C / (3.0 * a_inv_norm_u) * factor;
}

/// Upper bound on ||Delta||^2: alpha |delta|^2 / (C^2/lambda^2 - alpha |delta|^2)
/// with alpha = ||A^-1||^2 ||H||^4. Empty when the denominator is not positive.
inline std::optional<double> delta_matrix_bound(double C, double lambda, double a_inv_norm, double h_norm,
                                                double delta_norm_value) {
  if (!(lambda > 0.0)) return 0.0;
  const double alpha = a_inv_norm * a_inv_norm * std::pow(h_norm, 4);
  const double numer = alpha * delta_norm_value * delta_norm_value;
  const double denom = (C * C) / (lambda * lambda) - numer;
  if (!(denom > 0.0)) return std::nullopt;
  return numer / denom;
}

// ---------------------------------------------------------------------------
// Implicit bound H(lambda) = 0

/// Inputs of H(lambda) for one learner and class. `inverse_norms(lambda)`
/// returns (||A_U^-1||, ||A_V^-1||) with both systems rebuilt at lambda.
struct ImplicitBoundContext {
  double C = 1.0;
  double delta_u_norm = 0.0;
  double delta_v_norm = 0.0;
  std::function<std::pair<double, double>(double)> inverse_norms;
};

inline ImplicitBoundContext make_implicit_context(const Matrix& hidden_out, const Vector& f_hat_u,
                                                  const Vector& f_hat_v, double C, double delta_u_norm,
                                                  double delta_v_norm) {
  Matrix gram = ridge_gram(hidden_out, C);
  Vector u = hidden_out.transpose() * f_hat_u;
  Vector v = hidden_out.transpose() * f_hat_v;
  return {C, delta_u_norm, delta_v_norm,
          [gram = std::move(gram), u = std::move(u), v = std::move(v), C](double lambda) {
            return std::pair{spd_inverse_norm(penalized_system(gram, u, lambda, C)),
                             spd_inverse_norm(penalized_system(gram, v, lambda, C))};
          }};
}

inline double h_implicit(double lambda, const ImplicitBoundContext& ctx) {
  const auto [a_u, a_v] = ctx.inverse_norms(lambda);
  return lambda - lambda_bound(ctx.C, a_u, eta(a_u, a_v), ctx.delta_u_norm, ctx.delta_v_norm);
}

struct LambdaRoot {
  bool found = false;
  double lambda = kInfinity;
  double residual = 0.0;
  int doublings = 0;
  int bisections = 0;
};

/// Bisection on (0, hi], doubling hi from 1 (at most 60 times) until H(hi) > 0,
/// then halving until the bracket is within 1e-10 relative.
inline LambdaRoot find_lambda_bound(const ImplicitBoundContext& ctx, double rel_tol = 1e-10) {
  LambdaRoot out;
  if (!(ctx.delta_u_norm > 0.0 && ctx.delta_v_norm > 0.0)) return out;
  double lo = 0.0;
  double hi = 1.0;
  while (h_implicit(hi, ctx) <= 0.0) {
    if (out.doublings == 60) return out;
    lo = hi;
    hi *= 2.0;
    ++out.doublings;
  }
  while (hi - lo > rel_tol * hi && out.bisections < 400) {
    const double mid = 0.5 * (lo + hi);
    (h_implicit(mid, ctx) > 0.0 ? hi : lo) = mid;
    ++out.bisections;
  }
  out.found = true;
  out.lambda = 0.5 * (lo + hi);
  out.residual = h_implicit(out.lambda, ctx);
  return out;
}

// ---------------------------------------------------------------------------
// Empirical contraction

using FixedPointMap = std::function<StackedBetas(const StackedBetas&)>;

/// d(T(U), T(V)) / d(U, V) with the squared-L2 distance.
inline double empirical_contraction(const FixedPointMap& map, const StackedBetas& u, const StackedBetas& v) {
  const double before = distance_l2(u, v).total;
  if (!(before > 0.0)) throw std::invalid_argument("empirical_contraction: d(U, V) must be positive");
  return distance_l2(map(u), map(v)).total / before;
}

// ---------------------------------------------------------------------------
// Per-iteration measurement and traces

struct LearnerClassDiagnostics {
  double a_inv_norm_u = 0.0;
  double a_inv_norm_v = 0.0;
  double eta = 1.0;
  double ridge_norm = 0.0;    // ||I + C H'H||
  double penalty_norm = 0.0;  // ||H' Fhat_U Fhat_U' H||
  double lambda_bound = kInfinity;
  double lambda_bound_prime = kInfinity;
  double delta_matrix_norm_u = 0.0;  // ||Delta_U||
  double delta_matrix_norm_v = 0.0;
  std::optional<double> delta_matrix_bound_u;  // empty when the bound is inapplicable
  std::optional<double> delta_matrix_bound_v;
  double gamma = 0.0;
  double gamma_pencil = 0.0;
  bool gamma_disagrees = false;
  bool spectral_converged = true;
};

struct ClassDiagnostics {
  double delta_norm_u = 0.0;  // ||delta_(r-1)||
  double delta_norm_v = 0.0;  // ||delta_(r)||
  std::vector<LearnerClassDiagnostics> learners;
};

/// Raw quantities measured for step r: U is iterate r-1 (solved against
/// F_(r-2)) and V is iterate r (solved against F_(r-1)).
struct IterationMeasurement {
  int r = 0;
  DistanceL2 l2;
  double l1 = 0.0;
  std::vector<ClassDiagnostics> classes;
};

inline constexpr double kGammaTolerance = 1e-8;

inline bool gamma_forms_disagree(double closed, double pencil) {
  return std::abs(closed - pencil) > kGammaTolerance * std::max(1.0, std::abs(pencil));
}

/// f_before, f_prev, f_curr are F_(r-2), F_(r-1), F_(r); pass zeros for
/// iterates before B_(0).
inline IterationMeasurement measure_iteration(const NcelmSystem& system, int r, const Matrix& f_before,
                                              const Matrix& f_prev, const Matrix& f_curr, const StackedBetas& b_prev,
                                              const StackedBetas& b_curr, double lambda, std::size_t threads = 1) {
  IterationMeasurement m;
  m.r = r;
  m.l2 = distance_l2(b_prev, b_curr);
  m.l1 = distance_l1(b_prev, b_curr);

  const double C = system.C();
  const std::size_t S = system.learners();
  const Index J = system.classes();
  m.classes.resize(static_cast<std::size_t>(J));
  std::vector<RankTwoDelta> delta_u;
  std::vector<RankTwoDelta> delta_v;
  for (Index j = 0; j < J; ++j) {
    delta_u.push_back(delta_factors(f_prev, f_before, j));
    delta_v.push_back(delta_factors(f_curr, f_prev, j));
    auto& cls = m.classes[static_cast<std::size_t>(j)];
    cls.delta_norm_u = delta_norm(delta_u.back());
    cls.delta_norm_v = delta_norm(delta_v.back());
    cls.learners.resize(S);
  }

  parallel_for(S, threads, [&](std::size_t s) {
    const Matrix& h = system.hidden_output(s);
    const Matrix gram = ridge_gram(h, C);
    const double hth_max = symmetric_extremes(gram).second - 1.0 / C;
    const double ridge_norm = 1.0 + C * hth_max;
    const double h_norm = std::sqrt(std::max(0.0, hth_max));
    for (Index j = 0; j < J; ++j) {
      auto& cls = m.classes[static_cast<std::size_t>(j)];
      auto& out = cls.learners[s];
      const Vector u = h.transpose() * f_before.col(j);
      const Vector v = h.transpose() * f_prev.col(j);
      const Matrix a_u = penalized_system(gram, u, lambda, C);
      const Matrix a_v = penalized_system(gram, v, lambda, C);
      out.a_inv_norm_u = spd_inverse_norm(a_u);
      out.a_inv_norm_v = spd_inverse_norm(a_v);
      out.eta = eta(out.a_inv_norm_u, out.a_inv_norm_v);
      out.ridge_norm = ridge_norm;
      out.penalty_norm = u.squaredNorm();
      out.lambda_bound = lambda_bound(C, out.a_inv_norm_u, out.eta, cls.delta_norm_u, cls.delta_norm_v);
      out.lambda_bound_prime =
          lambda_bound_prime(ridge_norm, out.penalty_norm, out.eta, cls.delta_norm_u, cls.delta_norm_v);
      out.delta_matrix_bound_u = delta_matrix_bound(C, lambda, out.a_inv_norm_u, h_norm, cls.delta_norm_u);
      out.delta_matrix_bound_v = delta_matrix_bound(C, lambda, out.a_inv_norm_v, h_norm, cls.delta_norm_v);
      if (lambda > 0.0) {
        const Eigen::LLT<Matrix> llt_u(a_u);
        const Eigen::LLT<Matrix> llt_v(a_v);
        const auto norm_u = spectral_norm(woodbury_delta(h, llt_u, delta_u[static_cast<std::size_t>(j)], C, lambda));
        const auto norm_v = spectral_norm(woodbury_delta(h, llt_v, delta_v[static_cast<std::size_t>(j)], C, lambda));
        out.delta_matrix_norm_u = norm_u.value;
        out.delta_matrix_norm_v = norm_v.value;
        out.spectral_converged = norm_u.converged && norm_v.converged;
      }
      out.gamma = gamma_eig(out.delta_matrix_norm_u, out.delta_matrix_norm_v);
      out.gamma_pencil = gamma_pencil(out.delta_matrix_norm_u, out.delta_matrix_norm_v);
      out.gamma_disagrees = gamma_forms_disagree(out.gamma, out.gamma_pencil);
    }
  });
  return m;
}

struct IterationRecord {
  int r = 0;
  double d_l2 = 0.0;
  double d_l1 = 0.0;
  std::vector<double> per_learner_d;
  double delta_norm = 0.0;                  // max over classes of ||delta_(r)||
  double lambda_bound_prime = kInfinity;    // min over learners and classes
  std::vector<double> eta;                  // per learner, max over classes
  std::optional<double> contraction_ratio;  // d_l2(r) / d_l2(r-1), from r = 2
  std::vector<ClassDiagnostics> classes;
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
  NcelmConfig config_echo;
};

/// Collapses raw measurements into records. Per-iteration scalars take the
/// most conservative value over classes (largest delta, smallest bound).
inline ConvergenceTrace build_trace(const std::vector<IterationMeasurement>& history, const NcelmConfig& config) {
  if (history.empty()) throw std::invalid_argument("build_trace: empty history");
  ConvergenceTrace trace;
  trace.config_echo = config;
  for (const auto& m : history) {
    IterationRecord rec;
    rec.r = static_cast<int>(trace.records.size()) + 1;
    rec.d_l2 = m.l2.total;
    rec.d_l1 = m.l1;
    rec.per_learner_d = m.l2.per_learner;
    rec.classes = m.classes;
    const std::size_t S = m.l2.per_learner.size();
    rec.eta.assign(S, 0.0);
    for (const auto& cls : m.classes) {
      rec.delta_norm = std::max(rec.delta_norm, cls.delta_norm_v);
      for (std::size_t s = 0; s < cls.learners.size(); ++s) {
        rec.lambda_bound_prime = std::min(rec.lambda_bound_prime, cls.learners[s].lambda_bound_prime);
        if (s < S) rec.eta[s] = std::max(rec.eta[s], cls.learners[s].eta);
      }
    }
    if (!trace.records.empty()) {
      const double prev = trace.records.back().d_l2;
      rec.contraction_ratio = prev > 0.0 ? rec.d_l2 / prev : (rec.d_l2 == 0.0 ? 0.0 : kInfinity);
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

struct DiagnosticsReport {
  bool converged = false;
  double final_distance = 0.0;
  double max_contraction_ratio = 0.0;
  std::optional<int> lambda_within_bound_at;
  std::size_t gamma_disagreements = 0;
  std::string summary_text;
};

inline DiagnosticsReport summarize(const ConvergenceTrace& trace) {
  DiagnosticsReport report;
  if (trace.records.empty()) return report;
  const double lambda = trace.config_echo.lambda;
  report.final_distance = trace.records.back().d_l2;
  report.converged = report.final_distance <= trace.config_echo.tolerance;
  for (const auto& rec : trace.records) {
    if (rec.contraction_ratio) report.max_contraction_ratio = std::max(report.max_contraction_ratio, *rec.contraction_ratio);
    if (!report.lambda_within_bound_at && lambda < rec.lambda_bound_prime) report.lambda_within_bound_at = rec.r;
    for (const auto& cls : rec.classes) {
      for (const auto& l : cls.learners) report.gamma_disagreements += l.gamma_disagrees ? 1 : 0;
    }
  }
  std::ostringstream text;
  text << (report.converged ? "converged" : "not converged") << " after " << trace.records.size()
       << " iterations; final d=" << report.final_distance << "; max contraction ratio "
       << report.max_contraction_ratio << "; lambda=" << lambda;
  if (report.lambda_within_bound_at) {
    text << " below the computable bound from iteration " << *report.lambda_within_bound_at;
  } else {
    text << " never below the computable bound";
  }
  report.summary_text = text.str();
  return report;
}

}  // namespace ncelm
