#pragma once

#include "ncelm/config.hpp"
#include "ncelm/dataset.hpp"
#include "ncelm/diagnostics.hpp"
#include "ncelm/elm.hpp"
#include "ncelm/errors.hpp"
#include "ncelm/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace ncelm {

using Json = nlohmann::json;

/// 17 significant digits; infinities as "inf" / "-inf".
inline std::string format_real(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON number, or the string "inf" for infinities (JSON has no infinity).
inline Json real_to_json(double x) {
  if (std::isinf(x)) return format_real(x);
  return x;
}

inline double real_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    throw DataError("expected a number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

inline Json reals_to_json(const std::vector<double>& xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(real_to_json(x));
  return out;
}

// ---------------------------------------------------------------------------
// Model

inline Json config_to_json(const NcelmConfig& c) {
  return {{"learners", c.learners},     {"hidden", c.hidden},
          {"C", c.C},                   {"lambda", c.lambda},
          {"max_iterations", c.max_iterations}, {"tolerance", real_to_json(c.tolerance)},
          {"seed", c.seed},             {"activation", std::string(to_string(c.activation))}};
}

inline NcelmConfig config_from_json(const Json& j) {
  NcelmConfig c;
  c.learners = j.at("learners").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.C = j.at("C").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.tolerance = real_from_json(j.at("tolerance"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.validate();
  return c;
}

inline Json learner_to_json(const BaseLearner& l) {
  std::vector<double> beta;
  beta.reserve(static_cast<std::size_t>(l.beta.size()));
  for (Index d = 0; d < l.beta.rows(); ++d) {
    for (Index j = 0; j < l.beta.cols(); ++j) beta.push_back(l.beta(d, j));
  }
  return {{"seed", l.hidden.seed},
          {"K", l.hidden.inputs()},
          {"D", l.hidden.hidden()},
          {"activation", std::string(to_string(l.hidden.activation))},
          {"beta", beta}};
}

/// The hidden layer is regenerated from (seed, K, D, activation).
inline BaseLearner learner_from_json(const Json& j) {
  const auto K = j.at("K").get<Index>();
  const auto D = j.at("D").get<Index>();
  const auto values = j.at("beta").get<std::vector<double>>();
  if (D < 1 || values.empty() || values.size() % static_cast<std::size_t>(D) != 0) {
    throw DataError("learner beta length is not a multiple of D");
  }
  BaseLearner l;
  l.hidden = make_hidden_layer(j.at("seed").get<std::uint64_t>(), K, D,
                               parse_activation(j.at("activation").get<std::string>()));
  const auto J = static_cast<Index>(values.size()) / D;
  l.beta.resize(D, J);
  for (Index d = 0; d < D; ++d) {
    for (Index c = 0; c < J; ++c) l.beta(d, c) = values[static_cast<std::size_t>(d * J + c)];
  }
  return l;
}

inline Json model_to_json(const TrainedEnsemble& e) {
  Json learners = Json::array();
  for (const auto& l : e.learners) learners.push_back(learner_to_json(l));
  const std::vector<double> mean(e.standardization.mean.begin(), e.standardization.mean.end());
  const std::vector<double> scale(e.standardization.scale.begin(), e.standardization.scale.end());
  return {{"config", config_to_json(e.config)},
          {"standardization", {{"mean", mean}, {"scale", scale}}},
          {"class_labels", e.class_labels},
          {"learners", learners}};
}

inline TrainedEnsemble model_from_json(const Json& j) {
  TrainedEnsemble e;
  try {
    e.config = config_from_json(j.at("config"));
    const auto mean = j.at("standardization").at("mean").get<std::vector<double>>();
    const auto scale = j.at("standardization").at("scale").get<std::vector<double>>();
    e.standardization.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
    e.standardization.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Index>(scale.size()));
    e.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    for (const auto& l : j.at("learners")) e.learners.push_back(learner_from_json(l));
  } catch (const Json::exception& ex) {
    throw DataError(std::string("malformed model JSON: ") + ex.what());
  }
  if (e.learners.empty()) throw DataError("model has no learners");
  for (const auto& l : e.learners) {
    if (l.beta.cols() != static_cast<Index>(e.class_labels.size()) || l.hidden.inputs() != e.standardization.mean.size()) {
      throw DataError("model learner shapes disagree with class labels or standardization");
    }
  }
  return e;
}

inline void save_model(const TrainedEnsemble& e, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(e).dump(2) << '\n';
}

inline TrainedEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& ex) {
    throw DataError("cannot parse model file " + path.string() + ": " + ex.what());
  }
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Traces

inline constexpr const char* kTraceCsvHeader =
    "r,d_l2,d_l1,delta_norm,lambda_bound_prime,max_contraction_ratio,per_learner_d_json,eta_json";

namespace detail {

inline std::string compact_array(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    const std::string v = format_real(xs[i]);
    out += std::isinf(xs[i]) ? "\"" + v + "\"" : v;
  }
  return out + "]";
}

inline std::string csv_quote(const std::string& field) {
  std::string out = "\"";
  for (char c : field) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

/// One row per iteration. max_contraction_ratio is the running maximum of the
/// step ratios and is empty at r = 1.
inline void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << kTraceCsvHeader << '\n';
  std::optional<double> running;
  for (const auto& rec : trace.records) {
    if (rec.contraction_ratio) running = std::max(running.value_or(0.0), *rec.contraction_ratio);
    out << rec.r << ',' << format_real(rec.d_l2) << ',' << format_real(rec.d_l1) << ','
        << format_real(rec.delta_norm) << ',' << format_real(rec.lambda_bound_prime) << ','
        << (running ? format_real(*running) : std::string()) << ','
        << detail::csv_quote(detail::compact_array(rec.per_learner_d)) << ','
        << detail::csv_quote(detail::compact_array(rec.eta)) << '\n';
  }
}

inline Json optional_to_json(const std::optional<double>& x, const char* absent) {
  return x ? real_to_json(*x) : Json(absent);
}

inline Json learner_detail_to_json(const LearnerClassDiagnostics& l) {
  return {{"a_inv_norm_u", real_to_json(l.a_inv_norm_u)},
          {"a_inv_norm_v", real_to_json(l.a_inv_norm_v)},
          {"eta", real_to_json(l.eta)},
          {"ridge_norm", real_to_json(l.ridge_norm)},
          {"penalty_norm", real_to_json(l.penalty_norm)},
          {"lambda_bound", real_to_json(l.lambda_bound)},
          {"lambda_bound_prime", real_to_json(l.lambda_bound_prime)},
          {"Delta_U_norm", real_to_json(l.delta_matrix_norm_u)},
          {"Delta_V_norm", real_to_json(l.delta_matrix_norm_v)},
          {"Delta_U_sq_bound", optional_to_json(l.delta_matrix_bound_u, "inapplicable")},
          {"Delta_V_sq_bound", optional_to_json(l.delta_matrix_bound_v, "inapplicable")},
          {"gamma", real_to_json(l.gamma)},
          {"gamma_pencil", real_to_json(l.gamma_pencil)},
          {"gamma_disagrees", l.gamma_disagrees},
          {"spectral_converged", l.spectral_converged}};
}

inline Json report_to_json(const DiagnosticsReport& r) {
  return {{"converged", r.converged},
          {"final_distance", real_to_json(r.final_distance)},
          {"max_contraction_ratio", real_to_json(r.max_contraction_ratio)},
          {"lambda_within_bound_at", r.lambda_within_bound_at ? Json(*r.lambda_within_bound_at) : Json(nullptr)},
          {"gamma_disagreements", r.gamma_disagreements},
          {"summary_text", r.summary_text}};
}

inline Json trace_to_json(const ConvergenceTrace& trace) {
  Json records = Json::array();
  for (const auto& rec : trace.records) {
    Json classes = Json::array();
    for (std::size_t j = 0; j < rec.classes.size(); ++j) {
      Json learners = Json::array();
      for (const auto& l : rec.classes[j].learners) learners.push_back(learner_detail_to_json(l));
      classes.push_back({{"j", j},
                         {"delta_norm_u", real_to_json(rec.classes[j].delta_norm_u)},
                         {"delta_norm_v", real_to_json(rec.classes[j].delta_norm_v)},
                         {"learners", learners}});
    }
    records.push_back({{"r", rec.r},
                       {"d_l2", real_to_json(rec.d_l2)},
                       {"d_l1", real_to_json(rec.d_l1)},
                       {"per_learner_d", reals_to_json(rec.per_learner_d)},
                       {"delta_norm", real_to_json(rec.delta_norm)},
                       {"lambda_bound_prime", real_to_json(rec.lambda_bound_prime)},
                       {"eta", reals_to_json(rec.eta)},
                       {"contraction_ratio", rec.contraction_ratio ? real_to_json(*rec.contraction_ratio) : Json(nullptr)},
                       {"classes", classes}});
  }
  return {{"config", config_to_json(trace.config_echo)},
          {"records", records},
          {"report", report_to_json(summarize(trace))}};
}

}  // namespace ncelm
