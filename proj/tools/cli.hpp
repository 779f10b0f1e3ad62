#pragma once

#include "ncelm/ncelm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ncelm::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kNumerical = 4 };

struct RunConfig {
  std::string dataset_path;
  std::string label_column;  // empty: last column
  double test_fraction = 0.25;
  NcelmConfig ncelm;
  std::string output_dir = ".";
  bool emit_trace = true;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline void add_run_options(CLI::App& cmd, RunConfig& cfg, std::string& activation, std::string& config_file) {
  cmd.add_option("--config", config_file, "Flat key = value file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  cmd.add_option("--data", cfg.dataset_path, "CSV dataset with a header row")->required();
  cmd.add_option("--label-column", cfg.label_column, "Label column name or zero-based index (default: last)");
  cmd.add_option("--test-fraction", cfg.test_fraction, "Held-out fraction for the stratified split")
      ->capture_default_str();
  cmd.add_option("--output-dir", cfg.output_dir, "Directory for model and trace files")->capture_default_str();
  cmd.add_flag("!--no-trace", cfg.emit_trace, "Skip writing trace.csv / trace.json");
  cmd.add_option("--lambda", cfg.ncelm.lambda, "Diversity penalty weight")->capture_default_str();
  cmd.add_option("--C", cfg.ncelm.C, "Inverse ridge strength")->capture_default_str();
  cmd.add_option("--hidden", cfg.ncelm.hidden, "Hidden units per learner (D)")->capture_default_str();
  cmd.add_option("--learners", cfg.ncelm.learners, "Ensemble size (S)")->capture_default_str();
  cmd.add_option("--iterations", cfg.ncelm.max_iterations, "Maximum fixed-point iterations")->capture_default_str();
  cmd.add_option("--seed", cfg.ncelm.seed, "Seed for hidden layers and the split")->capture_default_str();
  cmd.add_option("--tolerance", cfg.ncelm.tolerance, "Stop once d_l2 <= tolerance (0 disables)")
      ->capture_default_str();
  cmd.add_option("--activation", activation, "sigmoid or tanh")->capture_default_str();
}

/// Fills options of `cmd` that were not given on the command line from a flat
/// "key = value" file, keys being the long option names without dashes.
inline void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ConfigError("cannot read config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "config") throw ConfigError("config files cannot include other config files");
    CLI::Option* opt = item.parents.empty() ? cmd.get_option_no_throw("--" + item.name) : nullptr;
    if (opt == nullptr) throw ConfigError("unknown key '" + item.fullname() + "' in " + path);
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("bad value for '" + item.name + "' in " + path + ": " + e.what());
    }
  }
}

inline std::vector<double> parse_lambdas(const std::vector<std::string>& text) {
  std::vector<double> out;
  for (const auto& t : text) {
    const auto value = ncelm::detail::parse_real(t);
    if (!value) throw ConfigError("not a lambda value: '" + t + "'");
    out.push_back(*value);
  }
  return out;
}

inline void check_run_config(const RunConfig& cfg) {
  cfg.ncelm.validate();
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
}

inline Dataset load_dataset(const std::string& path, const std::string& label_column) {
  if (!label_column.empty()) return load_csv(path, label_column);
  const CsvTable table = read_csv(path);
  if (table.header.empty()) throw DataError("dataset " + path + " has an empty header");
  return load_csv(path, std::to_string(table.header.size() - 1));
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

inline void check_model_matches(const TrainedEnsemble& model, const Dataset& data) {
  const auto model_k = model.standardization.mean.size();
  if (data.num_features() != model_k) {
    throw DataError("feature count mismatch: model K=" + std::to_string(model_k) +
                    ", dataset K=" + std::to_string(data.num_features()));
  }
  if (data.num_classes() != static_cast<Index>(model.class_labels.size())) {
    throw DataError("class count mismatch: model J=" + std::to_string(model.class_labels.size()) +
                    ", dataset J=" + std::to_string(data.num_classes()));
  }
  if (data.class_labels != model.class_labels) throw DataError("dataset class labels differ from the model's");
}

}  // namespace detail

inline int cmd_train(const RunConfig& cfg, Streams io) {
  detail::check_run_config(cfg);
  const Dataset data = detail::load_dataset(cfg.dataset_path, cfg.label_column);
  auto [train_part, test_part] = split(data, cfg.test_fraction, cfg.ncelm.seed);
  const TrainedEnsemble model = train(train_part, cfg.ncelm, {.standardize = true, .threads = threads_from_env(), .observer = {}});

  detail::ensure_dir(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);
  Json model_json = model_to_json(model);
  model_json["training_split"] = {{"test_fraction", cfg.test_fraction}, {"seed", cfg.ncelm.seed}};
  detail::open_output(dir / "model.json") << model_json.dump(2) << '\n';
  if (cfg.emit_trace) {
    auto csv = detail::open_output(dir / "trace.csv");
    write_trace_csv(csv, model.trace);
    detail::open_output(dir / "trace.json") << trace_to_json(model.trace).dump(2) << '\n';
  }
  const auto report = summarize(model.trace);
  if (!report.lambda_within_bound_at) {
    io.err << "warning: lambda=" << cfg.ncelm.lambda << " never fell below the computable bound\n";
  }
  io.out << "accuracy=" << format_real(accuracy(model, test_part)) << " iterations=" << model.trace.records.size()
         << " final_d=" << format_real(report.final_distance) << " converged=" << (report.converged ? "true" : "false")
         << '\n';
  return kOk;
}

/// First iteration whose d_l1 falls below `threshold`.
inline std::optional<int> first_below(const ConvergenceTrace& trace, double threshold) {
  for (const auto& rec : trace.records) {
    if (rec.d_l1 < threshold) return rec.r;
  }
  return std::nullopt;
}

inline int cmd_lambda_sweep(const RunConfig& cfg, const std::vector<double>& lambdas, Streams io) {
  if (lambdas.empty()) throw ConfigError("sweep needs at least one lambda value");
  for (double l : lambdas) {
    NcelmConfig c = cfg.ncelm;
    c.lambda = l;
    c.validate();
  }
  detail::check_run_config(cfg);
  const Dataset data = detail::load_dataset(cfg.dataset_path, cfg.label_column);
  auto [train_part, test_part] = split(data, cfg.test_fraction, cfg.ncelm.seed);
  detail::ensure_dir(cfg.output_dir);
  auto csv = detail::open_output(std::filesystem::path(cfg.output_dir) / "sweep.csv");
  csv << "lambda,r,d_l1\n";
  for (double l : lambdas) {
    NcelmConfig c = cfg.ncelm;
    c.lambda = l;
    const TrainedEnsemble model = train(train_part, c, {.standardize = true, .threads = threads_from_env(), .observer = {}});
    for (const auto& rec : model.trace.records) {
      csv << format_real(l) << ',' << rec.r << ',' << format_real(rec.d_l1) << '\n';
    }
    const auto hit = first_below(model.trace, 1e-6);
    io.out << "lambda=" << format_real(l) << " first_below_1e-6=" << (hit ? std::to_string(*hit) : "none")
           << " accuracy=" << format_real(accuracy(model, test_part)) << '\n';
  }
  return kOk;
}

/// Applies T twice to the stored weights B: reports d(B, T(B)) and evaluates
/// the bound quantities with U = T(B) (solved against F_B) and V = T(T(B)).
/// When the model records the split it was trained with (and `resplit` is
/// set) the same split is redone and only the training part is used.
inline int cmd_diagnose(const std::string& model_path, const std::string& dataset_path,
                        const std::string& label_column, bool resplit, Streams io) {
  const TrainedEnsemble model = load_model(model_path);
  Dataset data = detail::load_dataset(dataset_path, label_column);
  detail::check_model_matches(model, data);
  if (resplit) {
    std::ifstream in(model_path);
    const Json raw = Json::parse(in, nullptr, false);
    if (raw.is_object() && raw.contains("training_split")) {
      const auto& s = raw["training_split"];
      data = split(data, s.at("test_fraction").get<double>(), s.at("seed").get<std::uint64_t>()).first;
    }
  }

  std::vector<HiddenLayer> layers;
  StackedBetas b;
  for (const auto& l : model.learners) {
    layers.push_back(l.hidden);
    b.push_back(l.beta);
  }
  const std::size_t threads = threads_from_env();
  const NcelmSystem system(std::move(layers), apply_standardization(data.features, model.standardization),
                           data.targets, model.config.C, threads);
  const double lambda = model.config.lambda;
  const StackedBetas tb = system.apply(b, lambda, threads);
  const StackedBetas ttb = system.apply(tb, lambda, threads);
  const Matrix f_b = system.ensemble_output(b);
  const Matrix f_tb = system.ensemble_output(tb);
  const Matrix f_ttb = system.ensemble_output(ttb);
  const auto m = measure_iteration(system, 1, f_b, f_tb, f_ttb, tb, ttb, lambda, threads);
  const auto step = build_trace({m}, model.config).records.front();

  const DistanceL2 d = distance_l2(b, tb);
  DiagnosticsReport report;
  report.final_distance = d.total;
  report.converged = d.total <= model.config.tolerance;
  report.max_contraction_ratio = d.total > 0.0 ? step.d_l2 / d.total : 0.0;
  if (lambda < step.lambda_bound_prime) report.lambda_within_bound_at = 1;
  for (const auto& cls : step.classes) {
    for (const auto& l : cls.learners) report.gamma_disagreements += l.gamma_disagrees ? 1 : 0;
  }
  std::ostringstream text;
  text << "d(B, T(B))=" << format_real(d.total) << "; lambda=" << format_real(lambda)
       << (lambda < step.lambda_bound_prime ? " < " : " >= ") << "lambda_bound'=" << format_real(step.lambda_bound_prime);
  report.summary_text = text.str();

  double delta_u = 0.0;
  for (const auto& cls : step.classes) delta_u = std::max(delta_u, cls.delta_norm_u);
  Json out = report_to_json(report);
  out["d_B_TB"] = real_to_json(d.total);
  out["per_learner_d"] = reals_to_json(d.per_learner);
  out["d_l1_B_TB"] = real_to_json(distance_l1(b, tb));
  out["lambda"] = real_to_json(lambda);
  out["eta"] = reals_to_json(step.eta);
  out["delta_norm_u"] = real_to_json(delta_u);
  out["delta_norm_v"] = real_to_json(step.delta_norm);
  out["lambda_bound_prime"] = real_to_json(step.lambda_bound_prime);
  out["lambda_below_bound"] = lambda < step.lambda_bound_prime;
  io.out << out.dump(2) << '\n';
  return kOk;
}

inline int cmd_predict(const std::string& model_path, const std::string& dataset_path,
                       const std::string& label_column, const std::string& output, Streams io) {
  const TrainedEnsemble model = load_model(model_path);
  const CsvTable table = read_csv(dataset_path);
  std::optional<std::size_t> label;
  if (!label_column.empty()) label = resolve_column(table, label_column);
  const Matrix features = feature_matrix(table, label);
  if (features.cols() != model.standardization.mean.size()) {
    throw DataError("feature count mismatch: model K=" + std::to_string(model.standardization.mean.size()) +
                    ", dataset K=" + std::to_string(features.cols()));
  }
  const auto predicted = predict(model, features);

  std::ofstream file;
  if (!output.empty()) file = detail::open_output(output);
  std::ostream& sink = output.empty() ? io.out : file;
  sink << "prediction\n";
  for (const auto& p : predicted) sink << p << '\n';
  if (label) {
    std::size_t hits = 0;
    for (std::size_t n = 0; n < predicted.size(); ++n) hits += predicted[n] == std::string(ncelm::detail::trim(table.rows[n][*label])) ? 1 : 0;
    const double acc = predicted.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(predicted.size());
    (output.empty() ? io.err : io.out) << "accuracy=" << format_real(acc) << '\n';
  }
  return kOk;
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 2 usage or configuration error, 3 data error, 4 numerical degeneracy.
inline int run(int argc, const char* const* argv, Streams io) {
  CLI::App app{"Negative-correlation ELM ensembles with fixed-point convergence diagnostics", "ncelm"};
  app.require_subcommand(1);

  RunConfig train_cfg;
  std::string train_activation = "sigmoid";
  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Split, fit and write model.json plus trace.csv/trace.json");
  detail::add_run_options(*train_cmd, train_cfg, train_activation, train_config);

  RunConfig sweep_cfg;
  std::string sweep_activation = "sigmoid";
  std::string sweep_config;
  std::vector<std::string> lambda_text;
  auto* sweep_cmd = app.add_subcommand("sweep", "Fit once per lambda and write sweep.csv (lambda,r,d_l1)");
  detail::add_run_options(*sweep_cmd, sweep_cfg, sweep_activation, sweep_config);
  sweep_cmd->add_option("--lambdas", lambda_text, "Comma-separated lambda values")->delimiter(',');

  std::string model_path;
  std::string data_path;
  std::string label_column;
  std::string output;
  auto* diag_cmd = app.add_subcommand("diagnose", "Re-apply the fixed-point map to a stored model and report bounds");
  diag_cmd->add_option("--model", model_path, "model.json from train")->required();
  diag_cmd->add_option("--data", data_path, "CSV dataset")->required();
  diag_cmd->add_option("--label-column", label_column, "Label column name or zero-based index (default: last)");
  bool no_resplit = false;
  diag_cmd->add_flag("--no-resplit", no_resplit, "Use the whole dataset even if the model records a split");

  auto* predict_cmd = app.add_subcommand("predict", "Predict labels for a CSV with a stored model");
  predict_cmd->add_option("--model", model_path, "model.json from train")->required();
  predict_cmd->add_option("--data", data_path, "CSV of features (optionally with a label column)")->required();
  predict_cmd->add_option("--label-column", label_column, "Label column to drop and score against");
  predict_cmd->add_option("--output", output, "Write predictions here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, io.out, io.err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, io.out, io.err);
    return kUsage;
  }

  try {
    if (*train_cmd) {
      detail::apply_config_file(*train_cmd, train_config);
      train_cfg.ncelm.activation = parse_activation(train_activation);
      return cmd_train(train_cfg, io);
    }
    if (*sweep_cmd) {
      detail::apply_config_file(*sweep_cmd, sweep_config);
      sweep_cfg.ncelm.activation = parse_activation(sweep_activation);
      return cmd_lambda_sweep(sweep_cfg, detail::parse_lambdas(lambda_text), io);
    }
    if (*diag_cmd) return cmd_diagnose(model_path, data_path, label_column, !no_resplit, io);
    if (*predict_cmd) return cmd_predict(model_path, data_path, label_column, output, io);
  } catch (const ConfigError& e) {
    io.err << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    io.err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalDegeneracy& e) {
    io.err << "numerical degeneracy: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace ncelm::cli
