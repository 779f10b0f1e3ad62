#pragma once

#include "ncelm/errors.hpp"
#include "ncelm/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ncelm {

/// Numeric classification data: N×K features and N×J one-hot targets.
/// Column j of `targets` corresponds to `class_labels[j]`.
struct Dataset {
  Matrix features;
  Matrix targets;
  std::vector<std::string> class_labels;
  std::string name;

  Index size() const { return features.rows(); }
  Index num_features() const { return features.cols(); }
  Index num_classes() const { return targets.cols(); }

  /// Class index of every row (position of the 1 in its target row).
  std::vector<Index> label_indices() const {
    std::vector<Index> out(static_cast<std::size_t>(size()));
    for (Index n = 0; n < size(); ++n) targets.row(n).maxCoeff(&out[static_cast<std::size_t>(n)]);
    return out;
  }
};

struct StandardizationParams {
  Vector mean;
  Vector scale;

  static StandardizationParams identity(Index features) {
    return {Vector::Zero(features), Vector::Ones(features)};
  }
};

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 style reader: comma separated, double-quoted fields with "" as an
/// escaped quote, LF or CRLF line endings. Blank lines are skipped.
inline CsvTable parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char ch = 0;

  auto end_record = [&] {
    if (field_started || !field.empty() || !record.empty()) {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };

  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (in.peek() == '\n') in.get(ch);
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("CSV: unterminated quoted field at end of input");
  end_record();

  CsvTable table;
  if (records.empty()) throw DataError("CSV: missing header row");
  table.header = std::move(records.front());
  if (!table.header.empty() && table.header.front().starts_with("\xEF\xBB\xBF")) {
    table.header.front().erase(0, 3);
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size()) {
      throw DataError("CSV: row " + std::to_string(i + 1) + " has " + std::to_string(records[i].size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path.string());
  return parse_csv(in);
}

/// Resolves a column given by header name, falling back to a zero-based index.
inline std::size_t resolve_column(const CsvTable& table, const std::string& column) {
  if (auto it = std::find(table.header.begin(), table.header.end(), column); it != table.header.end()) {
    return static_cast<std::size_t>(it - table.header.begin());
  }
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), index);
  if (ec == std::errc() && ptr == column.data() + column.size() && index < table.header.size()) return index;
  throw DataError("label column '" + column + "' not found in header");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

/// Parses every column except `skip` as a finite real. Row numbers in errors
/// are 1-based file rows, counting the header as row 1.
inline Matrix feature_matrix(const CsvTable& table, std::optional<std::size_t> skip = std::nullopt) {
  const std::size_t cols = table.header.size() - (skip ? 1 : 0);
  Matrix out(static_cast<Index>(table.rows.size()), static_cast<Index>(cols));
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (skip && c == *skip) continue;
      auto value = detail::parse_real(table.rows[n][c]);
      if (!value) {
        throw DataError("non-numeric feature value '" + table.rows[n][c] + "' at row " + std::to_string(n + 2) +
                        ", column " + std::to_string(c + 1) + " ('" + table.header[c] + "')");
      }
      out(static_cast<Index>(n), static_cast<Index>(k++)) = *value;
    }
  }
  return out;
}

/// One-hot encodes `labels` against their lexicographically sorted distinct values.
inline Dataset make_dataset(Matrix features, const std::vector<std::string>& labels, std::string name = {}) {
  if (features.rows() != static_cast<Index>(labels.size())) {
    throw DataError("feature rows and label count differ");
  }
  if (features.rows() < 1) throw DataError("dataset has no rows");
  if (features.cols() < 1) throw DataError("dataset has no feature columns");
  std::vector<std::string> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DataError("dataset must contain at least two classes");

  Dataset d;
  d.targets = Matrix::Zero(features.rows(), static_cast<Index>(classes.size()));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    auto j = std::lower_bound(classes.begin(), classes.end(), labels[n]) - classes.begin();
    d.targets(static_cast<Index>(n), j) = 1.0;
  }
  d.features = std::move(features);
  d.class_labels = std::move(classes);
  d.name = std::move(name);
  return d;
}

inline Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  const CsvTable table = read_csv(path);
  const std::size_t label = resolve_column(table, label_column);
  if (table.header.size() < 2) throw DataError("dataset needs at least one feature column besides the label");
  std::vector<std::string> labels;
  labels.reserve(table.rows.size());
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    std::string value(detail::trim(table.rows[n][label]));
    if (value.empty()) throw DataError("empty label at row " + std::to_string(n + 2));
    labels.push_back(std::move(value));
  }
  return make_dataset(feature_matrix(table, label), labels, path.stem().string());
}

// ---------------------------------------------------------------------------
// Standardization

inline Matrix apply_standardization(const Matrix& features, const StandardizationParams& p) {
  if (features.cols() != p.mean.size() || p.scale.size() != p.mean.size()) {
    throw DataError("standardization expects " + std::to_string(p.mean.size()) + " columns, got " +
                    std::to_string(features.cols()));
  }
  Matrix out(features.rows(), features.cols());
  for (Index k = 0; k < features.cols(); ++k) {
    for (Index n = 0; n < features.rows(); ++n) out(n, k) = (features(n, k) - p.mean(k)) / p.scale(k);
  }
  return out;
}

/// Column-wise zero mean and unit population standard deviation. Constant
/// columns are only centered (scale 1).
inline std::pair<Dataset, StandardizationParams> standardize(const Dataset& d) {
  const Index n_rows = d.size();
  if (n_rows < 2) throw DataError("standardize needs at least two rows");
  StandardizationParams p{Vector(d.num_features()), Vector(d.num_features())};
  for (Index k = 0; k < d.num_features(); ++k) {
    double sum = 0.0;
    for (Index n = 0; n < n_rows; ++n) sum += d.features(n, k);
    const double mean = sum / static_cast<double>(n_rows);
    double sq = 0.0;
    for (Index n = 0; n < n_rows; ++n) sq += (d.features(n, k) - mean) * (d.features(n, k) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(n_rows));
    p.mean(k) = mean;
    p.scale(k) = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  Dataset out = d;
  out.features = apply_standardization(d.features, p);
  return {std::move(out), std::move(p)};
}

// ---------------------------------------------------------------------------
// Splitting

/// Rows of `d` at the given positions, in that order.
inline Dataset subset(const Dataset& d, std::span<const Index> rows) {
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), d.num_features());
  out.targets.resize(static_cast<Index>(rows.size()), d.num_classes());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = d.features.row(rows[i]);
    out.targets.row(static_cast<Index>(i)) = d.targets.row(rows[i]);
  }
  out.class_labels = d.class_labels;
  out.name = d.name;
  return out;
}

namespace detail {

/// Unbiased-enough index in [0, bound) from a 64-bit draw; fixed formula so
/// splits are identical across standard library implementations.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t bound) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * bound;
  return static_cast<std::size_t>(wide >> 64);
}

}  // namespace detail

/// Per-class test counts: round(fraction * class count), nudged by at most one
/// per class (largest rounding residue first) so they sum to round(fraction * N).
inline std::vector<Index> stratified_test_counts(std::span<const Index> class_counts, double test_fraction) {
  std::vector<Index> counts;
  std::vector<double> residue;
  Index total = 0;
  Index assigned = 0;
  for (Index c : class_counts) {
    const double exact = test_fraction * static_cast<double>(c);
    counts.push_back(static_cast<Index>(std::round(exact)));
    residue.push_back(exact - static_cast<double>(counts.back()));
    total += c;
    assigned += counts.back();
  }
  const Index target = static_cast<Index>(std::round(test_fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  if (assigned < target) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return residue[a] > residue[b]; });
    for (std::size_t i : order) {
      if (assigned == target) break;
      if (counts[i] < class_counts[i]) ++counts[i], ++assigned;
    }
  } else if (assigned > target) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return residue[a] < residue[b]; });
    for (std::size_t i : order) {
      if (assigned == target) break;
      if (counts[i] > 0) --counts[i], --assigned;
    }
  }
  return counts;
}

/// Deterministic stratified split into (train, test). Both parts keep the
/// original row order.
inline std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DataError("test_fraction must lie in (0, 1)");
  const auto labels = d.label_indices();
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(d.num_classes()));
  for (Index n = 0; n < d.size(); ++n) by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(n)])].push_back(n);

  std::vector<Index> class_counts;
  for (const auto& rows : by_class) class_counts.push_back(static_cast<Index>(rows.size()));
  const auto test_counts = stratified_test_counts(class_counts, test_fraction);

  std::mt19937_64 rng(seed);
  std::vector<char> in_test(static_cast<std::size_t>(d.size()), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[detail::draw_index(rng, i)]);
    for (Index i = 0; i < test_counts[c]; ++i) in_test[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] = 1;
  }

  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
  for (Index n = 0; n < d.size(); ++n) (in_test[static_cast<std::size_t>(n)] ? test_rows : train_rows).push_back(n);
  if (train_rows.empty() || test_rows.empty()) {
    throw DataError("split with test_fraction " + std::to_string(test_fraction) + " leaves an empty part");
  }
  return {subset(d, train_rows), subset(d, test_rows)};
}

}  // namespace ncelm
