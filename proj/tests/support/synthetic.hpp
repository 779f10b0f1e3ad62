#pragma once

#include "ncelm/dataset.hpp"
#include "ncelm/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ncelm::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

/// Gaussian blobs: class c has a random mean in [-spread, spread]^K and unit
/// isotropic noise. Labels are "c0", "c1", ...
inline Dataset gaussian_blobs(const std::vector<Index>& class_counts, Index features, std::uint64_t seed,
                              double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Matrix means = random_matrix(rng, static_cast<Index>(class_counts.size()), features, -spread, spread);
  Index total = 0;
  for (Index c : class_counts) total += c;
  Matrix x(total, features);
  std::vector<std::string> labels;
  Index row = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    for (Index i = 0; i < class_counts[c]; ++i, ++row) {
      for (Index k = 0; k < features; ++k) x(row, k) = means(static_cast<Index>(c), k) + noise(rng);
      labels.push_back("c" + std::to_string(c));
    }
  }
  return make_dataset(std::move(x), labels, "blobs");
}

/// Same shape as the qsar-biodegradation benchmark: 1055 patterns, 41
/// attributes, two classes of 699 and 356.
inline Dataset qsar_shaped(std::uint64_t seed = 2021) { return gaussian_blobs({699, 356}, 41, seed, 0.35); }

}  // namespace ncelm::testing
