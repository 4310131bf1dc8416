#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pairwise/core.hpp"

namespace pairwise {

/// Features one row per sample, labels alongside.
struct LabeledDataset {
  Matrix<double> features;
  std::vector<Label> labels;

  Index size() const { return features.rows(); }
  Index dimension() const { return features.cols(); }
  LabeledSample<double> sample(Index i) const { return {features.row(i).transpose(), labels[std::size_t(i)]}; }
  double positive_fraction() const;
};

/// Class-conditional isotropic Gaussians.
struct GaussianSpec {
  Vector<double> mean_plus;
  Vector<double> mean_minus;
  double variance = 1;
  double pi_plus = 0.7;

  /// Means at distance `separation` (in standard deviations) along the first axis.
  static GaussianSpec separated(Index dim, double separation, double pi_plus, double variance = 1);
};

/// Draws n_sd pairs: similar with probability pi_S, sharing a class drawn with
/// probabilities (pi_+^2, pi_-^2) / pi_S; dissimilar pairs take one point from
/// each class in random order. Points are drawn with replacement.
PairSet<double> sample_pairs(const LabeledDataset& data, std::int64_t n_sd, double pi_plus, std::uint64_t seed);

/// Class ~ Bernoulli(pi_+) per point, then a point of that class with replacement.
UnlabeledSet<double> sample_unlabeled(const LabeledDataset& data, std::int64_t n_u, double pi_plus,
                                      std::uint64_t seed);

/// Same draws as sample_unlabeled with the same seed, keeping the labels.
LabeledDataset sample_labeled(const LabeledDataset& data, std::int64_t n, double pi_plus, std::uint64_t seed);

LabeledDataset sample_gaussian_labeled(const GaussianSpec& spec, std::int64_t n, std::uint64_t seed);

/// Maps raw label values to classes.
struct LabelMap {
  std::vector<double> positive{1.0};
  std::vector<double> negative{-1.0, 0.0, 2.0};

  Label map(double raw, std::size_t line) const;
};

/// "<label> <index>:<value> ..." with 1-based strictly increasing indices;
/// absent indices are 0.
LabeledDataset parse_libsvm(std::string_view text, const LabelMap& labels = {});
std::string serialize_libsvm(const LabeledDataset& data);

/// Numeric CSV; the label column must hold exactly two distinct values, the
/// larger of which becomes the positive class.
LabeledDataset parse_csv(std::string_view text, Index label_column, bool has_header = false);

enum class DataFormat { kLibsvm, kCsv };
DataFormat parse_data_format(std::string_view name);
LabeledDataset load_dataset(const std::string& path, DataFormat format, Index label_column = -1,
                            bool has_header = false);

/// Per-feature z-scoring with the divisor-n standard deviation; zero-variance
/// features keep scale 1.
FeatureMap<double> fit_standardizer(const Matrix<double>& features);
FeatureMap<double> fit_standardizer(const LabeledDataset& data);

/// All pair members followed by the unlabeled points, one per row.
Matrix<double> training_points(const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled);

}  // namespace pairwise
