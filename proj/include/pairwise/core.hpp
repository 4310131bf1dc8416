#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "pairwise/error.hpp"

namespace pairwise {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Priors closer than this to 1/2 are rejected: the corrected losses divide by
/// pi_plus - pi_minus.
inline constexpr double kPriorEpsilon = 1e-6;

enum class Label : int { kPositive = 1, kNegative = -1 };

template <typename Scalar = double>
constexpr Scalar sign_of(Label t) {
  return t == Label::kPositive ? Scalar(1) : Scalar(-1);
}

constexpr Label flip(Label t) { return t == Label::kPositive ? Label::kNegative : Label::kPositive; }

template <typename Scalar>
struct LabeledSample {
  Vector<Scalar> features;
  Label label = Label::kPositive;
};

template <typename Scalar>
struct PairExample {
  Vector<Scalar> first;
  Vector<Scalar> second;
};

template <typename Scalar>
struct PairSet {
  std::vector<PairExample<Scalar>> similar;
  std::vector<PairExample<Scalar>> dissimilar;

  Index n_s() const { return static_cast<Index>(similar.size()); }
  Index n_d() const { return static_cast<Index>(dissimilar.size()); }

  /// Dimension shared by all pairs, or -1 when the set is empty.
  Index dimension() const {
    if (!similar.empty()) return similar.front().first.size();
    if (!dissimilar.empty()) return dissimilar.front().first.size();
    return -1;
  }
};

/// Unlabeled points, one per row.
template <typename Scalar>
struct UnlabeledSet {
  Matrix<Scalar> points;

  Index n_u() const { return points.rows(); }
};

template <typename Scalar>
struct ClassPriors {
  Scalar pi_plus;
  Scalar pi_minus;
  Scalar pi_s;
  Scalar pi_d;

  /// pi_plus - pi_minus, the denominator of every corrected loss.
  Scalar gap() const { return pi_plus - pi_minus; }
};

template <typename Scalar = double>
ClassPriors<Scalar> make_priors(Scalar pi_plus) {
  if (!(pi_plus > Scalar(0) && pi_plus < Scalar(1)))
    throw Error(ErrorKind::kOutOfRange, "class prior must lie in (0, 1), got " + std::to_string(double(pi_plus)));
  if (std::abs(pi_plus - Scalar(0.5)) <= Scalar(kPriorEpsilon))
    throw Error(ErrorKind::kDegeneratePrior,
                "class prior " + std::to_string(double(pi_plus)) + " is within 1e-6 of 0.5");
  const Scalar pi_minus = Scalar(1) - pi_plus;
  return {pi_plus, pi_minus, pi_plus * pi_plus + pi_minus * pi_minus, Scalar(2) * pi_plus * pi_minus};
}

enum class FeatureMapKind { kIdentity, kStandardize };

/// phi: R^d -> R^k. Both supported maps keep k = d.
template <typename Scalar>
struct FeatureMap {
  FeatureMapKind kind = FeatureMapKind::kIdentity;
  Index input_dim = 0;
  Vector<Scalar> mean;   // standardization only
  Vector<Scalar> scale;  // standardization only, entries > 0

  static FeatureMap identity(Index d) { return {FeatureMapKind::kIdentity, d, {}, {}}; }

  static FeatureMap standardize(Vector<Scalar> mean, Vector<Scalar> scale) {
    if (mean.size() != scale.size())
      throw Error(ErrorKind::kDimensionMismatch, "standardizer mean and scale differ in length");
    if ((scale.array() <= Scalar(0)).any())
      throw Error(ErrorKind::kOutOfRange, "standardizer scale entries must be positive");
    const Index d = mean.size();
    return {FeatureMapKind::kStandardize, d, std::move(mean), std::move(scale)};
  }

  Index output_dim() const { return input_dim; }

  Vector<Scalar> apply(const Eigen::Ref<const Vector<Scalar>>& x) const {
    if (x.size() != input_dim)
      throw Error(ErrorKind::kDimensionMismatch, "feature map expects dimension " + std::to_string(input_dim) +
                                                     ", got " + std::to_string(x.size()));
    if (kind == FeatureMapKind::kIdentity) return x;
    return ((x - mean).array() / scale.array()).matrix();
  }

  /// Maps every row of `rows`.
  Matrix<Scalar> apply_rows(const Eigen::Ref<const Matrix<Scalar>>& rows) const {
    if (rows.rows() > 0 && rows.cols() != input_dim)
      throw Error(ErrorKind::kDimensionMismatch, "feature map expects dimension " + std::to_string(input_dim) +
                                                     ", got " + std::to_string(rows.cols()));
    if (kind == FeatureMapKind::kIdentity || rows.rows() == 0) return rows;
    return ((rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  }
};

template <typename Scalar>
struct LinearModel {
  Vector<Scalar> weights;
  Scalar bias = 0;

  static LinearModel zero(Index k) { return {Vector<Scalar>::Zero(k), Scalar(0)}; }
};

/// f(x) = w^T phi(x) + b
template <typename Scalar>
Scalar predict(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
               const Eigen::Ref<const Vector<std::type_identity_t<Scalar>>>& x) {
  const Vector<Scalar> phi = map.apply(x);
  if (phi.size() != model.weights.size())
    throw Error(ErrorKind::kDimensionMismatch, "model has " + std::to_string(model.weights.size()) +
                                                   " weights but the feature map emits " + std::to_string(phi.size()));
  return model.weights.dot(phi) + model.bias;
}

/// Scores of already-mapped rows.
template <typename Scalar>
Vector<Scalar> scores(const LinearModel<Scalar>& model, const Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>& mapped_rows) {
  if (mapped_rows.rows() == 0) return Vector<Scalar>(0);
  if (mapped_rows.cols() != model.weights.size())
    throw Error(ErrorKind::kDimensionMismatch, "design matrix has " + std::to_string(mapped_rows.cols()) +
                                                   " columns, model has " + std::to_string(model.weights.size()));
  return (mapped_rows * model.weights).array() + model.bias;
}

/// sign with sign(0) = +1.
template <typename Scalar>
Label sign_label(Scalar score) {
  return score >= Scalar(0) ? Label::kPositive : Label::kNegative;
}

template <typename Scalar>
Label classify(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
               const Eigen::Ref<const Vector<std::type_identity_t<Scalar>>>& x) {
  return sign_label(predict(model, map, x));
}

/// Mapped points: x_s stacks (first, second) of every similar pair, x_d likewise,
/// x_u holds the unlabeled points in input order.
template <typename Scalar>
struct DesignMatrices {
  Matrix<Scalar> x_s;
  Matrix<Scalar> x_d;
  Matrix<Scalar> x_u;

  Index n_s() const { return x_s.rows() / 2; }
  Index n_d() const { return x_d.rows() / 2; }
  Index n_u() const { return x_u.rows(); }
  Index features() const { return std::max({x_s.cols(), x_d.cols(), x_u.cols()}); }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> stack_pairs(const std::vector<PairExample<Scalar>>& pairs, const FeatureMap<Scalar>& map) {
  Matrix<Scalar> out(2 * static_cast<Index>(pairs.size()), map.output_dim());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Index row = 2 * static_cast<Index>(i);
    out.row(row) = map.apply(pairs[i].first).transpose();
    out.row(row + 1) = map.apply(pairs[i].second).transpose();
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
DesignMatrices<Scalar> build_design_matrices(const PairSet<Scalar>& pairs, const UnlabeledSet<Scalar>& unlabeled,
                                             const FeatureMap<Scalar>& map) {
  DesignMatrices<Scalar> design;
  design.x_s = detail::stack_pairs(pairs.similar, map);
  design.x_d = detail::stack_pairs(pairs.dissimilar, map);
  if (unlabeled.n_u() == 0)
    design.x_u.resize(0, map.output_dim());
  else
    design.x_u = map.apply_rows(unlabeled.points);
  return design;
}

}  // namespace pairwise
