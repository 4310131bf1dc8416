#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string_view>

#include "pairwise/core.hpp"

namespace pairwise {

enum class LossKind { kSquared, kDoubleHinge, kHinge, kZeroOne };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// A margin loss l(z, t) = psi(t z).
template <typename Scalar>
struct MarginLoss {
  LossKind kind = LossKind::kSquared;
  /// rho; for the squared loss this is (C_b + 1) / 2 on |z| <= C_b.
  Scalar lipschitz_constant = 1;

  static MarginLoss make(LossKind kind, Scalar c_b = 1) {
    switch (kind) {
      case LossKind::kSquared: return {kind, (c_b + Scalar(1)) / Scalar(2)};
      case LossKind::kDoubleHinge:
      case LossKind::kHinge: return {kind, Scalar(1)};
      case LossKind::kZeroOne: return {kind, std::numeric_limits<Scalar>::infinity()};
    }
    return {kind, Scalar(1)};
  }
};

/// psi(m) for margin m = t z.
template <typename Scalar>
Scalar margin_value(LossKind kind, Scalar m) {
  switch (kind) {
    case LossKind::kSquared: return Scalar(0.25) * (m - Scalar(1)) * (m - Scalar(1));
    case LossKind::kDoubleHinge: return std::max(-m, std::max(Scalar(0), Scalar(0.5) - Scalar(0.5) * m));
    case LossKind::kHinge: return std::max(Scalar(0), Scalar(1) - m);
    case LossKind::kZeroOne: return m >= Scalar(0) ? Scalar(0) : Scalar(1);  // sign(0) = +1
  }
  return Scalar(0);
}

/// An element of the subdifferential of psi at m (left derivative at kinks).
template <typename Scalar>
Scalar margin_subgradient(LossKind kind, Scalar m) {
  switch (kind) {
    case LossKind::kSquared: return Scalar(0.5) * (m - Scalar(1));
    case LossKind::kDoubleHinge:
      if (m <= Scalar(-1)) return Scalar(-1);
      if (m <= Scalar(1)) return Scalar(-0.5);
      return Scalar(0);
    case LossKind::kHinge: return m <= Scalar(1) ? Scalar(-1) : Scalar(0);
    case LossKind::kZeroOne: return Scalar(0);
  }
  return Scalar(0);
}

/// Right derivative of psi at m; differs from margin_subgradient only at kinks.
template <typename Scalar>
Scalar margin_right_derivative(LossKind kind, Scalar m) {
  switch (kind) {
    case LossKind::kDoubleHinge:
      if (m < Scalar(-1)) return Scalar(-1);
      if (m < Scalar(1)) return Scalar(-0.5);
      return Scalar(0);
    case LossKind::kHinge: return m < Scalar(1) ? Scalar(-1) : Scalar(0);
    default: return margin_subgradient(kind, m);
  }
}

template <typename Scalar>
Scalar eval_loss(const MarginLoss<Scalar>& loss, Scalar z, Label t) {
  // The zero-one loss scores the prediction sign(z), so z = 0 counts as +1 for either label.
  if (loss.kind == LossKind::kZeroOne) return sign_label(z) == t ? Scalar(0) : Scalar(1);
  return margin_value(loss.kind, sign_of<Scalar>(t) * z);
}

/// d l(z, t) / dz, a subgradient for the non-smooth losses.
template <typename Scalar>
Scalar eval_loss_derivative(const MarginLoss<Scalar>& loss, Scalar z, Label t) {
  const Scalar s = sign_of<Scalar>(t);
  return s * margin_subgradient(loss.kind, s * z);
}

/// L(z, t) = (pi_+ l(z, t) - pi_- l(z, -t)) / (pi_+ - pi_-)
template <typename Scalar>
Scalar corrected_loss(const MarginLoss<Scalar>& loss, const ClassPriors<Scalar>& priors, Scalar z, Label t) {
  return (priors.pi_plus * eval_loss(loss, z, t) - priors.pi_minus * eval_loss(loss, z, flip(t))) / priors.gap();
}

/// L~(z) = (l(z, +1) - l(z, -1)) / (pi_+ - pi_-)
template <typename Scalar>
Scalar corrected_loss_tilde(const MarginLoss<Scalar>& loss, const ClassPriors<Scalar>& priors, Scalar z) {
  return (eval_loss(loss, z, Label::kPositive) - eval_loss(loss, z, Label::kNegative)) / priors.gap();
}

template <typename Scalar>
Scalar corrected_loss_derivative(const MarginLoss<Scalar>& loss, const ClassPriors<Scalar>& priors, Scalar z,
                                 Label t) {
  return (priors.pi_plus * eval_loss_derivative(loss, z, t) -
          priors.pi_minus * eval_loss_derivative(loss, z, flip(t))) /
         priors.gap();
}

template <typename Scalar>
Scalar corrected_loss_tilde_derivative(const MarginLoss<Scalar>& loss, const ClassPriors<Scalar>& priors, Scalar z) {
  return (eval_loss_derivative(loss, z, Label::kPositive) - eval_loss_derivative(loss, z, Label::kNegative)) /
         priors.gap();
}

/// True iff l(z, +1) - l(z, -1) = -z (to 1e-12) at every grid point. This is
/// the condition under which the SDU objective is convex in the weights.
template <typename Scalar>
bool check_linear_odds_condition(const MarginLoss<Scalar>& loss, std::span<const Scalar> grid) {
  for (const Scalar z : grid) {
    const Scalar residual = eval_loss(loss, z, Label::kPositive) - eval_loss(loss, z, Label::kNegative) + z;
    if (!(std::abs(residual) <= Scalar(1e-12))) return false;
  }
  return true;
}

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSquared: return "squared";
    case LossKind::kDoubleHinge: return "double_hinge";
    case LossKind::kHinge: return "hinge";
    case LossKind::kZeroOne: return "zero_one";
  }
  return "unknown";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared" || name == "sq") return LossKind::kSquared;
  if (name == "double_hinge" || name == "double-hinge" || name == "dh") return LossKind::kDoubleHinge;
  if (name == "hinge") return LossKind::kHinge;
  if (name == "zero_one" || name == "zero-one" || name == "01") return LossKind::kZeroOne;
  throw Error(ErrorKind::kConfigError, "unknown loss '" + std::string(name) + "'");
}

}  // namespace pairwise
