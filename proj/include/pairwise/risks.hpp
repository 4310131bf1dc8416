#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "pairwise/core.hpp"
#include "pairwise/losses.hpp"

namespace pairwise {

/// Mixing weights of the SU, DU and SD risks.
template <typename Scalar>
struct GammaWeights {
  Scalar g1 = 0;  // SU
  Scalar g2 = 0;  // DU
  Scalar g3 = 1;  // SD

  static GammaWeights make(Scalar g1, Scalar g2, Scalar g3) {
    if (g1 < Scalar(0) || g2 < Scalar(0) || g3 < Scalar(0))
      throw Error(ErrorKind::kOutOfRange, "gamma weights must be nonnegative");
    if (std::abs(g1 + g2 + g3 - Scalar(1)) > Scalar(1e-12))
      throw Error(ErrorKind::kOutOfRange, "gamma weights must sum to one");
    return {g1, g2, g3};
  }

  bool uses_similar() const { return g1 != Scalar(0) || g3 != Scalar(0); }
  bool uses_dissimilar() const { return g2 != Scalar(0) || g3 != Scalar(0); }
  bool uses_unlabeled() const { return g1 != Scalar(0) || g2 != Scalar(0); }
};

enum class Variant { kSdsu, kSddu, kSudu };

/// SDSU -> (g, 0, 1-g); SDDU -> (0, g, 1-g); SUDU -> (1-g, g, 0).
template <typename Scalar = double>
GammaWeights<Scalar> gamma_for_variant(Variant variant, Scalar g) {
  if (!(g >= Scalar(0) && g <= Scalar(1))) throw Error(ErrorKind::kOutOfRange, "gamma must lie in [0, 1]");
  switch (variant) {
    case Variant::kSdsu: return {g, Scalar(0), Scalar(1) - g};
    case Variant::kSddu: return {Scalar(0), g, Scalar(1) - g};
    case Variant::kSudu: return {Scalar(1) - g, g, Scalar(0)};
  }
  return {};
}

/// Pointwise scores f(x) of the stacked pair members and the unlabeled points.
template <typename Scalar>
struct RiskScores {
  Vector<Scalar> s;  // 2 n_S entries
  Vector<Scalar> d;  // 2 n_D entries
  Vector<Scalar> u;  // n_U entries
};

template <typename Scalar>
RiskScores<Scalar> score_design(const LinearModel<Scalar>& model, const DesignMatrices<Scalar>& design) {
  return {scores(model, design.x_s), scores(model, design.x_d), scores(model, design.x_u)};
}

namespace detail {

inline void require(bool ok, std::string_view what) {
  if (!ok) throw Error(ErrorKind::kEmptyData, std::string(what));
}

template <typename Scalar, typename F>
Scalar mean_of(const Vector<Scalar>& z, F&& f) {
  Scalar sum = 0;
  for (Index i = 0; i < z.size(); ++i) sum += f(z[i]);
  return sum / Scalar(z.size());
}

}  // namespace detail

/// (pi_S / 2n_S) sum L~(f(x_S)) + (1 / n_U) sum L(f(x_U), -1)
template <typename Scalar>
Scalar risk_su(const RiskScores<Scalar>& z, const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss) {
  detail::require(z.s.size() > 0, "SU risk needs at least one similar pair");
  detail::require(z.u.size() > 0, "SU risk needs at least one unlabeled point");
  return priors.pi_s * detail::mean_of(z.s, [&](Scalar v) { return corrected_loss_tilde(loss, priors, v); }) +
         detail::mean_of(z.u, [&](Scalar v) { return corrected_loss(loss, priors, v, Label::kNegative); });
}

/// -(pi_D / 2n_D) sum L~(f(x_D)) + (1 / n_U) sum L(f(x_U), +1)
template <typename Scalar>
Scalar risk_du(const RiskScores<Scalar>& z, const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss) {
  detail::require(z.d.size() > 0, "DU risk needs at least one dissimilar pair");
  detail::require(z.u.size() > 0, "DU risk needs at least one unlabeled point");
  return -priors.pi_d * detail::mean_of(z.d, [&](Scalar v) { return corrected_loss_tilde(loss, priors, v); }) +
         detail::mean_of(z.u, [&](Scalar v) { return corrected_loss(loss, priors, v, Label::kPositive); });
}

/// (pi_S / 2n_S) sum L(f(x_S), +1) + (pi_D / 2n_D) sum L(f(x_D), -1)
template <typename Scalar>
Scalar risk_sd(const RiskScores<Scalar>& z, const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss) {
  detail::require(z.s.size() > 0, "SD risk needs at least one similar pair");
  detail::require(z.d.size() > 0, "SD risk needs at least one dissimilar pair");
  return priors.pi_s * detail::mean_of(z.s, [&](Scalar v) { return corrected_loss(loss, priors, v, Label::kPositive); }) +
         priors.pi_d * detail::mean_of(z.d, [&](Scalar v) { return corrected_loss(loss, priors, v, Label::kNegative); });
}

/// Components with zero weight are skipped, so their data may be empty.
template <typename Scalar>
Scalar risk_sdu(const RiskScores<Scalar>& z, const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss,
                const GammaWeights<Scalar>& gamma) {
  Scalar total = 0;
  if (gamma.g1 != Scalar(0)) total += gamma.g1 * risk_su(z, priors, loss);
  if (gamma.g2 != Scalar(0)) total += gamma.g2 * risk_du(z, priors, loss);
  if (gamma.g3 != Scalar(0)) total += gamma.g3 * risk_sd(z, priors, loss);
  return total;
}

namespace detail {

template <typename Scalar>
RiskScores<Scalar> score_data(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
                              const PairSet<Scalar>& pairs, const UnlabeledSet<Scalar>& unlabeled) {
  return score_design(model, build_design_matrices(pairs, unlabeled, map));
}

}  // namespace detail

/// Dissimilar pairs are ignored.
template <typename Scalar>
Scalar empirical_risk_su(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map, const PairSet<Scalar>& pairs,
                         const UnlabeledSet<Scalar>& unlabeled, const ClassPriors<Scalar>& priors,
                         const MarginLoss<Scalar>& loss) {
  return risk_su(detail::score_data(model, map, pairs, unlabeled), priors, loss);
}

/// Similar pairs are ignored.
template <typename Scalar>
Scalar empirical_risk_du(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map, const PairSet<Scalar>& pairs,
                         const UnlabeledSet<Scalar>& unlabeled, const ClassPriors<Scalar>& priors,
                         const MarginLoss<Scalar>& loss) {
  return risk_du(detail::score_data(model, map, pairs, unlabeled), priors, loss);
}

template <typename Scalar>
Scalar empirical_risk_sd(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map, const PairSet<Scalar>& pairs,
                         const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss) {
  return risk_sd(detail::score_data(model, map, pairs, UnlabeledSet<Scalar>{}), priors, loss);
}

template <typename Scalar>
Scalar empirical_risk_sdu(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
                          const PairSet<Scalar>& pairs, const UnlabeledSet<Scalar>& unlabeled,
                          const ClassPriors<Scalar>& priors, const MarginLoss<Scalar>& loss,
                          const GammaWeights<Scalar>& gamma) {
  return risk_sdu(detail::score_data(model, map, pairs, unlabeled), priors, loss, gamma);
}

/// Zero-one SD risk on held-out pairs; the model-selection criterion.
template <typename Scalar>
Scalar validation_risk_sd_zero_one(const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
                                   const PairSet<Scalar>& pairs, const ClassPriors<Scalar>& priors) {
  return empirical_risk_sd(model, map, pairs, priors, MarginLoss<Scalar>::make(LossKind::kZeroOne));
}

/// Class-conditional distributions on a finite support (one point per row).
template <typename Scalar>
struct DiscreteDistribution {
  Matrix<Scalar> support;
  Vector<Scalar> p_plus;
  Vector<Scalar> p_minus;
  ClassPriors<Scalar> priors;

  void validate() const {
    const Index n = support.rows();
    if (p_plus.size() != n || p_minus.size() != n)
      throw Error(ErrorKind::kDimensionMismatch, "probability vectors must match the support size");
    for (const Vector<Scalar>* p : {&p_plus, &p_minus}) {
      if ((p->array() < Scalar(0)).any()) throw Error(ErrorKind::kOutOfRange, "negative probability");
      if (std::abs(p->sum() - Scalar(1)) > Scalar(1e-12))
        throw Error(ErrorKind::kOutOfRange, "probabilities must sum to one");
    }
  }

  /// p~_S(x) = (pi_+^2 p_+ + pi_-^2 p_-) / pi_S
  Vector<Scalar> pointwise_similar() const {
    return (priors.pi_plus * priors.pi_plus * p_plus + priors.pi_minus * priors.pi_minus * p_minus) / priors.pi_s;
  }

  /// p~_D(x) = (p_+ + p_-) / 2
  Vector<Scalar> pointwise_dissimilar() const { return Scalar(0.5) * (p_plus + p_minus); }

  /// p_U(x) = pi_+ p_+ + pi_- p_-
  Vector<Scalar> marginal() const { return priors.pi_plus * p_plus + priors.pi_minus * p_minus; }
};

/// R(f) = E[l(f(X), Y)] by enumeration over the support.
template <typename Scalar>
Scalar population_risk(const DiscreteDistribution<Scalar>& dist, const LinearModel<Scalar>& model,
                       const FeatureMap<Scalar>& map, const MarginLoss<Scalar>& loss) {
  dist.validate();
  const Vector<Scalar> z = scores(model, map.apply_rows(dist.support));
  Scalar risk = 0;
  for (Index i = 0; i < z.size(); ++i) {
    risk += dist.priors.pi_plus * dist.p_plus[i] * eval_loss(loss, z[i], Label::kPositive) +
            dist.priors.pi_minus * dist.p_minus[i] * eval_loss(loss, z[i], Label::kNegative);
  }
  return risk;
}

template <typename Scalar>
struct PairwiseRisks {
  Scalar su;
  Scalar du;
  Scalar sd;
};

/// Population SU, DU and SD risks through the pointwise similar/dissimilar
/// densities; each equals population_risk for every f.
template <typename Scalar>
PairwiseRisks<Scalar> population_pairwise_risks(const DiscreteDistribution<Scalar>& dist,
                                                const LinearModel<Scalar>& model, const FeatureMap<Scalar>& map,
                                                const MarginLoss<Scalar>& loss) {
  dist.validate();
  const ClassPriors<Scalar>& priors = dist.priors;
  const Vector<Scalar> z = scores(model, map.apply_rows(dist.support));
  const Vector<Scalar> p_s = dist.pointwise_similar();
  const Vector<Scalar> p_d = dist.pointwise_dissimilar();
  const Vector<Scalar> p_u = dist.marginal();

  PairwiseRisks<Scalar> out{0, 0, 0};
  for (Index i = 0; i < z.size(); ++i) {
    const Scalar tilde = corrected_loss_tilde(loss, priors, z[i]);
    const Scalar pos = corrected_loss(loss, priors, z[i], Label::kPositive);
    const Scalar neg = corrected_loss(loss, priors, z[i], Label::kNegative);
    out.su += priors.pi_s * p_s[i] * tilde + p_u[i] * neg;
    out.du += -priors.pi_d * p_d[i] * tilde + p_u[i] * pos;
    out.sd += priors.pi_s * p_s[i] * pos + priors.pi_d * p_d[i] * neg;
  }
  return out;
}

}  // namespace pairwise
