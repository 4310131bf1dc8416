#pragma once

#include <cstdint>

#include "pairwise/core.hpp"
#include "pairwise/losses.hpp"
#include "pairwise/risks.hpp"

namespace pairwise {

/// pi_+ from the similar/dissimilar counts. The branch (pi_+ above or below
/// 1/2) is not identifiable from pairs and is chosen by `majority_positive`.
double estimate_prior(std::int64_t n_s, std::int64_t n_d, bool majority_positive = true);

struct BoundConstants {
  double c_f = 1;    // Rademacher constant C_F
  double rho = 1;    // Lipschitz constant of the loss
  double c_ell = 1;  // sup_t l(C_b, t)
  double delta = 0.05;
  double c_b = 1;

  void validate() const;
};

/// rho and C_ell of the squared and double-hinge losses on |f| <= C_b.
struct LossConstants {
  double rho;
  double c_ell;
};
LossConstants loss_constants(LossKind kind, double c_b);

struct BoundReport {
  double v_su = 0;
  double v_du = 0;
  double v_sd = 0;
  double c_factor = 0;
  bool sd_le_su = false;
  bool du_le_su = false;
};

/// (4 rho C_F + sqrt(2 C_ell^2 log(log_numerator / delta))) / |pi_+ - pi_-|;
/// log_numerator is 8 for the SU/DU/SD bounds and 12 for the SDU bound.
double bound_factor(const BoundConstants& consts, const ClassPriors<double>& priors, int log_numerator);

BoundReport bounds_su_du_sd(const BoundConstants& consts, const ClassPriors<double>& priors, std::int64_t n_s,
                            std::int64_t n_d, std::int64_t n_u);

/// Same bounds for a given factor C, e.g. when comparing at a shared C.
BoundReport bounds_from_factor(double c_factor, const ClassPriors<double>& priors, std::int64_t n_s, std::int64_t n_d,
                               std::int64_t n_u);

double bound_sdu(const BoundConstants& consts, const ClassPriors<double>& priors, const GammaWeights<double>& gamma,
                 std::int64_t n_s, std::int64_t n_d, std::int64_t n_u);

double bound_sdu_from_factor(double c_factor, const ClassPriors<double>& priors, const GammaWeights<double>& gamma,
                             std::int64_t n_s, std::int64_t n_d, std::int64_t n_u);

/// Upper bound on P(pi_S / sqrt(2 n_S) <= pi_D / sqrt(2 n_D)) with n_D ~ Binomial(n_sd, pi_D).
double chernoff_violation_bound(std::int64_t n_sd, const ClassPriors<double>& priors);

struct CorollaryCheck {
  double violation_rate;
  double bound;
  /// bound + 3 sqrt(bound (1 - bound) / trials)
  double tolerance;
  bool holds() const { return violation_rate <= tolerance; }
};

CorollaryCheck validate_corollary_monte_carlo(std::int64_t n_sd, const ClassPriors<double>& priors,
                                              std::int64_t trials, std::uint64_t seed);

}  // namespace pairwise
