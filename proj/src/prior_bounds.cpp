#include "pairwise/prior_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairwise/random.hpp"

namespace pairwise {

double estimate_prior(std::int64_t n_s, std::int64_t n_d, bool majority_positive) {
  if (n_s < 0 || n_d < 0) throw Error(ErrorKind::kOutOfRange, "pair counts must be nonnegative");
  if (n_s + n_d == 0) throw Error(ErrorKind::kEmptyData, "prior estimation needs at least one pair");
  const double pi_s = static_cast<double>(n_s) / static_cast<double>(n_s + n_d);
  // 2 pi_S - 1 = (2 pi_+ - 1)^2; a negative sample value is clamped.
  const double root = std::sqrt(std::max(0.0, 2.0 * pi_s - 1.0));
  const double pi_plus = majority_positive ? (1.0 + root) / 2.0 : (1.0 - root) / 2.0;
  if (std::abs(pi_plus - 0.5) <= kPriorEpsilon)
    throw Error(ErrorKind::kDegeneratePrior, "estimated prior is within 1e-6 of 0.5 (n_s=" + std::to_string(n_s) +
                                                 ", n_d=" + std::to_string(n_d) + ")");
  return pi_plus;
}

void BoundConstants::validate() const {
  if (!(c_f >= 0 && rho > 0 && c_ell > 0 && c_b > 0))
    throw Error(ErrorKind::kOutOfRange, "bound constants must be positive");
  if (!(delta > 0 && delta < 1)) throw Error(ErrorKind::kOutOfRange, "delta must lie in (0, 1)");
}

LossConstants loss_constants(LossKind kind, double c_b) {
  switch (kind) {
    case LossKind::kSquared: return {(c_b + 1.0) / 2.0, 0.25 * (c_b + 1.0) * (c_b + 1.0)};
    case LossKind::kDoubleHinge: return {1.0, std::max(c_b, 0.5 + 0.5 * c_b)};
    case LossKind::kHinge: return {1.0, 1.0 + c_b};
    case LossKind::kZeroOne: break;
  }
  throw Error(ErrorKind::kConfigError, "the zero-one loss is not Lipschitz");
}

double bound_factor(const BoundConstants& consts, const ClassPriors<double>& priors, int log_numerator) {
  consts.validate();
  if (log_numerator != 8 && log_numerator != 12)
    throw Error(ErrorKind::kOutOfRange, "log numerator must be 8 or 12");
  const double confidence = std::sqrt(2.0 * consts.c_ell * consts.c_ell * std::log(log_numerator / consts.delta));
  return (4.0 * consts.rho * consts.c_f + confidence) / std::abs(priors.gap());
}

BoundReport bounds_su_du_sd(const BoundConstants& consts, const ClassPriors<double>& priors, std::int64_t n_s,
                            std::int64_t n_d, std::int64_t n_u) {
  return bounds_from_factor(bound_factor(consts, priors, 8), priors, n_s, n_d, n_u);
}

BoundReport bounds_from_factor(double c_factor, const ClassPriors<double>& priors, std::int64_t n_s, std::int64_t n_d,
                               std::int64_t n_u) {
  if (n_s < 1 || n_d < 1 || n_u < 1) throw Error(ErrorKind::kEmptyData, "bounds need n_s, n_d, n_u >= 1");
  if (!(c_factor > 0)) throw Error(ErrorKind::kOutOfRange, "bound factor must be positive");
  BoundReport r;
  r.c_factor = c_factor;
  const double s_term = priors.pi_s / std::sqrt(2.0 * static_cast<double>(n_s));
  const double d_term = priors.pi_d / std::sqrt(2.0 * static_cast<double>(n_d));
  const double u_term = 1.0 / std::sqrt(static_cast<double>(n_u));
  r.v_su = r.c_factor * (2.0 * s_term + u_term);
  r.v_du = r.c_factor * (2.0 * d_term + u_term);
  r.v_sd = r.c_factor * (s_term + d_term);
  r.sd_le_su = r.v_sd <= r.v_su;
  r.du_le_su = r.v_du <= r.v_su;
  return r;
}

double bound_sdu(const BoundConstants& consts, const ClassPriors<double>& priors, const GammaWeights<double>& gamma,
                 std::int64_t n_s, std::int64_t n_d, std::int64_t n_u) {
  return bound_sdu_from_factor(bound_factor(consts, priors, 12), priors, gamma, n_s, n_d, n_u);
}

double bound_sdu_from_factor(double c_factor, const ClassPriors<double>& priors, const GammaWeights<double>& gamma,
                             std::int64_t n_s, std::int64_t n_d, std::int64_t n_u) {
  if (!(c_factor > 0)) throw Error(ErrorKind::kOutOfRange, "bound factor must be positive");
  const double s_coef = 2.0 * gamma.g1 + gamma.g3;
  const double d_coef = 2.0 * gamma.g2 + gamma.g3;
  const double u_coef = std::abs(gamma.g1 * priors.pi_minus - gamma.g2 * priors.pi_plus) +
                        std::abs(gamma.g1 * priors.pi_plus - gamma.g2 * priors.pi_minus);
  auto term = [](double coef, double numerator, std::int64_t n, const char* what) {
    if (coef == 0.0) return 0.0;
    if (n < 1) throw Error(ErrorKind::kEmptyData, std::string("SDU bound needs ") + what);
    return coef * numerator / std::sqrt(static_cast<double>(n));
  };
  return c_factor * (term(s_coef, priors.pi_s / std::sqrt(2.0), n_s, "n_s >= 1") +
              term(d_coef, priors.pi_d / std::sqrt(2.0), n_d, "n_d >= 1") + term(u_coef, 1.0, n_u, "n_u >= 1"));
}

double chernoff_violation_bound(std::int64_t n_sd, const ClassPriors<double>& priors) {
  if (n_sd < 0) throw Error(ErrorKind::kOutOfRange, "n_sd must be nonnegative");
  const double p = priors.pi_d;
  const double rel = 1.0 - p / (priors.pi_s * priors.pi_s + p * p);
  return std::exp(-static_cast<double>(n_sd) * p / (2.0 * (1.0 - p)) * rel * rel);
}

CorollaryCheck validate_corollary_monte_carlo(std::int64_t n_sd, const ClassPriors<double>& priors,
                                              std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::kOutOfRange, "trials must be >= 1");
  if (n_sd < 1) throw Error(ErrorKind::kOutOfRange, "n_sd must be >= 1");
  const double threshold = static_cast<double>(n_sd) * priors.pi_d * priors.pi_d /
                           (priors.pi_s * priors.pi_s + priors.pi_d * priors.pi_d);
  Rng rng(seed);
  std::int64_t violations = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto n_d = static_cast<double>(rng.binomial(static_cast<std::uint64_t>(n_sd), priors.pi_d));
    if (n_d <= threshold) ++violations;
  }
  CorollaryCheck out;
  out.violation_rate = static_cast<double>(violations) / static_cast<double>(trials);
  out.bound = chernoff_violation_bound(n_sd, priors);
  out.tolerance = out.bound + 3.0 * std::sqrt(out.bound * (1.0 - out.bound) / static_cast<double>(trials));
  return out;
}

}  // namespace pairwise
