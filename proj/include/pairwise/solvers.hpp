#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pairwise/core.hpp"
#include "pairwise/losses.hpp"
#include "pairwise/qp.hpp"
#include "pairwise/random.hpp"
#include "pairwise/risks.hpp"

namespace pairwise {

enum class OracleStep { kAuto, kConstant, kInverseSqrt };

template <typename Scalar>
struct SolverConfig {
  Scalar lambda = Scalar(1e-4);
  GammaWeights<Scalar> gamma{};
  LossKind loss = LossKind::kSquared;
  Scalar qp_tol = Scalar(1e-8);
  int qp_max_iter = 500;
  // Verification oracle: kAuto picks a constant 1/L step for the squared loss
  // and scale / ((1 + ||grad J(0)||) sqrt(t)) otherwise.
  OracleStep oracle_step = OracleStep::kAuto;
  Scalar oracle_scale = 1;
};

namespace detail {

/// [X, 1]: the bias is the last coordinate of theta = (w, b).
template <typename Scalar>
Matrix<Scalar> with_bias_column(const Matrix<Scalar>& x) {
  Matrix<Scalar> out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

template <typename Scalar>
void require_blocks(const DesignMatrices<Scalar>& design, const GammaWeights<Scalar>& gamma) {
  if (gamma.uses_similar() && design.n_s() == 0)
    throw Error(ErrorKind::kEmptyData, "the selected risk combination needs similar pairs");
  if (gamma.uses_dissimilar() && design.n_d() == 0)
    throw Error(ErrorKind::kEmptyData, "the selected risk combination needs dissimilar pairs");
  if (gamma.uses_unlabeled() && design.n_u() == 0)
    throw Error(ErrorKind::kEmptyData, "the selected risk combination needs unlabeled points");
}

template <typename Scalar>
LinearModel<Scalar> split_theta(const Vector<Scalar>& theta) {
  const Index k = theta.size() - 1;
  return {theta.head(k), theta[k]};
}

template <typename Scalar>
Vector<Scalar> join_theta(const LinearModel<Scalar>& model) {
  Vector<Scalar> theta(model.weights.size() + 1);
  theta << model.weights, model.bias;
  return theta;
}

/// Per-point coefficients shared by every loss with l(z,+1) - l(z,-1) = -z:
///   J(theta) = lambda/2 ||w||^2 + sum_blocks sum_i [ kappa (l(z_i,+1) + l(z_i,-1)) + nu z_i ].
template <typename Scalar>
struct BlockCoefficients {
  Scalar kappa_s = 0, kappa_d = 0, kappa_u = 0;
  Scalar nu_s = 0, nu_d = 0, nu_u = 0;
};

template <typename Scalar>
BlockCoefficients<Scalar> block_coefficients(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                             const GammaWeights<Scalar>& gamma) {
  BlockCoefficients<Scalar> c;
  const Scalar gap = priors.gap();
  if (design.n_s() > 0) {
    const Scalar w = priors.pi_s / (Scalar(2) * Scalar(design.n_s()));
    c.kappa_s = gamma.g3 * w / Scalar(2);
    c.nu_s = -w * (gamma.g1 + gamma.g3 / Scalar(2)) / gap;
  }
  if (design.n_d() > 0) {
    const Scalar w = priors.pi_d / (Scalar(2) * Scalar(design.n_d()));
    c.kappa_d = gamma.g3 * w / Scalar(2);
    c.nu_d = w * (gamma.g2 + gamma.g3 / Scalar(2)) / gap;
  }
  if (design.n_u() > 0) {
    const Scalar w = Scalar(1) / Scalar(design.n_u());
    c.kappa_u = (gamma.g1 + gamma.g2) * w / Scalar(2);
    c.nu_u = (gamma.g1 - gamma.g2) * w / (Scalar(2) * gap);
  }
  return c;
}

}  // namespace detail

/// J(w) = 1/4 theta^T A theta + c^T theta + constant over theta = (w, b).
template <typename Scalar>
struct SquaredSystem {
  Matrix<Scalar> a;
  Vector<Scalar> c;
  Scalar constant = 0;
};

template <typename Scalar>
SquaredSystem<Scalar> build_squared_system(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                           const GammaWeights<Scalar>& gamma, Scalar lambda) {
  detail::require_blocks(design, gamma);
  const Index k = design.features();
  const Index dim = k + 1;
  const Scalar gap = priors.gap();

  SquaredSystem<Scalar> sys;
  sys.a = Matrix<Scalar>::Zero(dim, dim);
  sys.c = Vector<Scalar>::Zero(dim);

  if (design.n_s() > 0 && (gamma.g1 != Scalar(0) || gamma.g3 != Scalar(0))) {
    const Matrix<Scalar> xs = detail::with_bias_column(design.x_s);
    const Scalar w = priors.pi_s / (Scalar(2) * Scalar(design.n_s()));
    if (gamma.g3 != Scalar(0)) sys.a.noalias() += gamma.g3 * w * xs.transpose() * xs;
    sys.c -= (w * (gamma.g1 + gamma.g3 / Scalar(2)) / gap) * xs.colwise().sum().transpose();
    sys.constant += gamma.g3 * priors.pi_s / Scalar(4);
  }
  if (design.n_d() > 0 && (gamma.g2 != Scalar(0) || gamma.g3 != Scalar(0))) {
    const Matrix<Scalar> xd = detail::with_bias_column(design.x_d);
    const Scalar w = priors.pi_d / (Scalar(2) * Scalar(design.n_d()));
    if (gamma.g3 != Scalar(0)) sys.a.noalias() += gamma.g3 * w * xd.transpose() * xd;
    sys.c += (w * (gamma.g2 + gamma.g3 / Scalar(2)) / gap) * xd.colwise().sum().transpose();
    sys.constant += gamma.g3 * priors.pi_d / Scalar(4);
  }
  if (design.n_u() > 0 && gamma.uses_unlabeled()) {
    const Matrix<Scalar> xu = detail::with_bias_column(design.x_u);
    const Scalar w = Scalar(1) / Scalar(design.n_u());
    sys.a.noalias() += (gamma.g1 + gamma.g2) * w * xu.transpose() * xu;
    sys.c += ((gamma.g1 - gamma.g2) * w / (Scalar(2) * gap)) * xu.colwise().sum().transpose();
    sys.constant += (gamma.g1 + gamma.g2) / Scalar(4);
  }
  // The bias (last coordinate) is not penalized.
  sys.a.diagonal().head(k).array() += Scalar(2) * lambda;
  return sys;
}

/// Closed-form minimizer theta* = -2 A^{-1} c.
template <typename Scalar>
LinearModel<Scalar> solve_squared(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                  const GammaWeights<Scalar>& gamma, Scalar lambda) {
  SquaredSystem<Scalar> sys = build_squared_system(design, priors, gamma, lambda);
  const Index bias = sys.a.rows() - 1;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::LDLT<Matrix<Scalar>> ldlt(sys.a);
    const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > Scalar(1e-12);
    if (ok) return detail::split_theta<Scalar>(Scalar(-2) * ldlt.solve(sys.c));
    sys.a(bias, bias) += Scalar(1e-9);
  }
  throw Error(ErrorKind::kSingularSystem, "squared-loss normal matrix is numerically singular");
}

/// J(w) = R_SDU(w) + lambda/2 ||w||^2, the bias excluded from the penalty.
template <typename Scalar>
Scalar objective_value(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                       const GammaWeights<Scalar>& gamma, Scalar lambda, const MarginLoss<Scalar>& loss,
                       const LinearModel<Scalar>& model) {
  return risk_sdu(score_design(model, design), priors, loss, gamma) +
         lambda / Scalar(2) * model.weights.squaredNorm();
}

/// Column ranges of the double-hinge QP variables.
struct SlackBlock {
  Index xi_offset = 0;   // xi (upper envelope of l(z, +1))
  Index eta_offset = 0;  // eta (upper envelope of l(z, -1))
  Index points = 0;
  bool present = false;
};

template <typename Scalar>
struct DoubleHingeQp {
  QpProblem<Scalar> problem;
  Vector<Scalar> start;  // strictly feasible
  Index weights = 0;     // k; the bias sits at column k
  SlackBlock similar, dissimilar, unlabeled;
};

/// Double-hinge objective as a QP over (w, b, xi_S, eta_S, xi_D, eta_D, xi_U, eta_U).
/// Each slack pair carries weight kappa on both envelopes and the remaining
/// per-point term is linear in the score, so every slack coefficient is >= 0.
/// Blocks whose slack weight is zero are left out.
template <typename Scalar>
DoubleHingeQp<Scalar> build_double_hinge_qp(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                            const GammaWeights<Scalar>& gamma, Scalar lambda) {
  detail::require_blocks(design, gamma);
  const Index k = design.features();
  const auto coef = detail::block_coefficients(design, priors, gamma);

  DoubleHingeQp<Scalar> out;
  out.weights = k;
  Index n = k + 1;
  auto place = [&n](SlackBlock& block, Index points, Scalar kappa) {
    block.points = points;
    block.present = points > 0 && kappa > Scalar(0);
    if (!block.present) return;
    block.xi_offset = n;
    block.eta_offset = n + points;
    n += 2 * points;
  };
  place(out.similar, design.n_s() * 2, coef.kappa_s);
  place(out.dissimilar, design.n_d() * 2, coef.kappa_d);
  place(out.unlabeled, design.n_u(), coef.kappa_u);

  QpProblem<Scalar>& qp = out.problem;
  qp.q = Vector<Scalar>::Zero(n);
  {
    std::vector<Eigen::Triplet<Scalar>> trips;
    for (Index j = 0; j < k; ++j) trips.emplace_back(j, j, lambda);
    qp.p.resize(n, n);
    qp.p.setFromTriplets(trips.begin(), trips.end());
  }

  Index m = 0;
  for (const SlackBlock* b : {&out.similar, &out.dissimilar, &out.unlabeled})
    if (b->present) m += 6 * b->points;
  qp.h = Vector<Scalar>::Zero(m);
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(k + 2));

  Index row = 0;
  auto add_block = [&](const Matrix<Scalar>& x, const SlackBlock& block, Scalar kappa, Scalar nu) {
    if (x.rows() == 0) return;
    qp.q.head(k) += nu * x.colwise().sum().transpose();
    qp.q[k] += nu * Scalar(x.rows());
    if (!block.present) return;
    qp.q.segment(block.xi_offset, block.points).setConstant(kappa);
    qp.q.segment(block.eta_offset, block.points).setConstant(kappa);
    // Rows: coefficient `s` times the score minus the slack, bounded by `rhs`.
    auto emit = [&](Index i, Index slack_col, Scalar s, Scalar rhs) {
      if (s != Scalar(0)) {
        for (Index j = 0; j < k; ++j)
          if (x(i, j) != Scalar(0)) trips.emplace_back(row, j, s * x(i, j));
        trips.emplace_back(row, k, s);
      }
      trips.emplace_back(row, slack_col, Scalar(-1));
      qp.h[row] = rhs;
      ++row;
    };
    for (Index i = 0; i < block.points; ++i) {
      const Index xi = block.xi_offset + i;
      const Index eta = block.eta_offset + i;
      emit(i, xi, Scalar(0), Scalar(0));       // xi >= 0
      emit(i, xi, Scalar(-0.5), Scalar(-0.5));  // xi >= 1/2 - z/2
      emit(i, xi, Scalar(-1), Scalar(0));      // xi >= -z
      emit(i, eta, Scalar(0), Scalar(0));      // eta >= 0
      emit(i, eta, Scalar(0.5), Scalar(-0.5));  // eta >= 1/2 + z/2
      emit(i, eta, Scalar(1), Scalar(0));      // eta >= z
    }
  };
  add_block(design.x_s, out.similar, coef.kappa_s, coef.nu_s);
  add_block(design.x_d, out.dissimilar, coef.kappa_d, coef.nu_d);
  add_block(design.x_u, out.unlabeled, coef.kappa_u, coef.nu_u);

  qp.g.resize(m, n);
  qp.g.setFromTriplets(trips.begin(), trips.end());
  qp.coupled = k + 1;

  out.start = Vector<Scalar>::Zero(n);
  out.start.tail(n - k - 1).setConstant(Scalar(0.6));
  return out;
}

template <typename Scalar>
struct DoubleHingeSolution {
  LinearModel<Scalar> model;
  QpSolution<Scalar> qp;
};

template <typename Scalar>
DoubleHingeSolution<Scalar> solve_double_hinge_detailed(const DesignMatrices<Scalar>& design,
                                                        const ClassPriors<Scalar>& priors,
                                                        const GammaWeights<Scalar>& gamma, Scalar lambda,
                                                        const SolverConfig<Scalar>& config) {
  const DoubleHingeQp<Scalar> built = build_double_hinge_qp(design, priors, gamma, lambda);
  QpOptions<Scalar> options;
  options.tol = config.qp_tol;
  options.max_iter = config.qp_max_iter;
  QpSolution<Scalar> sol = solve_qp(built.problem, options, std::optional<Vector<Scalar>>(built.start));
  if (sol.status != QpStatus::kOptimal)
    throw Error(ErrorKind::kMaxIterations, "double-hinge QP did not converge in " +
                                               std::to_string(config.qp_max_iter) + " Newton steps");
  LinearModel<Scalar> model{sol.x.head(built.weights), sol.x[built.weights]};
  return {std::move(model), std::move(sol)};
}

template <typename Scalar>
LinearModel<Scalar> solve_double_hinge(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                       const GammaWeights<Scalar>& gamma, Scalar lambda,
                                       const SolverConfig<Scalar>& config) {
  return solve_double_hinge_detailed(design, priors, gamma, lambda, config).model;
}

/// Dispatches on the loss: closed form for squared, QP for double hinge.
template <typename Scalar>
LinearModel<Scalar> fit_linear(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                               const SolverConfig<Scalar>& config) {
  switch (config.loss) {
    case LossKind::kSquared: return solve_squared(design, priors, config.gamma, config.lambda);
    case LossKind::kDoubleHinge: return solve_double_hinge(design, priors, config.gamma, config.lambda, config);
    default:
      throw Error(ErrorKind::kConfigError,
                  "no solver for loss '" + std::string(to_string(config.loss)) + "' (it violates the convexity condition)");
  }
}

namespace detail {

/// Subgradient of J computed pointwise from the corrected-loss derivatives.
/// At kinks the left or right derivative is picked by `rng`.
template <typename Scalar>
Vector<Scalar> objective_subgradient(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                     const GammaWeights<Scalar>& gamma, Scalar lambda, const MarginLoss<Scalar>& loss,
                                     const Vector<Scalar>& theta, Rng& rng) {
  const Index k = theta.size() - 1;
  const LinearModel<Scalar> model = split_theta(theta);
  const RiskScores<Scalar> z = score_design(model, design);

  auto dl = [&](Scalar score, Label t) {
    const Scalar s = sign_of<Scalar>(t);
    const Scalar m = s * score;
    const Scalar left = margin_subgradient(loss.kind, m);
    const Scalar right = margin_right_derivative(loss.kind, m);
    const Scalar d = left == right ? left : (rng.bernoulli(0.5) ? left : right);
    return s * d;
  };
  auto dcorr = [&](Scalar score, Label t) {
    return (priors.pi_plus * dl(score, t) - priors.pi_minus * dl(score, flip(t))) / priors.gap();
  };
  auto dtilde = [&](Scalar score) { return (dl(score, Label::kPositive) - dl(score, Label::kNegative)) / priors.gap(); };

  Vector<Scalar> gs = Vector<Scalar>::Zero(z.s.size());
  Vector<Scalar> gd = Vector<Scalar>::Zero(z.d.size());
  Vector<Scalar> gu = Vector<Scalar>::Zero(z.u.size());
  const Scalar ws = z.s.size() > 0 ? priors.pi_s / Scalar(z.s.size()) : Scalar(0);
  const Scalar wd = z.d.size() > 0 ? priors.pi_d / Scalar(z.d.size()) : Scalar(0);
  const Scalar wu = z.u.size() > 0 ? Scalar(1) / Scalar(z.u.size()) : Scalar(0);
  for (Index i = 0; i < z.s.size(); ++i) {
    if (gamma.g1 != Scalar(0)) gs[i] += gamma.g1 * ws * dtilde(z.s[i]);
    if (gamma.g3 != Scalar(0)) gs[i] += gamma.g3 * ws * dcorr(z.s[i], Label::kPositive);
  }
  for (Index i = 0; i < z.d.size(); ++i) {
    if (gamma.g2 != Scalar(0)) gd[i] -= gamma.g2 * wd * dtilde(z.d[i]);
    if (gamma.g3 != Scalar(0)) gd[i] += gamma.g3 * wd * dcorr(z.d[i], Label::kNegative);
  }
  for (Index i = 0; i < z.u.size(); ++i) {
    if (gamma.g1 != Scalar(0)) gu[i] += gamma.g1 * wu * dcorr(z.u[i], Label::kNegative);
    if (gamma.g2 != Scalar(0)) gu[i] += gamma.g2 * wu * dcorr(z.u[i], Label::kPositive);
  }

  Vector<Scalar> grad = Vector<Scalar>::Zero(k + 1);
  auto accumulate = [&](const Matrix<Scalar>& x, const Vector<Scalar>& g) {
    if (x.rows() == 0) return;
    grad.head(k).noalias() += x.transpose() * g;
    grad[k] += g.sum();
  };
  accumulate(design.x_s, gs);
  accumulate(design.x_d, gd);
  accumulate(design.x_u, gu);
  grad.head(k) += lambda * theta.head(k);
  return grad;
}

}  // namespace detail

template <typename Scalar>
struct OracleResult {
  LinearModel<Scalar> model;  // best iterate
  Scalar objective = 0;
  /// Best objective after each recorded step (every `steps / 100` steps).
  std::vector<Scalar> best_trace;
};

/// Independent verification path: plain (sub)gradient descent from theta = 0,
/// evaluating J through the risk module and keeping the best iterate.
template <typename Scalar>
OracleResult<Scalar> solve_subgradient_oracle(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                                              const GammaWeights<Scalar>& gamma, Scalar lambda,
                                              const MarginLoss<Scalar>& loss, int steps, std::uint64_t seed,
                                              OracleStep schedule = OracleStep::kAuto, Scalar scale = 1) {
  detail::require_blocks(design, gamma);
  const Index dim = design.features() + 1;
  Rng rng(seed);
  auto objective = [&](const Vector<Scalar>& theta) {
    return objective_value(design, priors, gamma, lambda, loss, detail::split_theta(theta));
  };
  auto gradient = [&](const Vector<Scalar>& theta) {
    return detail::objective_subgradient(design, priors, gamma, lambda, loss, theta, rng);
  };

  Vector<Scalar> theta = Vector<Scalar>::Zero(dim);
  const Vector<Scalar> g0 = gradient(theta);
  if (schedule == OracleStep::kAuto)
    schedule = loss.kind == LossKind::kSquared ? OracleStep::kConstant : OracleStep::kInverseSqrt;

  Scalar base_step = scale / (Scalar(1) + g0.norm());
  if (schedule == OracleStep::kConstant) {
    // Largest curvature by power iteration on gradient differences (exact for quadratics).
    Vector<Scalar> v = Vector<Scalar>::Ones(dim).normalized();
    Scalar curvature = 1;
    for (int it = 0; it < 100; ++it) {
      const Vector<Scalar> hv = gradient(v) - g0;
      curvature = hv.norm();
      if (!(curvature > Scalar(0))) break;
      v = hv / curvature;
    }
    base_step = scale / std::max(curvature, std::numeric_limits<Scalar>::min());
  }

  Vector<Scalar> best = theta;
  Scalar best_value = objective(theta);
  OracleResult<Scalar> result;
  const int record_every = std::max(1, steps / 100);
  Vector<Scalar> g = g0;
  for (int t = 1; t <= steps; ++t) {
    const Scalar step = schedule == OracleStep::kConstant ? base_step : base_step / std::sqrt(Scalar(t));
    theta -= step * g;
    const Scalar value = objective(theta);
    if (value < best_value) {
      best_value = value;
      best = theta;
    }
    if (t % record_every == 0) result.best_trace.push_back(best_value);
    if (t < steps) g = gradient(theta);
  }
  result.model = detail::split_theta(best);
  result.objective = best_value;
  return result;
}

/// Checks J(s w1 + (1-s) w2) <= s J(w1) + (1-s) J(w2) + 1e-9 on random chords.
template <typename Scalar>
bool check_convexity(const std::function<Scalar(const Vector<Scalar>&)>& f, Index dim, int probes,
                     std::uint64_t seed, Scalar radius = 3) {
  Rng rng(seed);
  for (int p = 0; p < probes; ++p) {
    Vector<Scalar> a(dim), b(dim);
    for (Index i = 0; i < dim; ++i) a[i] = radius * Scalar(rng.normal());
    for (Index i = 0; i < dim; ++i) b[i] = radius * Scalar(rng.normal());
    const Scalar s = Scalar(rng.uniform());
    if (f(s * a + (Scalar(1) - s) * b) > s * f(a) + (Scalar(1) - s) * f(b) + Scalar(1e-9)) return false;
  }
  return true;
}

template <typename Scalar>
bool check_convexity(const DesignMatrices<Scalar>& design, const ClassPriors<Scalar>& priors,
                     const GammaWeights<Scalar>& gamma, Scalar lambda, const MarginLoss<Scalar>& loss, int probes,
                     std::uint64_t seed) {
  const std::function<Scalar(const Vector<Scalar>&)> objective = [&](const Vector<Scalar>& theta) {
    return objective_value(design, priors, gamma, lambda, loss, detail::split_theta(theta));
  };
  return check_convexity(objective, design.features() + 1, probes, seed);
}

}  // namespace pairwise
