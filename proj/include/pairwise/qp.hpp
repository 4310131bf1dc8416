#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pairwise/core.hpp"

namespace pairwise {

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

/// minimize 1/2 x^T P x + q^T x  subject to  G x <= h.
///
/// When `coupled` >= 0 the variables past the first `coupled` ones are
/// separable: P is diagonal on them and each row of G touches at most one of
/// them. Newton systems are then solved by eliminating those variables, at
/// O(m coupled^2) per step instead of a sparse factorization.
template <typename Scalar>
struct QpProblem {
  SparseMatrix<Scalar> p;
  Vector<Scalar> q;
  SparseMatrix<Scalar> g;
  Vector<Scalar> h;
  Index coupled = -1;

  Index variables() const { return q.size(); }
  Index constraints() const { return h.size(); }

  void validate() const {
    const Index n = q.size();
    if (p.rows() != n || p.cols() != n) throw Error(ErrorKind::kDimensionMismatch, "P must be n x n");
    if (g.cols() != n || g.rows() != h.size()) throw Error(ErrorKind::kDimensionMismatch, "G must be m x n");
    const SparseMatrix<Scalar> asym = SparseMatrix<Scalar>(p.transpose()) - p;
    if (asym.size() > 0 && asym.coeffs().size() > 0 && asym.coeffs().cwiseAbs().maxCoeff() > Scalar(1e-10))
      throw Error(ErrorKind::kDimensionMismatch, "P must be symmetric");
    if (coupled < 0) return;
    if (coupled > n) throw Error(ErrorKind::kDimensionMismatch, "coupled block exceeds the variable count");
    for (Index k = 0; k < p.outerSize(); ++k)
      for (typename SparseMatrix<Scalar>::InnerIterator it(p, k); it; ++it)
        if (it.value() != Scalar(0) && it.row() != it.col() && (it.row() >= coupled || it.col() >= coupled))
          throw Error(ErrorKind::kDimensionMismatch, "P couples a separable variable");
    std::vector<int> count(static_cast<std::size_t>(g.rows()), 0);
    for (Index k = 0; k < g.outerSize(); ++k)
      for (typename SparseMatrix<Scalar>::InnerIterator it(g, k); it; ++it)
        if (it.col() >= coupled && it.value() != Scalar(0) && ++count[static_cast<std::size_t>(it.row())] > 1)
          throw Error(ErrorKind::kDimensionMismatch, "a constraint row touches two separable variables");
  }

  Scalar objective(const Vector<Scalar>& x) const { return Scalar(0.5) * x.dot(p * x) + q.dot(x); }
};

enum class QpStatus { kOptimal, kMaxIterations };

template <typename Scalar>
struct QpSolution {
  Vector<Scalar> x;
  Vector<Scalar> dual;  // one multiplier per constraint
  Scalar objective = 0;
  Scalar primal_residual = 0;        // || max(Gx - h, 0) ||_inf
  Scalar stationarity_residual = 0;  // || P x + q + G^T dual ||_inf
  Scalar duality_gap = 0;            // sum_i dual_i (h - G x)_i
  int iterations = 0;                // Newton steps, phase one included
  QpStatus status = QpStatus::kOptimal;
};

template <typename Scalar>
struct QpOptions {
  Scalar tol = Scalar(1e-8);
  int max_iter = 500;
  Scalar barrier_growth = 10;
  Scalar initial_barrier = 1;
};

namespace detail {

/// Solves (t P + G^T diag(d) G) step = -grad by sparse LDL^T.
template <typename Scalar>
class SparseNewton {
 public:
  SparseNewton(const SparseMatrix<Scalar>& p, const SparseMatrix<Scalar>& g) : p_(p), g_(g), gt_(g.transpose()) {}

  bool solve(Scalar t, const Vector<Scalar>& d, const Vector<Scalar>& grad, Vector<Scalar>& step) {
    SparseMatrix<Scalar> hess = t * p_ + gt_ * d.asDiagonal() * g_;
    hess.makeCompressed();
    if (!analyzed_) {
      ldlt_.analyzePattern(hess);
      analyzed_ = true;
    }
    ldlt_.factorize(hess);
    if (ldlt_.info() == Eigen::Success) {
      step = -ldlt_.solve(grad);
      if (step.allFinite()) return true;
    }
    for (Index i = 0; i < hess.rows(); ++i) hess.coeffRef(i, i) += Scalar(1e-10) * (Scalar(1) + t);
    ldlt_.compute(hess);
    analyzed_ = false;
    if (ldlt_.info() != Eigen::Success) return false;
    step = -ldlt_.solve(grad);
    return step.allFinite();
  }

 private:
  const SparseMatrix<Scalar>& p_;
  const SparseMatrix<Scalar>& g_;
  SparseMatrix<Scalar> gt_;
  Eigen::SimplicialLDLT<SparseMatrix<Scalar>> ldlt_;
  bool analyzed_ = false;
};

/// The same system with the separable variables eliminated through the Schur
/// complement of their diagonal block.
template <typename Scalar>
class ArrowNewton {
 public:
  ArrowNewton(const SparseMatrix<Scalar>& p, const SparseMatrix<Scalar>& g, Index coupled)
      : n1_(coupled), n_(p.rows()) {
    const Index m = g.rows();
    p11_ = Matrix<Scalar>(p.topLeftCorner(n1_, n1_));
    p22_.resize(n_ - n1_);
    for (Index j = n1_; j < n_; ++j) p22_[j - n1_] = p.coeff(j, j);
    rows_ = Matrix<Scalar>::Zero(m, n1_);
    column_.assign(static_cast<std::size_t>(m), -1);
    coef_ = Vector<Scalar>::Zero(m);
    for (Index k = 0; k < g.outerSize(); ++k)
      for (typename SparseMatrix<Scalar>::InnerIterator it(g, k); it; ++it) {
        if (it.col() < n1_) {
          rows_(it.row(), it.col()) = it.value();
        } else if (it.value() != Scalar(0)) {
          column_[static_cast<std::size_t>(it.row())] = it.col() - n1_;
          coef_[it.row()] = it.value();
        }
      }
  }

  bool solve(Scalar t, const Vector<Scalar>& d, const Vector<Scalar>& grad, Vector<Scalar>& step) {
    const Index n2 = n_ - n1_;
    Matrix<Scalar> schur = t * p11_;
    schur.noalias() += rows_.transpose() * d.asDiagonal() * rows_;
    Vector<Scalar> h22 = t * p22_;
    Matrix<Scalar> h12 = Matrix<Scalar>::Zero(n1_, n2);
    for (Index r = 0; r < d.size(); ++r) {
      const Index j = column_[static_cast<std::size_t>(r)];
      if (j < 0) continue;
      h22[j] += d[r] * coef_[r] * coef_[r];
      h12.col(j) += (d[r] * coef_[r]) * rows_.row(r).transpose();
    }
    if (!(h22.array() > Scalar(0)).all()) return false;
    const Vector<Scalar> inv22 = h22.cwiseInverse();
    const auto g1 = grad.head(n1_);
    const auto g2 = grad.tail(n2);
    schur.noalias() -= h12 * inv22.asDiagonal() * h12.transpose();
    const Vector<Scalar> rhs = -g1 + h12 * inv22.cwiseProduct(g2);
    Eigen::LDLT<Matrix<Scalar>> ldlt(schur);
    Vector<Scalar> x1 = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !x1.allFinite()) {
      schur.diagonal().array() += Scalar(1e-10) * (Scalar(1) + t);
      ldlt.compute(schur);
      x1 = ldlt.solve(rhs);
      if (ldlt.info() != Eigen::Success) return false;
    }
    step.resize(n_);
    step.head(n1_) = x1;
    step.tail(n2) = -inv22.cwiseProduct(g2 + h12.transpose() * x1);
    return step.allFinite();
  }

 private:
  Index n1_, n_;
  Matrix<Scalar> p11_;
  Vector<Scalar> p22_;
  Matrix<Scalar> rows_;  // G restricted to the coupled columns
  std::vector<Index> column_;  // separable column of each row, -1 for none
  Vector<Scalar> coef_;
};

/// Primal log-barrier method: minimize t f(x) - sum log(h - G x) for growing t.
template <typename Scalar, typename Newton>
class BarrierSolver {
 public:
  BarrierSolver(const SparseMatrix<Scalar>& p, const Vector<Scalar>& q, const SparseMatrix<Scalar>& g,
                const Vector<Scalar>& h, const QpOptions<Scalar>& options, Newton& newton)
      : p_(p), q_(q), g_(g), gt_(g.transpose()), h_(h), options_(options), newton_(newton) {}

  struct Outcome {
    Vector<Scalar> x;
    Scalar t;
    int iterations;
    bool converged;
  };

  /// `stop` is checked after every Newton step and ends the solve early when true.
  template <typename Stop>
  Outcome run(Vector<Scalar> x, int budget, Stop&& stop) {
    const Index m = h_.size();
    Scalar t = options_.initial_barrier;
    int iterations = 0;
    while (true) {
      // Centering.
      while (iterations < budget) {
        const Vector<Scalar> slack = h_ - g_ * x;
        const Vector<Scalar> inv = slack.cwiseInverse();
        const Vector<Scalar> grad = t * (p_ * x + q_) + gt_ * inv;
        Vector<Scalar> step;
        if (!newton_.solve(t, inv.cwiseAbs2(), grad, step)) break;
        ++iterations;
        const Scalar decrement = -grad.dot(step);
        // Largest step keeping every slack positive, then backtracking.
        const Vector<Scalar> ds = -(g_ * step);
        Scalar alpha = 1;
        for (Index i = 0; i < m; ++i)
          if (ds[i] < Scalar(0)) alpha = std::min(alpha, Scalar(0.99) * -slack[i] / ds[i]);
        const Scalar f0 = barrier_value(x, slack, t);
        Scalar f1 = f0;
        while (alpha > Scalar(1e-12)) {
          const Vector<Scalar> trial = x + alpha * step;
          const Vector<Scalar> trial_slack = h_ - g_ * trial;
          if ((trial_slack.array() > Scalar(0)).all()) {
            f1 = barrier_value(trial, trial_slack, t);
            if (f1 <= f0 - Scalar(0.01) * alpha * decrement) break;
          }
          alpha *= Scalar(0.5);
        }
        if (alpha > Scalar(1e-12)) x += alpha * step;
        if (stop(x)) return {x, t, iterations, true};
        // Centered, or no progress left at this barrier weight within rounding.
        const Scalar noise = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(f0));
        if (decrement * Scalar(0.5) <= Scalar(1e-10) || alpha <= Scalar(1e-12) || f0 - f1 <= noise) break;
      }
      if (iterations >= budget) return {x, t, iterations, false};
      if (Scalar(m) / t < options_.tol) return {x, t, iterations, true};
      t *= options_.barrier_growth;
    }
  }

  /// One Newton step at barrier weight t, taken only if it stays strictly
  /// feasible, with the multiplier estimate (1/t) S^-1 (1 - S^-1 ds) that makes
  /// P x + q + G^T dual vanish at the new point.
  std::pair<Vector<Scalar>, Vector<Scalar>> polish(const Vector<Scalar>& x, Scalar t) {
    const Vector<Scalar> slack = h_ - g_ * x;
    const Vector<Scalar> inv = slack.cwiseInverse();
    const Vector<Scalar> grad = t * (p_ * x + q_) + gt_ * inv;
    const Vector<Scalar> fallback = inv / t;
    Vector<Scalar> step;
    if (!newton_.solve(t, inv.cwiseAbs2(), grad, step)) return {x, fallback};
    const Vector<Scalar> ds = -(g_ * step);
    if (!((slack + ds).array() > Scalar(0)).all()) return {x, fallback};
    Vector<Scalar> dual = (inv.array() * (Scalar(1) - ds.array() * inv.array()) / t).matrix();
    return {x + step, dual.cwiseMax(Scalar(0))};
  }

 private:
  Scalar barrier_value(const Vector<Scalar>& x, const Vector<Scalar>& slack, Scalar t) const {
    return t * (Scalar(0.5) * x.dot(p_ * x) + q_.dot(x)) - slack.array().log().sum();
  }

  const SparseMatrix<Scalar>& p_;
  const Vector<Scalar>& q_;
  const SparseMatrix<Scalar>& g_;
  SparseMatrix<Scalar> gt_;
  const Vector<Scalar>& h_;
  QpOptions<Scalar> options_;
  Newton& newton_;
};

/// Phase one: minimize s + (rho/2)||x - x0||^2 subject to G x - s <= h, stopping
/// at the first iterate with s < 0.
template <typename Scalar>
Vector<Scalar> find_strictly_feasible(const QpProblem<Scalar>& problem, Vector<Scalar> x0,
                                      const QpOptions<Scalar>& options, int& iterations) {
  const Index n = problem.variables();
  const Index m = problem.constraints();
  const Scalar rho = Scalar(1e-6);

  SparseMatrix<Scalar> p(n + 1, n + 1);
  {
    std::vector<Eigen::Triplet<Scalar>> trips;
    for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, rho);
    p.setFromTriplets(trips.begin(), trips.end());
  }
  Vector<Scalar> q(n + 1);
  q.head(n) = -rho * x0;
  q[n] = 1;
  SparseMatrix<Scalar> g(m, n + 1);
  {
    std::vector<Eigen::Triplet<Scalar>> trips;
    for (Index k = 0; k < problem.g.outerSize(); ++k)
      for (typename SparseMatrix<Scalar>::InnerIterator it(problem.g, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    for (Index i = 0; i < m; ++i) trips.emplace_back(i, n, Scalar(-1));
    g.setFromTriplets(trips.begin(), trips.end());
  }
  const Vector<Scalar> violation = problem.g * x0 - problem.h;
  Vector<Scalar> start(n + 1);
  start.head(n) = x0;
  start[n] = violation.maxCoeff() + Scalar(1);

  QpOptions<Scalar> phase_options = options;
  phase_options.tol = Scalar(1e-10);
  SparseNewton<Scalar> newton(p, g);
  BarrierSolver<Scalar, SparseNewton<Scalar>> solver(p, q, g, problem.h, phase_options, newton);
  const auto outcome = solver.run(start, options.max_iter, [&](const Vector<Scalar>& y) {
    return y[n] < Scalar(0) && ((problem.h - problem.g * y.head(n)).array() > Scalar(0)).all();
  });
  iterations += outcome.iterations;
  const Vector<Scalar> x = outcome.x.head(n);
  if (!((problem.h - problem.g * x).array() > Scalar(0)).all())
    throw Error(ErrorKind::kInfeasibleProblem, "no strictly feasible point found");
  return x;
}

template <typename Scalar, typename Newton>
QpSolution<Scalar> barrier_solve(const QpProblem<Scalar>& problem, const QpOptions<Scalar>& options,
                                 const Vector<Scalar>& x, int iterations, Newton&& newton) {
  const Index n = problem.variables();
  const Index m = problem.constraints();
  BarrierSolver<Scalar, Newton> solver(problem.p, problem.q, problem.g, problem.h, options, newton);
  const auto outcome =
      solver.run(x, options.max_iter, [](const Vector<Scalar>&) { return false; });

  QpSolution<Scalar> sol;
  sol.iterations = outcome.iterations + iterations;
  if (m > 0) {
    std::tie(sol.x, sol.dual) = solver.polish(outcome.x, outcome.t);
  } else {
    sol.x = outcome.x;
    sol.dual.resize(0);
  }
  sol.objective = problem.objective(sol.x);
  const Vector<Scalar> slack = problem.h - problem.g * sol.x;
  sol.primal_residual = m > 0 ? std::max(Scalar(0), (-slack).maxCoeff()) : Scalar(0);
  const Vector<Scalar> stationarity =
      problem.p * sol.x + problem.q + (m > 0 ? Vector<Scalar>(problem.g.transpose() * sol.dual) : Vector<Scalar>::Zero(n));
  sol.stationarity_residual = n > 0 ? stationarity.template lpNorm<Eigen::Infinity>() : Scalar(0);
  sol.duality_gap = m > 0 ? sol.dual.dot(slack) : Scalar(0);
  sol.status = outcome.converged ? QpStatus::kOptimal : QpStatus::kMaxIterations;
  return sol;
}


}  // namespace detail

/// Solves a convex QP whose feasible set has a nonempty interior. When `start`
/// is absent or not strictly feasible a phase-one problem locates an interior
/// point first.
template <typename Scalar>
QpSolution<Scalar> solve_qp(const QpProblem<Scalar>& problem, const QpOptions<Scalar>& options,
                            const std::optional<Vector<Scalar>>& start = std::nullopt) {
  problem.validate();
  const Index n = problem.variables();
  const Index m = problem.constraints();
  int iterations = 0;

  Vector<Scalar> x = start.value_or(Vector<Scalar>::Zero(n));
  if (x.size() != n) throw Error(ErrorKind::kDimensionMismatch, "starting point has the wrong length");
  if (m > 0 && !((problem.h - problem.g * x).array() > Scalar(0)).all())
    x = detail::find_strictly_feasible(problem, x, options, iterations);

  if (problem.coupled >= 0)
    return detail::barrier_solve(problem, options, x, iterations,
                                 detail::ArrowNewton<Scalar>(problem.p, problem.g, problem.coupled));
  return detail::barrier_solve(problem, options, x, iterations, detail::SparseNewton<Scalar>(problem.p, problem.g));
}

template <typename Scalar>
QpSolution<Scalar> solve_qp(const QpProblem<Scalar>& problem, Scalar tol, int max_iter) {
  QpOptions<Scalar> options;
  options.tol = tol;
  options.max_iter = max_iter;
  return solve_qp(problem, options);
}

}  // namespace pairwise
