#include "pairwise/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pairwise/random.hpp"

namespace pairwise {

std::string_view to_string(RiskFamily family) {
  switch (family) {
    case RiskFamily::kSu: return "SU";
    case RiskFamily::kDu: return "DU";
    case RiskFamily::kSd: return "SD";
    case RiskFamily::kSdsu: return "SDSU";
    case RiskFamily::kSddu: return "SDDU";
    case RiskFamily::kSudu: return "SUDU";
    case RiskFamily::kGeneral: return "SDU";
  }
  return "?";
}

RiskFamily parse_risk_family(std::string_view name) {
  for (RiskFamily f : {RiskFamily::kSu, RiskFamily::kDu, RiskFamily::kSd, RiskFamily::kSdsu, RiskFamily::kSddu,
                       RiskFamily::kSudu, RiskFamily::kGeneral})
    if (name == to_string(f)) return f;
  throw Error(ErrorKind::kConfigError, "unknown risk family '" + std::string(name) + "'");
}

void HyperGrid::validate() const {
  if (lambdas.empty()) throw Error(ErrorKind::kConfigError, "lambda grid is empty");
  if (gammas.empty()) throw Error(ErrorKind::kConfigError, "gamma grid is empty");
  for (double l : lambdas)
    if (!(l > 0.0)) throw Error(ErrorKind::kConfigError, "lambda values must be positive");
  for (double g : gammas)
    if (!(g >= 0.0 && g <= 1.0)) throw Error(ErrorKind::kConfigError, "gamma values must lie in [0, 1]");
}

std::vector<GridCell> HyperGrid::cells() const {
  validate();
  std::vector<double> gs = gammas;
  std::sort(gs.begin(), gs.end());
  std::vector<double> ls = lambdas;
  std::stable_sort(ls.begin(), ls.end(), std::greater<>());

  std::vector<GridCell> out;
  auto add = [&](double g1param, double g2param, GammaWeights<double> w) {
    for (double l : ls) out.push_back({l, g1param, g2param, w});
  };
  switch (family) {
    case RiskFamily::kSu: add(0, 0, {1, 0, 0}); break;
    case RiskFamily::kDu: add(0, 0, {0, 1, 0}); break;
    case RiskFamily::kSd: add(0, 0, {0, 0, 1}); break;
    case RiskFamily::kSdsu:
      for (double g : gs) add(g, 0, gamma_for_variant(Variant::kSdsu, g));
      break;
    case RiskFamily::kSddu:
      for (double g : gs) add(g, 0, gamma_for_variant(Variant::kSddu, g));
      break;
    case RiskFamily::kSudu:
      for (double g : gs) add(g, 0, gamma_for_variant(Variant::kSudu, g));
      break;
    case RiskFamily::kGeneral:
      for (double g1 : gs)
        for (double g2 : gs)
          if (g1 + g2 <= 1.0 + 1e-12) add(g1, g2, {g1, g2, std::max(0.0, 1.0 - g1 - g2)});
      break;
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> split_pair_folds(std::size_t n_s, std::size_t n_d, int folds,
                                                               std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::kInsufficientData, "cross-validation needs at least two folds");
  if (n_s < std::size_t(folds) || n_d < std::size_t(folds))
    throw Error(ErrorKind::kInsufficientData, "cross-validation needs at least " + std::to_string(folds) +
                                                  " similar and dissimilar pairs (have " + std::to_string(n_s) +
                                                  " and " + std::to_string(n_d) + ")");
  auto assign = [&](std::size_t n, std::uint64_t stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, {stream}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<int> fold(n);
    for (std::size_t r = 0; r < n; ++r) fold[order[r]] = int(r % std::size_t(folds));
    return fold;
  };
  return {assign(n_s, 1), assign(n_d, 2)};
}

PairSet<double> select_pairs(const PairSet<double>& pairs, const std::vector<int>& similar_fold,
                             const std::vector<int>& dissimilar_fold, int fold, bool held_out) {
  PairSet<double> out;
  for (std::size_t i = 0; i < pairs.similar.size(); ++i)
    if ((similar_fold[i] == fold) == held_out) out.similar.push_back(pairs.similar[i]);
  for (std::size_t i = 0; i < pairs.dissimilar.size(); ++i)
    if ((dissimilar_fold[i] == fold) == held_out) out.dissimilar.push_back(pairs.dissimilar[i]);
  return out;
}

CvResult cross_validate(const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled,
                        const ClassPriors<double>& priors, LossKind loss, const HyperGrid& grid, int folds,
                        std::uint64_t seed, const FeatureMap<double>& map, const SolverConfig<double>& solver) {
  const std::vector<GridCell> cells = grid.cells();
  CvResult result;
  result.folds = folds;
  std::tie(result.similar_fold, result.dissimilar_fold) =
      split_pair_folds(pairs.similar.size(), pairs.dissimilar.size(), folds, seed);

  std::vector<double> totals(cells.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const PairSet<double> train = select_pairs(pairs, result.similar_fold, result.dissimilar_fold, f, false);
    const PairSet<double> held = select_pairs(pairs, result.similar_fold, result.dissimilar_fold, f, true);
    const DesignMatrices<double> design = build_design_matrices(train, unlabeled, map);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      SolverConfig<double> config = solver;
      config.loss = loss;
      config.lambda = cells[c].lambda;
      config.gamma = cells[c].weights;
      const LinearModel<double> model = fit_linear(design, priors, config);
      totals[c] += validation_risk_sd_zero_one(model, map, held, priors);
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    result.scores.push_back({cells[c], totals[c] / folds});
    if (result.scores[c].mean_risk < result.scores[best].mean_risk - 1e-12) best = c;
  }
  result.best_lambda = cells[best].lambda;
  result.best_gamma = cells[best].gamma;
  result.best_weights = cells[best].weights;
  return result;
}

double accuracy(const LinearModel<double>& model, const FeatureMap<double>& map, const LabeledDataset& test) {
  if (test.size() == 0) throw Error(ErrorKind::kEmptyData, "accuracy needs a nonempty test set");
  const Vector<double> z = scores(model, map.apply_rows(test.features));
  Index correct = 0;
  for (Index i = 0; i < z.size(); ++i) correct += sign_label(z[i]) == test.labels[std::size_t(i)] ? 1 : 0;
  return double(correct) / double(z.size());
}

namespace {

int nearest(const Matrix<double>& centroids, const Eigen::Ref<const Vector<double>>& x) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    const double dist = (centroids.row(c).transpose() - x).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = int(c);
    }
  }
  return best;
}

Matrix<double> kmeanspp(const Matrix<double>& points, int k, Rng& rng) {
  const Index n = points.rows();
  Matrix<double> centroids(k, points.cols());
  centroids.row(0) = points.row(Index(rng.below(std::uint64_t(n))));
  Vector<double> dist = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += dist[i];
        if (acc > target && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = Index(rng.below(std::uint64_t(n)));
    }
    centroids.row(c) = points.row(pick);
    dist = dist.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

double within_ss(const Matrix<double>& points, const Matrix<double>& centroids, const std::vector<int>& assignment) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centroids.row(assignment[std::size_t(i)])).squaredNorm();
  return total;
}

void update_centroids(const Matrix<double>& points, const std::vector<int>& assignment, Matrix<double>& centroids) {
  Matrix<double> sums = Matrix<double>::Zero(centroids.rows(), centroids.cols());
  std::vector<Index> counts(std::size_t(centroids.rows()), 0);
  for (Index i = 0; i < points.rows(); ++i) {
    sums.row(assignment[std::size_t(i)]) += points.row(i);
    ++counts[std::size_t(assignment[std::size_t(i)])];
  }
  for (Index c = 0; c < centroids.rows(); ++c)
    if (counts[std::size_t(c)] > 0) centroids.row(c) = sums.row(c) / double(counts[std::size_t(c)]);
}

void check_kmeans_input(const Matrix<double>& points, int k) {
  if (k < 1) throw Error(ErrorKind::kOutOfRange, "k must be >= 1");
  if (points.rows() < k)
    throw Error(ErrorKind::kInsufficientData, "k-means needs at least k = " + std::to_string(k) + " points");
}

// Union-find over must-link components.
struct Components {
  std::vector<Index> parent;
  explicit Components(Index n) : parent(std::size_t(n)) { std::iota(parent.begin(), parent.end(), Index(0)); }
  Index find(Index i) {
    while (parent[std::size_t(i)] != i) i = parent[std::size_t(i)] = parent[std::size_t(parent[std::size_t(i)])];
    return i;
  }
  void unite(Index a, Index b) { parent[std::size_t(find(a))] = find(b); }
};

// One constrained assignment pass; false when some point has no admissible cluster.
bool constrained_assign(const Matrix<double>& points, const Matrix<double>& centroids,
                        const std::vector<Index>& component, const std::vector<std::vector<Index>>& cannot,
                        std::vector<int>& assignment) {
  const Index n = points.rows();
  const auto k = int(centroids.rows());
  std::vector<int> component_cluster(static_cast<std::size_t>(n), -1);
  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) order[std::size_t(c)] = {(centroids.row(c) - points.row(i)).squaredNorm(), c};
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const Index comp = component[std::size_t(i)];
    int chosen = -1;
    for (const auto& [dist, c] : order) {
      const int fixed = component_cluster[std::size_t(comp)];
      if (fixed >= 0 && fixed != c) continue;
      bool clash = false;
      for (Index other : cannot[std::size_t(comp)])
        if (component_cluster[std::size_t(other)] == c) clash = true;
      if (clash) continue;
      chosen = c;
      break;
    }
    if (chosen < 0) return false;
    component_cluster[std::size_t(comp)] = chosen;
    assignment[std::size_t(i)] = chosen;
  }
  return true;
}

}  // namespace

KmeansResult kmeans(const Matrix<double>& points, int k, std::uint64_t seed, int max_iter) {
  check_kmeans_input(points, k);
  Rng rng(seed);
  KmeansResult out;
  out.centroids = kmeanspp(points, k, rng);
  out.assignment.assign(std::size_t(points.rows()), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < points.rows(); ++i) {
      const int c = nearest(out.centroids, points.row(i).transpose());
      changed |= c != out.assignment[std::size_t(i)];
      out.assignment[std::size_t(i)] = c;
    }
    if (!changed) break;
    update_centroids(points, out.assignment, out.centroids);
    out.objective.push_back(within_ss(points, out.centroids, out.assignment));
    ++out.iterations;
  }
  return out;
}

std::optional<KmeansResult> cop_kmeans(const Matrix<double>& points, const std::vector<IndexPair>& must_links,
                                       const std::vector<IndexPair>& cannot_links, int k, std::uint64_t seed,
                                       int max_iter, int restarts) {
  check_kmeans_input(points, k);
  const Index n = points.rows();
  auto check_index = [&](const IndexPair& p) {
    if (p.first < 0 || p.first >= n || p.second < 0 || p.second >= n)
      throw Error(ErrorKind::kOutOfRange, "constraint refers to a point outside the data");
  };
  Components uf(n);
  for (const auto& p : must_links) {
    check_index(p);
    uf.unite(p.first, p.second);
  }
  std::vector<Index> component(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) component[std::size_t(i)] = uf.find(i);
  std::vector<std::vector<Index>> cannot(static_cast<std::size_t>(n));
  for (const auto& p : cannot_links) {
    check_index(p);
    const Index a = component[std::size_t(p.first)];
    const Index b = component[std::size_t(p.second)];
    if (a == b) return std::nullopt;  // a point set both tied and separated
    cannot[std::size_t(a)].push_back(b);
    cannot[std::size_t(b)].push_back(a);
  }

  for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
    Rng rng(attempt == 0 ? seed : derive_seed(seed, {std::uint64_t(attempt)}));
    KmeansResult out;
    out.centroids = kmeanspp(points, k, rng);
    out.assignment.assign(std::size_t(n), -1);
    bool feasible = true;
    for (int it = 0; it < max_iter; ++it) {
      const std::vector<int> previous = out.assignment;
      if (!constrained_assign(points, out.centroids, component, cannot, out.assignment)) {
        feasible = false;
        break;
      }
      if (out.assignment == previous) break;
      update_centroids(points, out.assignment, out.centroids);
      out.objective.push_back(within_ss(points, out.centroids, out.assignment));
      ++out.iterations;
    }
    if (feasible) return out;
  }
  return std::nullopt;
}

double clustering_accuracy(const std::vector<int>& assignment, const std::vector<Label>& labels) {
  if (assignment.size() != labels.size())
    throw Error(ErrorKind::kDimensionMismatch, "assignment and labels differ in length");
  if (assignment.empty()) throw Error(ErrorKind::kEmptyData, "clustering accuracy needs at least one point");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != 0 && assignment[i] != 1)
      throw Error(ErrorKind::kNotBinary, "cluster index " + std::to_string(assignment[i]) + " is not 0 or 1");
    const Label predicted = assignment[i] == 0 ? Label::kPositive : Label::kNegative;
    errors += predicted != labels[i] ? 1 : 0;
  }
  const double r = double(errors) / double(assignment.size());
  return 1.0 - std::min(r, 1.0 - r);
}

std::vector<int> predict_from_clusters(const Matrix<double>& centroids, const Matrix<double>& points) {
  if (points.rows() > 0 && points.cols() != centroids.cols())
    throw Error(ErrorKind::kDimensionMismatch, "points and centroids differ in dimension");
  std::vector<int> out(std::size_t(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) out[std::size_t(i)] = nearest(centroids, points.row(i).transpose());
  return out;
}

}  // namespace pairwise
