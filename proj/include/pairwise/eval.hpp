#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairwise/core.hpp"
#include "pairwise/datagen.hpp"
#include "pairwise/losses.hpp"
#include "pairwise/risks.hpp"
#include "pairwise/solvers.hpp"

namespace pairwise {

/// Risk combination searched by a grid. The single-risk families ignore the
/// gamma list.
enum class RiskFamily { kSu, kDu, kSd, kSdsu, kSddu, kSudu, kGeneral };

std::string_view to_string(RiskFamily family);
RiskFamily parse_risk_family(std::string_view name);

struct GridCell {
  double lambda = 0;
  double gamma = 0;   // variant parameter; g1 for the general family
  double gamma2 = 0;  // g2, general family only
  GammaWeights<double> weights;
};

struct HyperGrid {
  std::vector<double> lambdas{1e-1, 1e-4, 1e-7};
  std::vector<double> gammas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  RiskFamily family = RiskFamily::kSddu;

  void validate() const;

  /// Cells in tie-break order: ascending gamma (then g2), then descending lambda.
  /// The general family takes every (g1, g2) from gammas x gammas with g1 + g2 <= 1.
  std::vector<GridCell> cells() const;
};

struct CellScore {
  GridCell cell;
  double mean_risk = 0;
};

struct CvResult {
  double best_lambda = 0;
  double best_gamma = 0;
  GammaWeights<double> best_weights;
  std::vector<CellScore> scores;  // in tie-break order
  int folds = 0;
  // fold index of each similar / dissimilar pair
  std::vector<int> similar_fold;
  std::vector<int> dissimilar_fold;
};

/// Stratified split of whole pairs into `folds` folds.
std::pair<std::vector<int>, std::vector<int>> split_pair_folds(std::size_t n_s, std::size_t n_d, int folds,
                                                               std::uint64_t seed);

/// Pairs of fold `fold` (held_out = true) or of every other fold.
PairSet<double> select_pairs(const PairSet<double>& pairs, const std::vector<int>& similar_fold,
                             const std::vector<int>& dissimilar_fold, int fold, bool held_out);

/// Cell score = mean over folds of the zero-one SD risk on the held-out pairs
/// of a model trained on the remaining pairs plus all unlabeled points.
CvResult cross_validate(const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled,
                        const ClassPriors<double>& priors, LossKind loss, const HyperGrid& grid, int folds,
                        std::uint64_t seed, const FeatureMap<double>& map,
                        const SolverConfig<double>& solver = {});

double accuracy(const LinearModel<double>& model, const FeatureMap<double>& map, const LabeledDataset& test);

struct KmeansResult {
  std::vector<int> assignment;
  Matrix<double> centroids;            // k x d
  std::vector<double> objective;       // within-cluster sum of squares after each Lloyd iteration
  int iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeds. Distance ties go to the lowest
/// cluster index; an empty cluster keeps its previous centroid.
KmeansResult kmeans(const Matrix<double>& points, int k, std::uint64_t seed, int max_iter = 300);

using IndexPair = std::pair<Index, Index>;

/// COP-KMeans: every point takes the nearest centroid that violates no
/// constraint against points assigned before it in the same pass. Attempt 0
/// uses `seed` itself, so without constraints the result equals kmeans.
/// Returns nullopt when every restart hits an unassignable point.
std::optional<KmeansResult> cop_kmeans(const Matrix<double>& points, const std::vector<IndexPair>& must_links,
                                       const std::vector<IndexPair>& cannot_links, int k, std::uint64_t seed,
                                       int max_iter = 300, int restarts = 10);

/// 1 - min(r, 1 - r) with r the error rate of cluster 0 -> +1, cluster 1 -> -1.
double clustering_accuracy(const std::vector<int>& assignment, const std::vector<Label>& labels);

std::vector<int> predict_from_clusters(const Matrix<double>& centroids, const Matrix<double>& points);

}  // namespace pairwise
