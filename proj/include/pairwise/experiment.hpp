#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairwise/core.hpp"
#include "pairwise/datagen.hpp"
#include "pairwise/eval.hpp"
#include "pairwise/losses.hpp"
#include "pairwise/prior_bounds.hpp"

namespace pairwise {

enum class Method { kSu, kDu, kSd, kSdsu, kSddu, kSudu, kSdu, kKm, kCkm };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
bool is_clustering(Method method);
/// Grid family searched for a classification method.
RiskFamily risk_family(Method method);

/// `auto` resolves to estimated for the combined methods and known for SU, DU, SD.
enum class PriorMode { kAuto, kKnown, kEstimated };

std::string_view to_string(PriorMode mode);
PriorMode parse_prior_mode(std::string_view name);
PriorMode resolve_prior_mode(PriorMode mode, Method method);

struct ExperimentConfig {
  // Data source: a file, or two isotropic Gaussians when `dataset` is empty.
  std::string dataset;
  DataFormat format = DataFormat::kLibsvm;
  Index label_column = -1;
  bool header = false;
  Index dim = 2;
  double separation = 3.0;  // distance between the class means in standard deviations
  std::int64_t pool_size = 4000;
  double test_fraction = 0.3;  // share of the pool held out for test sampling

  double pi_plus = 0.7;
  std::int64_t n_sd = 50;
  std::int64_t n_u = 500;
  std::int64_t n_test = 500;
  int trials = 50;
  std::uint64_t seed = 1;

  std::vector<Method> methods{Method::kSu, Method::kDu, Method::kSd, Method::kSdsu, Method::kSddu, Method::kSudu};
  std::vector<LossKind> losses{LossKind::kSquared, LossKind::kDoubleHinge};
  std::vector<double> lambdas{1e-1, 1e-4, 1e-7};
  std::vector<double> gammas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  int folds = 5;
  PriorMode prior_mode = PriorMode::kAuto;
  bool majority_positive = true;
  bool standardize = true;

  double qp_tol = 1e-8;
  int qp_max_iter = 500;
  int kmeans_max_iter = 300;
  int ckm_restarts = 10;

  std::string output;   // CSV path; empty means none
  int threads = 0;      // 0 = PAIRWISE_RISK_THREADS, else hardware concurrency
  bool record_time = false;  // wall_ms stays 0 unless set, keeping the CSV reproducible

  void validate() const;
};

/// Every key accepted by apply_setting, in field order.
inline constexpr std::string_view kConfigKeys[] = {
    "dataset",   "format",  "label_column", "header",  "dim",           "separation",  "pool_size",
    "test_fraction", "pi_plus", "n_sd",     "n_u",     "n_test",        "trials",      "seed",
    "methods",   "losses",  "lambdas",      "gammas",  "folds",         "prior_mode",  "majority_positive",
    "standardize", "qp_tol", "qp_max_iter", "kmeans_max_iter", "ckm_restarts", "output", "threads",
    "record_time"};

/// Applies one `key=value` setting; unknown keys and bad values throw ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat `key=value` lines, `#` starts a comment, lists are comma separated.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Worker count: config.threads, then PAIRWISE_RISK_THREADS, then the hardware.
int resolve_threads(int configured);

struct TrialRecord {
  int trial = 0;
  Method method = Method::kSd;
  std::optional<LossKind> loss;  // none for the clustering baselines
  std::int64_t n_s = 0;
  std::int64_t n_d = 0;
  std::int64_t n_u = 0;
  std::optional<double> lambda;
  std::optional<GammaWeights<double>> gamma;
  std::optional<PriorMode> prior_mode;  // resolved; none for the clustering baselines
  std::optional<double> prior_value;
  double accuracy = 0;
  bool ok = true;
  std::string message;  // failure reason
  double wall_ms = 0;
};

/// The per-trial data shared by every method.
struct TrialData {
  PairSet<double> pairs;
  UnlabeledSet<double> unlabeled;
  LabeledDataset test;
  FeatureMap<double> map;
};

/// Loads the configured dataset, or returns an empty one for the synthetic source.
LabeledDataset load_source(const ExperimentConfig& config);

TrialData make_trial_data(const ExperimentConfig& config, const LabeledDataset& source, int trial);

struct TrainedClassifier {
  LinearModel<double> model;
  FeatureMap<double> map;
  double lambda = 0;
  GammaWeights<double> weights;
  PriorMode prior_mode = PriorMode::kKnown;  // resolved
  double prior = 0;
};

/// Prior (known or estimated), cross-validated grid search, then a final fit on
/// every pair and unlabeled point.
TrainedClassifier train_classifier(const ExperimentConfig& config, Method method, LossKind loss,
                                   const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled,
                                   const FeatureMap<double>& map, std::uint64_t seed);

/// Every (method, loss) record of one trial.
std::vector<TrialRecord> run_trial(const ExperimentConfig& config, const TrialData& data, int trial);

/// Records sorted by (trial, method, loss).
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

inline constexpr std::string_view kCsvHeader =
    "trial,method,loss,n_s,n_d,n_u,lambda,gamma,prior_mode,prior_value,accuracy,status,wall_ms";

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::string to_csv(const std::vector<TrialRecord>& records);

struct SummaryRow {
  Method method;
  std::optional<LossKind> loss;
  int completed = 0;
  int failed = 0;
  std::optional<double> mean;  // NA when every trial failed
  std::optional<double> standard_error;
};

/// Mean and standard error (n-1 std over sqrt(n); 0 for one record) per
/// (method, loss); failed trials are counted but excluded.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);
std::string format_summary(const std::vector<SummaryRow>& rows);

struct BoundsRequest {
  std::vector<double> pi_plus{0.7};
  std::vector<std::int64_t> n_s{100};
  std::vector<std::int64_t> n_d;  // empty: n_d = n_s row by row
  std::vector<std::int64_t> n_u{500};
  std::optional<double> c_factor;  // shared C; otherwise computed from the constants below
  LossKind loss = LossKind::kDoubleHinge;
  double c_f = 1;
  double c_b = 1;
  double delta = 0.05;
  GammaWeights<double> gamma{0, 0.5, 0.5};
};

struct BoundsRow {
  double pi_plus;
  std::int64_t n_s, n_d, n_u;
  BoundReport report;
  double v_sdu;
  bool condition;  // pi_S / sqrt(2 n_S) > pi_D / sqrt(2 n_D)
  double chernoff;  // violation bound for n_S + n_D pairs
};

std::vector<BoundsRow> bounds_report(const BoundsRequest& request);
std::string bounds_csv(const std::vector<BoundsRow>& rows);

/// Text form of a trained model and its feature map.
std::string serialize_model(const LinearModel<double>& model, const FeatureMap<double>& map);
std::pair<LinearModel<double>, FeatureMap<double>> parse_model(std::string_view text);

/// Pairs as CSV rows `S|D,x_1..x_d,x'_1..x'_d`; unlabeled points as plain rows.
std::string serialize_pairs(const PairSet<double>& pairs);
PairSet<double> parse_pairs(std::string_view text);
std::string serialize_points(const Matrix<double>& points);
Matrix<double> parse_points(std::string_view text);

}  // namespace pairwise
