#include "pairwise/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "pairwise/random.hpp"
#include "pairwise/solvers.hpp"

namespace pairwise {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::kConfigError, what); }

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = text.find(sep);
    out.push_back(trim(text.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    config_error("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  v = trim(v);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    config_error("'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  config_error("'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

template <typename F>
auto to_list(std::string_view v, F&& convert) {
  std::vector<decltype(convert(std::string_view{}))> out;
  for (std::string_view item : split(v, ','))
    if (!item.empty()) out.push_back(convert(item));
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<double> parse_row(std::string_view line, std::size_t line_no) {
  std::vector<double> out;
  for (std::string_view cell : split(line, ',')) {
    double v = 0;
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": malformed number '" +
                                              std::string(cell) + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kSu: return "SU";
    case Method::kDu: return "DU";
    case Method::kSd: return "SD";
    case Method::kSdsu: return "SDSU";
    case Method::kSddu: return "SDDU";
    case Method::kSudu: return "SUDU";
    case Method::kSdu: return "SDU";
    case Method::kKm: return "KM";
    case Method::kCkm: return "CKM";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kSu, Method::kDu, Method::kSd, Method::kSdsu, Method::kSddu, Method::kSudu, Method::kSdu,
                   Method::kKm, Method::kCkm})
    if (name == to_string(m)) return m;
  config_error("unknown method '" + std::string(name) + "'");
}

bool is_clustering(Method method) { return method == Method::kKm || method == Method::kCkm; }

RiskFamily risk_family(Method method) {
  switch (method) {
    case Method::kSu: return RiskFamily::kSu;
    case Method::kDu: return RiskFamily::kDu;
    case Method::kSd: return RiskFamily::kSd;
    case Method::kSdsu: return RiskFamily::kSdsu;
    case Method::kSddu: return RiskFamily::kSddu;
    case Method::kSudu: return RiskFamily::kSudu;
    case Method::kSdu: return RiskFamily::kGeneral;
    default: break;
  }
  config_error("method '" + std::string(to_string(method)) + "' is not a risk minimizer");
}

std::string_view to_string(PriorMode mode) {
  switch (mode) {
    case PriorMode::kAuto: return "auto";
    case PriorMode::kKnown: return "known";
    case PriorMode::kEstimated: return "estimated";
  }
  return "?";
}

PriorMode parse_prior_mode(std::string_view name) {
  for (PriorMode m : {PriorMode::kAuto, PriorMode::kKnown, PriorMode::kEstimated})
    if (name == to_string(m)) return m;
  config_error("unknown prior mode '" + std::string(name) + "'");
}

PriorMode resolve_prior_mode(PriorMode mode, Method method) {
  if (mode != PriorMode::kAuto) return mode;
  switch (method) {
    case Method::kSdsu:
    case Method::kSddu:
    case Method::kSudu:
    case Method::kSdu: return PriorMode::kEstimated;
    default: return PriorMode::kKnown;
  }
}

void ExperimentConfig::validate() const {
  if (trials < 1) config_error("trials must be >= 1");
  if (n_test < 1) config_error("n_test must be >= 1");
  if (n_sd < 1) config_error("n_sd must be >= 1");
  if (n_u < 0) config_error("n_u must be >= 0");
  if (folds < 2) config_error("folds must be >= 2");
  if (dim < 1) config_error("dim must be >= 1");
  if (!(separation >= 0)) config_error("separation must be >= 0");
  if (pool_size < 4) config_error("pool_size must be >= 4");
  if (!(test_fraction > 0 && test_fraction < 1)) config_error("test_fraction must lie in (0, 1)");
  try {
    make_priors(pi_plus);
  } catch (const Error& e) {
    config_error(std::string("pi_plus: ") + e.what());
  }
  if (methods.empty()) config_error("no methods selected");
  if (losses.empty()) config_error("no losses selected");
  for (LossKind l : losses)
    if (l != LossKind::kSquared && l != LossKind::kDoubleHinge)
      config_error("loss '" + std::string(to_string(l)) + "' has no solver; use squared or double_hinge");
  HyperGrid grid{lambdas, gammas, RiskFamily::kSd};
  try {
    grid.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (qp_tol <= 0 || qp_max_iter < 1 || kmeans_max_iter < 1 || ckm_restarts < 1)
    config_error("solver limits must be positive");
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "dataset") c.dataset = std::string(value);
  else if (key == "format") c.format = parse_data_format(value);
  else if (key == "label_column") c.label_column = to_int(key, value);
  else if (key == "header") c.header = to_bool(key, value);
  else if (key == "dim") c.dim = to_int(key, value);
  else if (key == "separation") c.separation = to_double(key, value);
  else if (key == "pool_size") c.pool_size = to_int(key, value);
  else if (key == "test_fraction") c.test_fraction = to_double(key, value);
  else if (key == "pi_plus") c.pi_plus = to_double(key, value);
  else if (key == "n_sd") c.n_sd = to_int(key, value);
  else if (key == "n_u") c.n_u = to_int(key, value);
  else if (key == "n_test") c.n_test = to_int(key, value);
  else if (key == "trials") c.trials = int(to_int(key, value));
  else if (key == "seed") c.seed = std::uint64_t(to_int(key, value));
  else if (key == "methods") c.methods = to_list(value, [](std::string_view s) { return parse_method(s); });
  else if (key == "losses") {
    c.losses = to_list(value, [](std::string_view s) {
      try {
        return parse_loss_kind(s);
      } catch (const Error& e) {
        config_error(e.what());
      }
    });
  } else if (key == "lambdas") c.lambdas = to_list(value, [&](std::string_view s) { return to_double(key, s); });
  else if (key == "gammas") c.gammas = to_list(value, [&](std::string_view s) { return to_double(key, s); });
  else if (key == "folds") c.folds = int(to_int(key, value));
  else if (key == "prior_mode") c.prior_mode = parse_prior_mode(value);
  else if (key == "majority_positive") c.majority_positive = to_bool(key, value);
  else if (key == "standardize") c.standardize = to_bool(key, value);
  else if (key == "qp_tol") c.qp_tol = to_double(key, value);
  else if (key == "qp_max_iter") c.qp_max_iter = int(to_int(key, value));
  else if (key == "kmeans_max_iter") c.kmeans_max_iter = int(to_int(key, value));
  else if (key == "ckm_restarts") c.ckm_restarts = int(to_int(key, value));
  else if (key == "output") c.output = std::string(value);
  else if (key == "threads") c.threads = int(to_int(key, value));
  else if (key == "record_time") c.record_time = to_bool(key, value);
  else config_error("unknown setting '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error("line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      config_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  return parse_config(read_file(path), std::move(base));
}

int resolve_threads(int configured) {
  int n = configured > 0 ? configured : int(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PAIRWISE_RISK_THREADS")) {
    const std::string_view v = trim(env);
    int cap = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), cap);
    if (ec != std::errc() || ptr != v.data() + v.size() || cap < 0)
      config_error("PAIRWISE_RISK_THREADS must be a nonnegative integer");
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

LabeledDataset load_source(const ExperimentConfig& config) {
  if (config.dataset.empty()) return {};
  LabeledDataset data = load_dataset(config.dataset, config.format, config.label_column, config.header);
  if (data.size() == 0) throw Error(ErrorKind::kEmptyFile, "dataset '" + config.dataset + "' is empty");
  return data;
}

namespace {

enum Stream : std::uint64_t { kPool = 1, kSplit, kPairs, kUnlabeled, kTest, kMethodBase = 100 };

// Stratified split of `pool` into (train, test) pools.
std::pair<LabeledDataset, LabeledDataset> split_pool(const LabeledDataset& pool, double test_fraction,
                                                     std::uint64_t seed) {
  std::vector<Index> by_class[2];
  for (Index i = 0; i < pool.size(); ++i) by_class[pool.labels[std::size_t(i)] == Label::kPositive ? 0 : 1].push_back(i);
  Rng rng(seed);
  std::vector<Index> train, test;
  for (auto& members : by_class) {
    if (members.size() < 2)
      throw Error(ErrorKind::kMissingClass, "each class needs at least two samples to split train and test pools");
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    auto n_test = std::size_t(std::llround(test_fraction * double(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test.insert(test.end(), members.begin(), members.begin() + std::ptrdiff_t(n_test));
    train.insert(train.end(), members.begin() + std::ptrdiff_t(n_test), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  auto take = [&](const std::vector<Index>& rows) {
    LabeledDataset out;
    out.features.resize(Index(rows.size()), pool.dimension());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.features.row(Index(r)) = pool.features.row(rows[r]);
      out.labels.push_back(pool.labels[std::size_t(rows[r])]);
    }
    return out;
  };
  return {take(train), take(test)};
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

TrialRecord base_record(const TrialData& data, int trial, Method method) {
  TrialRecord r;
  r.trial = trial;
  r.method = method;
  r.n_s = data.pairs.n_s();
  r.n_d = data.pairs.n_d();
  r.n_u = data.unlabeled.n_u();
  return r;
}

TrialRecord run_classifier(const ExperimentConfig& config, const TrialData& data, int trial, Method method,
                           LossKind loss) {
  TrialRecord r = base_record(data, trial, method);
  r.loss = loss;
  r.prior_mode = resolve_prior_mode(config.prior_mode, method);
  try {
    const std::uint64_t seed = derive_seed(config.seed, {std::uint64_t(trial), kMethodBase + std::uint64_t(method)});
    const TrainedClassifier fit = train_classifier(config, method, loss, data.pairs, data.unlabeled, data.map, seed);
    r.prior_value = fit.prior;
    r.lambda = fit.lambda;
    r.gamma = fit.weights;
    r.accuracy = accuracy(fit.model, fit.map, data.test);
  } catch (const Error& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

TrialRecord run_clustering(const ExperimentConfig& config, const TrialData& data, int trial, Method method) {
  TrialRecord r = base_record(data, trial, method);
  const std::uint64_t seed = derive_seed(config.seed, {std::uint64_t(trial), kMethodBase + std::uint64_t(method)});
  try {
    const Matrix<double> points = data.map.apply_rows(training_points(data.pairs, data.unlabeled));
    std::optional<KmeansResult> fit;
    if (method == Method::kKm) {
      fit = kmeans(points, 2, seed, config.kmeans_max_iter);
    } else {
      // Row layout of training_points: similar pairs, then dissimilar pairs, two rows each.
      std::vector<IndexPair> must, cannot;
      for (Index i = 0; i < data.pairs.n_s(); ++i) must.emplace_back(2 * i, 2 * i + 1);
      const Index offset = 2 * data.pairs.n_s();
      for (Index i = 0; i < data.pairs.n_d(); ++i) cannot.emplace_back(offset + 2 * i, offset + 2 * i + 1);
      fit = cop_kmeans(points, must, cannot, 2, seed, config.kmeans_max_iter, config.ckm_restarts);
    }
    if (!fit) {
      r.ok = false;
      r.message = "constraints admit no assignment";
      return r;
    }
    const std::vector<int> assignment = predict_from_clusters(fit->centroids, data.map.apply_rows(data.test.features));
    r.accuracy = clustering_accuracy(assignment, data.test.labels);
  } catch (const Error& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

bool record_less(const TrialRecord& a, const TrialRecord& b) {
  auto loss_key = [](const TrialRecord& r) { return r.loss ? int(*r.loss) : -1; };
  return std::tuple(a.trial, int(a.method), loss_key(a)) < std::tuple(b.trial, int(b.method), loss_key(b));
}

}  // namespace

TrainedClassifier train_classifier(const ExperimentConfig& config, Method method, LossKind loss,
                                   const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled,
                                   const FeatureMap<double>& map, std::uint64_t seed) {
  if (is_clustering(method)) config_error("method " + std::string(to_string(method)) + " is not a classifier");
  TrainedClassifier out;
  out.map = map;
  out.prior_mode = resolve_prior_mode(config.prior_mode, method);
  out.prior = out.prior_mode == PriorMode::kKnown ? config.pi_plus
                                                  : estimate_prior(pairs.n_s(), pairs.n_d(), config.majority_positive);
  const ClassPriors<double> priors = make_priors(out.prior);
  SolverConfig<double> solver;
  solver.loss = loss;
  solver.qp_tol = config.qp_tol;
  solver.qp_max_iter = config.qp_max_iter;
  const HyperGrid grid{config.lambdas, config.gammas, risk_family(method)};
  const CvResult cv = cross_validate(pairs, unlabeled, priors, loss, grid, config.folds, seed, map, solver);
  solver.lambda = cv.best_lambda;
  solver.gamma = cv.best_weights;
  out.lambda = cv.best_lambda;
  out.weights = cv.best_weights;
  out.model = fit_linear(build_design_matrices(pairs, unlabeled, map), priors, solver);
  return out;
}

TrialData make_trial_data(const ExperimentConfig& config, const LabeledDataset& source, int trial) {
  const auto t = std::uint64_t(trial);
  LabeledDataset pool;
  if (source.size() == 0) {
    const GaussianSpec spec = GaussianSpec::separated(config.dim, config.separation, config.pi_plus);
    pool = sample_gaussian_labeled(spec, config.pool_size, derive_seed(config.seed, {t, kPool}));
  }
  const auto [train, test_pool] =
      split_pool(source.size() == 0 ? pool : source, config.test_fraction, derive_seed(config.seed, {t, kSplit}));

  TrialData data;
  data.pairs = sample_pairs(train, config.n_sd, config.pi_plus, derive_seed(config.seed, {t, kPairs}));
  data.unlabeled = sample_unlabeled(train, config.n_u, config.pi_plus, derive_seed(config.seed, {t, kUnlabeled}));
  data.test = sample_labeled(test_pool, config.n_test, config.pi_plus, derive_seed(config.seed, {t, kTest}));
  data.map = config.standardize ? fit_standardizer(training_points(data.pairs, data.unlabeled))
                                : FeatureMap<double>::identity(train.dimension());
  return data;
}

std::vector<TrialRecord> run_trial(const ExperimentConfig& config, const TrialData& data, int trial) {
  std::vector<TrialRecord> out;
  for (Method method : config.methods) {
    if (is_clustering(method)) {
      const auto start = std::chrono::steady_clock::now();
      out.push_back(run_clustering(config, data, trial, method));
      out.back().wall_ms = config.record_time ? elapsed_ms(start) : 0.0;
      continue;
    }
    for (LossKind loss : config.losses) {
      const auto start = std::chrono::steady_clock::now();
      out.push_back(run_classifier(config, data, trial, method, loss));
      out.back().wall_ms = config.record_time ? elapsed_ms(start) : 0.0;
    }
  }
  return out;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const LabeledDataset source = load_source(config);
  const int workers = std::min(resolve_threads(config.threads), config.trials);

  std::vector<std::vector<TrialRecord>> per_trial(std::size_t(config.trials));
  std::vector<std::exception_ptr> errors(std::size_t(config.trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < config.trials; t = next++) {
      try {
        per_trial[std::size_t(t)] = run_trial(config, make_trial_data(config, source, t), t);
      } catch (...) {
        errors[std::size_t(t)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<TrialRecord> records;
  for (auto& trial : per_trial) records.insert(records.end(), trial.begin(), trial.end());
  std::stable_sort(records.begin(), records.end(), record_less);

  if (!config.output.empty()) {
    std::ofstream out(config.output, std::ios::binary);
    if (!out) config_error("cannot write '" + config.output + "'");
    write_csv(out, records);
  }
  return records;
}

namespace {

std::string format_gamma(const TrialRecord& r) {
  if (!r.gamma) return "NA";
  const GammaWeights<double>& g = *r.gamma;
  switch (r.method) {
    case Method::kSdsu: return format_number(g.g1);
    case Method::kSddu:
    case Method::kSudu: return format_number(g.g2);
    case Method::kSdu: return format_number(g.g1) + ":" + format_number(g.g2) + ":" + format_number(g.g3);
    default: return "NA";
  }
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kCsvHeader << '\n';
  for (const TrialRecord& r : records) {
    out << r.trial << ',' << to_string(r.method) << ',' << (r.loss ? to_string(*r.loss) : "none") << ',' << r.n_s
        << ',' << r.n_d << ',' << r.n_u << ',' << (r.lambda ? format_number(*r.lambda) : "NA") << ','
        << format_gamma(r) << ',' << (r.prior_mode ? to_string(*r.prior_mode) : "none") << ','
        << (r.prior_value ? format_number(*r.prior_value) : "NA") << ','
        << (r.ok ? format_number(r.accuracy) : "NA") << ',' << (r.ok ? "ok" : "failed") << ','
        << format_number(std::round(r.wall_ms * 1000.0) / 1000.0) << '\n';
  }
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::kEmptyData, "no records to summarize");
  std::map<std::pair<int, int>, std::vector<const TrialRecord*>> groups;
  for (const TrialRecord& r : records) groups[{int(r.method), r.loss ? int(*r.loss) : -1}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    SummaryRow row;
    row.method = members.front()->method;
    row.loss = members.front()->loss;
    std::vector<double> values;
    for (const TrialRecord* r : members) {
      if (r->ok)
        values.push_back(r->accuracy);
      else
        ++row.failed;
    }
    row.completed = int(values.size());
    if (!values.empty()) {
      const double n = double(values.size());
      double mean = 0;
      for (double v : values) mean += v;
      mean /= n;
      double ss = 0;
      for (double v : values) ss += (v - mean) * (v - mean);
      row.mean = mean;
      row.standard_error = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::vector<std::array<std::string, 6>> cells{{"method", "loss", "trials", "failed", "mean", "se"}};
  for (const SummaryRow& r : rows) {
    char mean[32] = "NA", se[32] = "NA";
    if (r.mean) std::snprintf(mean, sizeof mean, "%.4f", *r.mean);
    if (r.standard_error) std::snprintf(se, sizeof se, "%.4f", *r.standard_error);
    cells.push_back({std::string(to_string(r.method)), r.loss ? std::string(to_string(*r.loss)) : "none",
                     std::to_string(r.completed), std::to_string(r.failed), mean, se});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2)
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      else
        out << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<BoundsRow> bounds_report(const BoundsRequest& request) {
  if (request.pi_plus.empty() || request.n_s.empty() || request.n_u.empty())
    config_error("bounds report needs pi_plus, n_s and n_u values");
  std::vector<std::pair<std::int64_t, std::int64_t>> sizes;
  for (std::int64_t s : request.n_s) {
    if (request.n_d.empty())
      sizes.emplace_back(s, s);
    else
      for (std::int64_t d : request.n_d) sizes.emplace_back(s, d);
  }
  std::vector<BoundsRow> rows;
  try {
    for (double pi : request.pi_plus) {
      const ClassPriors<double> priors = make_priors(pi);
      BoundConstants consts;
      if (!request.c_factor) {
        const LossConstants lc = loss_constants(request.loss, request.c_b);
        consts = {request.c_f, lc.rho, lc.c_ell, request.delta, request.c_b};
      }
      for (const auto& [n_s, n_d] : sizes)
        for (std::int64_t n_u : request.n_u) {
          BoundsRow row{pi, n_s, n_d, n_u, {}, 0, false, 0};
          if (request.c_factor) {
            row.report = bounds_from_factor(*request.c_factor, priors, n_s, n_d, n_u);
            row.v_sdu = bound_sdu_from_factor(*request.c_factor, priors, request.gamma, n_s, n_d, n_u);
          } else {
            row.report = bounds_su_du_sd(consts, priors, n_s, n_d, n_u);
            row.v_sdu = bound_sdu(consts, priors, request.gamma, n_s, n_d, n_u);
          }
          row.condition = priors.pi_s / std::sqrt(2.0 * double(n_s)) > priors.pi_d / std::sqrt(2.0 * double(n_d));
          row.chernoff = chernoff_violation_bound(n_s + n_d, priors);
          rows.push_back(row);
        }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfigError) throw;
    config_error(e.what());
  }
  return rows;
}

std::string bounds_csv(const std::vector<BoundsRow>& rows) {
  std::ostringstream out;
  out << "pi_plus,n_s,n_d,n_u,c,v_su,v_du,v_sd,v_sdu,condition,sd_le_su,du_le_su,chernoff\n";
  for (const BoundsRow& r : rows) {
    out << format_number(r.pi_plus) << ',' << r.n_s << ',' << r.n_d << ',' << r.n_u << ','
        << format_number(r.report.c_factor) << ',' << format_number(r.report.v_su) << ','
        << format_number(r.report.v_du) << ',' << format_number(r.report.v_sd) << ',' << format_number(r.v_sdu)
        << ',' << (r.condition ? "true" : "false") << ',' << (r.report.sd_le_su ? "true" : "false") << ','
        << (r.report.du_le_su ? "true" : "false") << ',' << format_number(r.chernoff) << '\n';
  }
  return out.str();
}

namespace {

constexpr std::string_view kModelMagic = "pairwise-linear-model 1";

void write_vector(std::ostream& out, std::string_view name, const Vector<double>& v) {
  out << name;
  for (Index i = 0; i < v.size(); ++i) out << ' ' << format_exact(v[i]);
  out << '\n';
}

}  // namespace

std::string serialize_model(const LinearModel<double>& model, const FeatureMap<double>& map) {
  std::ostringstream out;
  out << kModelMagic << '\n';
  out << "map " << (map.kind == FeatureMapKind::kStandardize ? "standardize" : "identity") << '\n';
  out << "dim " << map.input_dim << '\n';
  if (map.kind == FeatureMapKind::kStandardize) {
    write_vector(out, "mean", map.mean);
    write_vector(out, "scale", map.scale);
  }
  write_vector(out, "weights", model.weights);
  out << "bias " << format_exact(model.bias) << '\n';
  return out.str();
}

std::pair<LinearModel<double>, FeatureMap<double>> parse_model(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines.front()) != kModelMagic)
    throw Error(ErrorKind::kParseError, "line 1: not a model file");
  std::map<std::string, std::vector<double>, std::less<>> fields;
  std::string kind;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream in{std::string(lines[i])};
    std::string name;
    if (!(in >> name)) continue;
    if (name == "map") {
      in >> kind;
      continue;
    }
    std::vector<double>& values = fields[name];
    std::string token;
    while (in >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0')
        throw Error(ErrorKind::kParseError, "line " + std::to_string(i + 1) + ": malformed number '" + token + "'");
      values.push_back(v);
    }
  }
  auto field = [&](const char* name) -> const std::vector<double>& {
    const auto it = fields.find(name);
    if (it == fields.end()) throw Error(ErrorKind::kParseError, std::string("model file lacks '") + name + "'");
    return it->second;
  };
  auto to_vector = [](const std::vector<double>& v) { return Vector<double>(Eigen::Map<const Vector<double>>(v.data(), Index(v.size()))); };
  const auto& dim = field("dim");
  const auto& bias = field("bias");
  if (dim.size() != 1 || bias.size() != 1) throw Error(ErrorKind::kParseError, "dim and bias take one value");
  const auto d = Index(dim.front());
  LinearModel<double> model{to_vector(field("weights")), bias.front()};
  if (model.weights.size() != d) throw Error(ErrorKind::kDimensionMismatch, "weights do not match dim");
  FeatureMap<double> map = FeatureMap<double>::identity(d);
  if (kind == "standardize") {
    map = FeatureMap<double>::standardize(to_vector(field("mean")), to_vector(field("scale")));
    if (map.input_dim != d) throw Error(ErrorKind::kDimensionMismatch, "standardizer does not match dim");
  } else if (kind != "identity") {
    throw Error(ErrorKind::kParseError, "unknown feature map '" + kind + "'");
  }
  return {std::move(model), std::move(map)};
}

std::string serialize_pairs(const PairSet<double>& pairs) {
  std::ostringstream out;
  auto emit = [&](char tag, const PairExample<double>& p) {
    out << tag;
    for (const Vector<double>* v : {&p.first, &p.second})
      for (Index j = 0; j < v->size(); ++j) out << ',' << format_exact((*v)[j]);
    out << '\n';
  };
  for (const auto& p : pairs.similar) emit('S', p);
  for (const auto& p : pairs.dissimilar) emit('D', p);
  return out.str();
}

PairSet<double> parse_pairs(std::string_view text) {
  PairSet<double> out;
  std::size_t line_no = 0;
  Index d = -1;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string_view tag = trim(line.substr(0, comma));
    if ((tag != "S" && tag != "D") || comma == std::string_view::npos)
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": expected S or D followed by values");
    const std::vector<double> values = parse_row(line.substr(comma + 1), line_no);
    if (values.size() % 2 != 0)
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": odd number of values");
    const auto half = Index(values.size() / 2);
    if (d >= 0 && half != d)
      throw Error(ErrorKind::kRaggedRows, "line " + std::to_string(line_no) + ": pair dimension differs");
    d = half;
    PairExample<double> p{Eigen::Map<const Vector<double>>(values.data(), half),
                          Eigen::Map<const Vector<double>>(values.data() + half, half)};
    (tag == "S" ? out.similar : out.dissimilar).push_back(std::move(p));
  }
  return out;
}

std::string serialize_points(const Matrix<double>& points) {
  std::ostringstream out;
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << format_exact(points(i, j));
    out << '\n';
  }
  return out.str();
}

Matrix<double> parse_points(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    rows.push_back(parse_row(line, line_no));
    if (rows.back().size() != rows.front().size())
      throw Error(ErrorKind::kRaggedRows, "line " + std::to_string(line_no) + ": row length differs");
  }
  Matrix<double> out(Index(rows.size()), rows.empty() ? 0 : Index(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(Index(i), Index(j)) = rows[i][j];
  return out;
}

}  // namespace pairwise
