#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pairwise/experiment.hpp"

using namespace pairwise;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.trials = 2;
  c.n_sd = 40;
  c.n_u = 100;
  c.n_test = 200;
  c.pool_size = 1000;
  c.methods = {Method::kSd};
  c.losses = {LossKind::kSquared};
  c.threads = 1;
  return c;
}

TrialRecord record(Method m, double acc, bool ok = true) {
  TrialRecord r;
  r.method = m;
  r.loss = LossKind::kSquared;
  r.accuracy = acc;
  r.ok = ok;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, ParsesKeyValueFileWithComments) {
  const auto c = parse_config(
      "# experiment\n"
      "pi_plus = 0.8\n"
      "n_sd=200   # pairs\n"
      "\n"
      "methods = SU, SDDU,KM\n"
      "losses=squared,double_hinge\n"
      "lambdas=0.1,0.001\n"
      "prior_mode=estimated\n"
      "standardize=false\n"
      "seed=42\n");
  EXPECT_EQ(c.pi_plus, 0.8);
  EXPECT_EQ(c.n_sd, 200);
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::kSu, Method::kSddu, Method::kKm}));
  EXPECT_EQ(c.losses, (std::vector<LossKind>{LossKind::kSquared, LossKind::kDoubleHinge}));
  EXPECT_EQ(c.lambdas, (std::vector<double>{0.1, 0.001}));
  EXPECT_EQ(c.prior_mode, PriorMode::kEstimated);
  EXPECT_FALSE(c.standardize);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.n_u, 500);  // untouched default
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("pi_plus 0.7"), Error);
  EXPECT_THROW(parse_config("unknown=1"), Error);
  EXPECT_THROW(parse_config("n_sd=ten"), Error);
  EXPECT_THROW(parse_config("methods=SU,XYZ"), Error);
  EXPECT_THROW(parse_config("losses=logistic"), Error);
  EXPECT_THROW(parse_config("standardize=maybe"), Error);
  try {
    parse_config("trials=1\nbogus=2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, EveryListedKeyIsAccepted) {
  ExperimentConfig c;
  for (std::string_view key : kConfigKeys) {
    std::string value = "1";
    if (key == "dataset" || key == "output") value = "x";
    if (key == "format") value = "csv";
    if (key == "methods") value = "SD";
    if (key == "losses") value = "squared";
    if (key == "prior_mode") value = "known";
    if (key == "pi_plus" || key == "test_fraction") value = "0.3";
    EXPECT_NO_THROW(apply_setting(c, key, value)) << key;
  }
}

TEST(Config, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.trials = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.pi_plus = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.losses = {LossKind::kHinge};
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.lambdas = {};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, PriorModeResolution) {
  EXPECT_EQ(resolve_prior_mode(PriorMode::kAuto, Method::kSd), PriorMode::kKnown);
  EXPECT_EQ(resolve_prior_mode(PriorMode::kAuto, Method::kSu), PriorMode::kKnown);
  EXPECT_EQ(resolve_prior_mode(PriorMode::kAuto, Method::kSddu), PriorMode::kEstimated);
  EXPECT_EQ(resolve_prior_mode(PriorMode::kAuto, Method::kSdu), PriorMode::kEstimated);
  EXPECT_EQ(resolve_prior_mode(PriorMode::kKnown, Method::kSddu), PriorMode::kKnown);
  for (Method m : {Method::kSu, Method::kDu, Method::kSd, Method::kSdsu, Method::kSddu, Method::kSudu, Method::kSdu,
                   Method::kKm, Method::kCkm})
    EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(Config, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3);
  EXPECT_GE(resolve_threads(0), 1);
}

TEST(RunExperiment, SeparatedGaussiansSdIsAccurate) {
  auto c = small_config();
  c.trials = 1;
  c.separation = 8;
  const auto records = run_experiment(c);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].ok);
  EXPECT_GE(records[0].accuracy, 0.95);
  EXPECT_EQ(records[0].n_s + records[0].n_d, 40);
  EXPECT_EQ(records[0].prior_mode, PriorMode::kKnown);
  EXPECT_EQ(records[0].prior_value, 0.7);
}

TEST(RunExperiment, DeterministicCsvAcrossThreadCounts) {
  auto c = small_config();
  c.trials = 3;
  c.methods = {Method::kSd, Method::kSddu, Method::kKm, Method::kCkm};
  const std::string a = to_csv(run_experiment(c));
  const std::string b = to_csv(run_experiment(c));
  c.threads = 2;
  const std::string par = to_csv(run_experiment(c));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, par);
  c.seed = 2;
  EXPECT_NE(a, to_csv(run_experiment(c)));
}

TEST(RunExperiment, ClusteringRoutedWithoutLoss) {
  auto c = small_config();
  c.trials = 1;
  c.methods = {Method::kKm, Method::kCkm, Method::kSd};
  const auto records = run_experiment(c);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].method, Method::kSd);
  EXPECT_EQ(records[1].method, Method::kKm);
  EXPECT_FALSE(records[1].loss.has_value());
  EXPECT_FALSE(records[1].lambda.has_value());
  EXPECT_GE(records[1].accuracy, 0.5);
  EXPECT_LE(records[1].accuracy, 1.0);
  const auto csv = lines(to_csv(records));
  EXPECT_EQ(csv[2].substr(0, 10), "0,KM,none,");
}

TEST(RunExperiment, AddingMethodsKeepsOtherRecords) {
  auto c = small_config();
  c.trials = 2;
  const auto alone = run_experiment(c);
  c.methods = {Method::kSu, Method::kSd, Method::kKm};
  const auto together = run_experiment(c);
  for (const auto& r : together)
    if (r.method == Method::kSd) EXPECT_EQ(r.accuracy, alone[std::size_t(r.trial)].accuracy);
}

TEST(RunExperiment, EstimatedPriorRecorded) {
  auto c = small_config();
  c.trials = 1;
  c.n_sd = 400;
  c.methods = {Method::kSddu};
  const auto r = run_experiment(c).front();
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_EQ(r.prior_mode, PriorMode::kEstimated);
  ASSERT_TRUE(r.prior_value.has_value());
  EXPECT_NEAR(*r.prior_value, std::sqrt(2.0 * double(r.n_s) / 400.0 - 1.0) / 2 + 0.5, 1e-12);
}

TEST(RunExperiment, DegenerateEstimateIsAFailedTrial) {
  // Balanced classes make the estimated prior sit at 1/2 often enough to hit at least once.
  auto c = small_config();
  c.pi_plus = 0.52;
  c.n_sd = 10;
  c.folds = 2;
  c.trials = 30;
  c.methods = {Method::kSddu};
  int failed = 0;
  for (const auto& r : run_experiment(c)) {
    if (!r.ok) {
      ++failed;
      EXPECT_FALSE(r.message.empty());
    }
  }
  EXPECT_GT(failed, 0);
}

TEST(RunExperiment, WritesCsvFile) {
  auto c = small_config();
  c.trials = 1;
  c.output = testing::TempDir() + "pairwise_experiment_test.csv";
  const auto records = run_experiment(c);
  std::ifstream in(c.output);
  std::stringstream buffer;
  buffer << in.rdbuf();
  EXPECT_EQ(buffer.str(), to_csv(records));
  std::remove(c.output.c_str());
}

TEST(RunExperiment, CsvDatasetSource) {
  const std::string path = testing::TempDir() + "pairwise_source.csv";
  {
    const auto data = sample_gaussian_labeled(GaussianSpec::separated(3, 6, 0.6), 400, 5);
    std::ofstream out(path);
    out << "a,b,c,label\n";
    for (Index i = 0; i < data.size(); ++i)
      out << data.features(i, 0) << ',' << data.features(i, 1) << ',' << data.features(i, 2) << ','
          << (data.labels[std::size_t(i)] == Label::kPositive ? 1 : 0) << '\n';
  }
  auto c = small_config();
  c.trials = 1;
  c.dataset = path;
  c.format = DataFormat::kCsv;
  c.header = true;
  const auto r = run_experiment(c).front();
  EXPECT_TRUE(r.ok);
  EXPECT_GE(r.accuracy, 0.9);
  std::remove(path.c_str());
}

TEST(Csv, HeaderAndFields) {
  TrialRecord r = record(Method::kSddu, 0.875);
  r.trial = 4;
  r.n_s = 30;
  r.n_d = 20;
  r.n_u = 500;
  r.lambda = 1e-4;
  r.gamma = GammaWeights<double>{0, 0.4, 0.6};
  r.prior_mode = PriorMode::kEstimated;
  r.prior_value = 0.7;
  TrialRecord failed = record(Method::kCkm, 0, false);
  failed.loss.reset();
  const auto csv = lines(to_csv({r, failed}));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "trial,method,loss,n_s,n_d,n_u,lambda,gamma,prior_mode,prior_value,accuracy,status,wall_ms");
  EXPECT_EQ(csv[1], "4,SDDU,squared,30,20,500,0.0001,0.4,estimated,0.7,0.875,ok,0");
  EXPECT_EQ(csv[2], "0,CKM,none,0,0,0,NA,NA,none,NA,NA,failed,0");
}

TEST(Summarize, SingleRecordHasZeroError) {
  const auto rows = summarize({record(Method::kSd, 0.9)});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(*rows[0].mean, 0.9);
  EXPECT_EQ(*rows[0].standard_error, 0.0);
}

TEST(Summarize, TwoRecordsHandArithmetic) {
  const auto rows = summarize({record(Method::kSd, 0.6), record(Method::kSd, 0.8)});
  EXPECT_NEAR(*rows[0].mean, 0.7, 1e-15);
  EXPECT_NEAR(*rows[0].standard_error, 0.1, 1e-15);
}

TEST(Summarize, FailuresExcludedAndAllFailedIsNa) {
  const auto rows = summarize({record(Method::kSd, 0.6), record(Method::kSd, 0.0, false),
                               record(Method::kSu, 0.1, false), record(Method::kSu, 0.2, false)});
  ASSERT_EQ(rows.size(), 2u);
  const auto& su = rows[0].method == Method::kSu ? rows[0] : rows[1];
  const auto& sd = rows[0].method == Method::kSd ? rows[0] : rows[1];
  EXPECT_EQ(*sd.mean, 0.6);
  EXPECT_EQ(sd.completed, 1);
  EXPECT_EQ(sd.failed, 1);
  EXPECT_FALSE(su.mean.has_value());
  EXPECT_EQ(su.failed, 2);
  const std::string table = format_summary(rows);
  EXPECT_NE(table.find("NA"), std::string::npos);
  EXPECT_THROW(summarize({}), Error);
}

TEST(BoundsReport, ArithmeticRow) {
  BoundsRequest req;
  req.c_factor = 1.0;
  const auto rows = bounds_report(req);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].report.v_su, 0.12674, 1e-5);
  EXPECT_TRUE(rows[0].condition);
  EXPECT_TRUE(rows[0].report.sd_le_su);
  EXPECT_NE(bounds_csv(rows).find("0.1267"), std::string::npos);
}

TEST(BoundsReport, SdConstantInUnlabeledCount) {
  BoundsRequest req;
  req.n_u = {10, 100, 1000, 10000};
  const auto rows = bounds_report(req);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_EQ(r.report.v_sd, rows[0].report.v_sd);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].report.v_su, rows[i - 1].report.v_su);
}

TEST(BoundsReport, FlagsFollowCondition) {
  BoundsRequest req;
  req.pi_plus = {0.6, 0.7, 0.9};
  req.n_s = {10, 100, 1000};
  req.n_d = {10, 100, 1000};
  req.n_u = {100, 1000};
  for (const auto& r : bounds_report(req)) {
    if (r.condition) {
      EXPECT_TRUE(r.report.sd_le_su);
      EXPECT_TRUE(r.report.du_le_su);
    }
    EXPECT_GT(r.v_sdu, 0);
    EXPECT_LE(r.chernoff, 1.0);
  }
  req.pi_plus = {0.5};
  EXPECT_THROW(bounds_report(req), Error);
  req.pi_plus = {};
  EXPECT_THROW(bounds_report(req), Error);
}

TEST(Serialization, ModelRoundTrip) {
  LinearModel<double> model{Vector<double>(3), -0.123456789012345678};
  model.weights << 1.0 / 3.0, -2e-300, 7;
  Vector<double> mean(3), scale(3);
  mean << 0.1, 0.2, 0.3;
  scale << 1, 2, 1.0 / 7.0;
  const auto map = FeatureMap<double>::standardize(mean, scale);
  const auto [m, f] = parse_model(serialize_model(model, map));
  EXPECT_EQ(m.weights, model.weights);
  EXPECT_EQ(m.bias, model.bias);
  EXPECT_EQ(f.kind, FeatureMapKind::kStandardize);
  EXPECT_EQ(f.mean, mean);
  EXPECT_EQ(f.scale, scale);
  const auto [m2, f2] = parse_model(serialize_model(model, FeatureMap<double>::identity(3)));
  EXPECT_EQ(f2.kind, FeatureMapKind::kIdentity);
  EXPECT_THROW(parse_model("not a model"), Error);
}

TEST(Serialization, PairsAndPointsRoundTrip) {
  const auto data = sample_gaussian_labeled(GaussianSpec::separated(2, 2, 0.7), 100, 3);
  const auto pairs = sample_pairs(data, 25, 0.7, 4);
  const auto back = parse_pairs(serialize_pairs(pairs));
  ASSERT_EQ(back.n_s(), pairs.n_s());
  ASSERT_EQ(back.n_d(), pairs.n_d());
  for (std::size_t i = 0; i < pairs.similar.size(); ++i) {
    EXPECT_EQ(back.similar[i].first, pairs.similar[i].first);
    EXPECT_EQ(back.similar[i].second, pairs.similar[i].second);
  }
  for (std::size_t i = 0; i < pairs.dissimilar.size(); ++i)
    EXPECT_EQ(back.dissimilar[i].second, pairs.dissimilar[i].second);
  EXPECT_EQ(parse_points(serialize_points(data.features)), data.features);
  EXPECT_THROW(parse_pairs("X,1,2\n"), Error);
  EXPECT_THROW(parse_pairs("S,1,2,3\n"), Error);
}
