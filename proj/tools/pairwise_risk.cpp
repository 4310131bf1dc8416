#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pairwise/experiment.hpp"
#include "pairwise/random.hpp"

namespace {

using namespace pairwise;

// Ordered `--key value` overrides, applied on top of the config file.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> settings;

  ExperimentConfig resolve() const {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& [key, value] : settings) apply_setting(config, key, value);
    config.validate();
    return config;
  }
};

void add_config_flags(CLI::App* app, Overrides& overrides) {
  app->add_option("--config", overrides.config_path, "key=value config file")->check(CLI::ExistingFile);
  for (std::string_view key : kConfigKeys) {
    const std::string name(key);
    app->add_option_function<std::string>(
        "--" + name, [&overrides, name](const std::string& v) { overrides.settings.emplace_back(name, v); },
        "config field " + name);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfigError, "cannot write '" + path + "'");
  out << text;
}

int run_gen(const Overrides& overrides, int trial, const std::string& prefix) {
  const ExperimentConfig config = overrides.resolve();
  const TrialData data = make_trial_data(config, load_source(config), trial);
  write_text(prefix + ".pairs.csv", serialize_pairs(data.pairs));
  write_text(prefix + ".unlabeled.csv", serialize_points(data.unlabeled.points));
  write_text(prefix + ".test.libsvm", serialize_libsvm(data.test));
  std::cout << "wrote " << data.pairs.n_s() << " similar, " << data.pairs.n_d() << " dissimilar, "
            << data.unlabeled.n_u() << " unlabeled, " << data.test.size() << " test points to " << prefix
            << ".{pairs.csv,unlabeled.csv,test.libsvm}\n";
  return 0;
}

int run_train(const Overrides& overrides, const std::string& pairs_path, const std::string& unlabeled_path,
              const std::string& method_name, const std::string& loss_name, const std::string& model_path) {
  const ExperimentConfig config = overrides.resolve();
  const Method method = parse_method(method_name);
  const LossKind loss = parse_loss_kind(loss_name);
  const PairSet<double> pairs = parse_pairs(read_text(pairs_path));
  UnlabeledSet<double> unlabeled;
  if (!unlabeled_path.empty()) unlabeled.points = parse_points(read_text(unlabeled_path));
  const Index dim = pairs.dimension() >= 0 ? pairs.dimension() : unlabeled.points.cols();
  if (unlabeled.n_u() == 0) unlabeled.points.resize(0, dim);
  const FeatureMap<double> map = config.standardize ? fit_standardizer(training_points(pairs, unlabeled))
                                                    : FeatureMap<double>::identity(dim);
  const std::uint64_t seed = derive_seed(config.seed, {0, 100 + std::uint64_t(method)});
  const TrainedClassifier fit = train_classifier(config, method, loss, pairs, unlabeled, map, seed);
  write_text(model_path, serialize_model(fit.model, fit.map));
  std::fprintf(stderr, "method=%s loss=%s prior_mode=%s prior=%.6g lambda=%g gamma=%g:%g:%g\n",
               std::string(to_string(method)).c_str(), std::string(to_string(loss)).c_str(),
               std::string(to_string(fit.prior_mode)).c_str(), fit.prior, fit.lambda, fit.weights.g1,
               fit.weights.g2, fit.weights.g3);
  return 0;
}

int run_eval(const Overrides& overrides, const std::string& model_path, const std::string& test_path) {
  const ExperimentConfig config = overrides.resolve();
  const auto [model, map] = parse_model(read_text(model_path));
  const LabeledDataset test = load_dataset(test_path, config.format, config.label_column, config.header);
  std::printf("accuracy %.6f on %lld points\n", accuracy(model, map, test), static_cast<long long>(test.size()));
  return 0;
}

int run_bench(const Overrides& overrides) {
  const ExperimentConfig config = overrides.resolve();
  const std::vector<TrialRecord> records = run_experiment(config);
  std::cout << format_summary(summarize(records));
  if (!config.output.empty()) std::cout << "records written to " << config.output << "\n";
  return 0;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream cell(item);
    T value;
    if (!(cell >> value) || !(cell >> std::ws).eof())
      throw Error(ErrorKind::kConfigError, std::string(flag) + " expects a comma-separated list of numbers");
    out.push_back(value);
  }
  if (out.empty()) throw Error(ErrorKind::kConfigError, std::string(flag) + " is empty");
  return out;
}

struct BoundsFlags {
  std::string pi_plus = "0.7", n_s = "100", n_d, n_u = "500", gamma = "0,0.5,0.5", loss = "double_hinge", output;
  std::optional<double> c;
  double c_f = 1, c_b = 1, delta = 0.05;
};

int run_bounds(const BoundsFlags& flags) {
  BoundsRequest request;
  request.pi_plus = parse_list<double>(flags.pi_plus, "--pi_plus");
  request.n_s = parse_list<std::int64_t>(flags.n_s, "--n_s");
  if (!flags.n_d.empty()) request.n_d = parse_list<std::int64_t>(flags.n_d, "--n_d");
  request.n_u = parse_list<std::int64_t>(flags.n_u, "--n_u");
  request.c_factor = flags.c;
  request.loss = parse_loss_kind(flags.loss);
  request.c_f = flags.c_f;
  request.c_b = flags.c_b;
  request.delta = flags.delta;
  const auto g = parse_list<double>(flags.gamma, "--gamma");
  if (g.size() != 3) throw Error(ErrorKind::kConfigError, "--gamma expects three weights");
  request.gamma = GammaWeights<double>::make(g[0], g[1], g[2]);
  write_text(flags.output, bounds_csv(bounds_report(request)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary classification from similar, dissimilar and unlabeled data"};
  app.require_subcommand(1);

  Overrides gen_flags, train_flags, eval_flags, bench_flags;

  auto* gen = app.add_subcommand("gen", "sample one trial's S/D pairs, U points and test set to files");
  add_config_flags(gen, gen_flags);
  int gen_trial = 0;
  std::string prefix;
  gen->add_option("--trial", gen_trial, "trial index whose data to emit")->check(CLI::NonNegativeNumber);
  gen->add_option("--prefix", prefix, "output path prefix")->required();

  auto* train = app.add_subcommand("train", "cross-validate and fit one classifier, emit the model");
  add_config_flags(train, train_flags);
  std::string pairs_path, unlabeled_path, method = "SDDU", loss = "squared", model_out = "-";
  train->add_option("--pairs", pairs_path, "pairs CSV written by gen")->required()->check(CLI::ExistingFile);
  train->add_option("--unlabeled", unlabeled_path, "unlabeled points CSV")->check(CLI::ExistingFile);
  train->add_option("--method", method, "SU, DU, SD, SDSU, SDDU, SUDU or SDU")->capture_default_str();
  train->add_option("--loss", loss, "squared or double_hinge")->capture_default_str();
  train->add_option("--model", model_out, "model output path, - for stdout")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "accuracy of a saved model on a labeled file");
  add_config_flags(eval, eval_flags);
  std::string model_in, test_path;
  eval->add_option("--model", model_in, "model written by train")->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "labeled test data (--format, --label_column, --header apply)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "run every trial, print the summary and write the CSV");
  add_config_flags(bench, bench_flags);

  auto* bounds = app.add_subcommand("bounds", "tabulate the estimation error bounds");
  BoundsFlags bf;
  bounds->add_option("--pi_plus", bf.pi_plus, "class priors, comma separated")->capture_default_str();
  bounds->add_option("--n_s", bf.n_s, "similar pair counts")->capture_default_str();
  bounds->add_option("--n_d", bf.n_d, "dissimilar pair counts; defaults to n_s row by row");
  bounds->add_option("--n_u", bf.n_u, "unlabeled counts")->capture_default_str();
  bounds->add_option("--c", bf.c, "shared constant C; otherwise computed from --loss, --c_f, --c_b, --delta");
  bounds->add_option("--loss", bf.loss, "loss for the Lipschitz constant")->capture_default_str();
  bounds->add_option("--c_f", bf.c_f, "Rademacher constant")->capture_default_str();
  bounds->add_option("--c_b", bf.c_b, "bound on |f|")->capture_default_str();
  bounds->add_option("--delta", bf.delta, "failure probability")->capture_default_str();
  bounds->add_option("--gamma", bf.gamma, "SDU weights g1,g2,g3")->capture_default_str();
  bounds->add_option("--output", bf.output, "CSV path; stdout when absent");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(gen_flags, gen_trial, prefix);
    if (train->parsed()) return run_train(train_flags, pairs_path, unlabeled_path, method, loss, model_out);
    if (eval->parsed()) return run_eval(eval_flags, model_in, test_path);
    if (bench->parsed()) return run_bench(bench_flags);
    if (bounds->parsed()) return run_bounds(bf);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
