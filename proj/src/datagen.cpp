#include "pairwise/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pairwise/random.hpp"

namespace pairwise {

namespace {

struct ClassPools {
  std::vector<Index> positive;
  std::vector<Index> negative;
};

ClassPools class_pools(const LabeledDataset& data) {
  ClassPools pools;
  for (Index i = 0; i < data.size(); ++i)
    (data.labels[std::size_t(i)] == Label::kPositive ? pools.positive : pools.negative).push_back(i);
  if (pools.positive.empty()) throw Error(ErrorKind::kMissingClass, "dataset has no positive samples");
  if (pools.negative.empty()) throw Error(ErrorKind::kMissingClass, "dataset has no negative samples");
  return pools;
}

Index draw(const std::vector<Index>& pool, Rng& rng) { return pool[rng.below(pool.size())]; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto pos = text.find('\n');
    lines.push_back(text.substr(0, pos));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return lines;
}

}  // namespace

double LabeledDataset::positive_fraction() const {
  if (labels.empty()) return 0.0;
  const auto pos = std::count(labels.begin(), labels.end(), Label::kPositive);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

GaussianSpec GaussianSpec::separated(Index dim, double separation, double pi_plus, double variance) {
  GaussianSpec spec;
  spec.mean_plus = Vector<double>::Zero(dim);
  spec.mean_minus = Vector<double>::Zero(dim);
  const double half = 0.5 * separation * std::sqrt(variance);
  spec.mean_plus[0] = half;
  spec.mean_minus[0] = -half;
  spec.variance = variance;
  spec.pi_plus = pi_plus;
  return spec;
}

PairSet<double> sample_pairs(const LabeledDataset& data, std::int64_t n_sd, double pi_plus, std::uint64_t seed) {
  if (n_sd < 1) throw Error(ErrorKind::kOutOfRange, "n_sd must be >= 1");
  const ClassPriors<double> priors = make_priors(pi_plus);
  const ClassPools pools = class_pools(data);
  Rng rng(seed);
  const double positive_given_similar = priors.pi_plus * priors.pi_plus / priors.pi_s;
  auto point = [&](Index i) -> Vector<double> { return data.features.row(i).transpose(); };

  PairSet<double> pairs;
  for (std::int64_t i = 0; i < n_sd; ++i) {
    if (rng.bernoulli(priors.pi_s)) {
      const auto& pool = rng.bernoulli(positive_given_similar) ? pools.positive : pools.negative;
      const Index a = draw(pool, rng);
      const Index b = draw(pool, rng);
      pairs.similar.push_back({point(a), point(b)});
    } else {
      const Index a = draw(pools.positive, rng);
      const Index b = draw(pools.negative, rng);
      if (rng.bernoulli(0.5))
        pairs.dissimilar.push_back({point(a), point(b)});
      else
        pairs.dissimilar.push_back({point(b), point(a)});
    }
  }
  return pairs;
}

LabeledDataset sample_labeled(const LabeledDataset& data, std::int64_t n, double pi_plus, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorKind::kOutOfRange, "sample size must be nonnegative");
  if (!(pi_plus > 0.0 && pi_plus < 1.0)) throw Error(ErrorKind::kOutOfRange, "class prior must lie in (0, 1)");
  const ClassPools pools = class_pools(data);
  Rng rng(seed);
  LabeledDataset out;
  out.features.resize(n, data.dimension());
  out.labels.reserve(std::size_t(n));
  for (Index i = 0; i < n; ++i) {
    const bool positive = rng.bernoulli(pi_plus);
    const Index j = draw(positive ? pools.positive : pools.negative, rng);
    out.features.row(i) = data.features.row(j);
    out.labels.push_back(positive ? Label::kPositive : Label::kNegative);
  }
  return out;
}

UnlabeledSet<double> sample_unlabeled(const LabeledDataset& data, std::int64_t n_u, double pi_plus,
                                      std::uint64_t seed) {
  return {sample_labeled(data, n_u, pi_plus, seed).features};
}

LabeledDataset sample_gaussian_labeled(const GaussianSpec& spec, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::kOutOfRange, "sample size must be >= 1");
  if (!(spec.variance > 0.0)) throw Error(ErrorKind::kOutOfRange, "variance must be positive");
  if (spec.mean_plus.size() != spec.mean_minus.size())
    throw Error(ErrorKind::kDimensionMismatch, "class means differ in dimension");
  const Index d = spec.mean_plus.size();
  const double sd = std::sqrt(spec.variance);
  Rng rng(seed);
  LabeledDataset out;
  out.features.resize(n, d);
  out.labels.reserve(std::size_t(n));
  for (Index i = 0; i < n; ++i) {
    const bool positive = rng.bernoulli(spec.pi_plus);
    const Vector<double>& mean = positive ? spec.mean_plus : spec.mean_minus;
    for (Index j = 0; j < d; ++j) out.features(i, j) = mean[j] + sd * rng.normal();
    out.labels.push_back(positive ? Label::kPositive : Label::kNegative);
  }
  return out;
}

Label LabelMap::map(double raw, std::size_t line) const {
  if (std::find(positive.begin(), positive.end(), raw) != positive.end()) return Label::kPositive;
  if (std::find(negative.begin(), negative.end(), raw) != negative.end()) return Label::kNegative;
  parse_error(line, "label " + std::to_string(raw) + " is not in the label map");
}

LabeledDataset parse_libsvm(std::string_view text, const LabelMap& label_map) {
  struct Row {
    std::vector<std::pair<Index, double>> entries;
    Label label;
  };
  std::vector<Row> rows;
  Index dim = 0;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::istringstream tokens{std::string(line)};
    std::string token;
    tokens >> token;
    double raw = 0;
    if (!parse_double(token, raw)) parse_error(line_no, "malformed label '" + token + "'");
    Row row{{}, label_map.map(raw, line_no)};
    Index previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) parse_error(line_no, "expected index:value, got '" + token + "'");
      std::int64_t index = 0;
      const std::string_view idx_text = std::string_view(token).substr(0, colon);
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || index < 1)
        parse_error(line_no, "malformed index in '" + token + "'");
      if (index <= previous) parse_error(line_no, "indices must be strictly increasing");
      double value = 0;
      if (!parse_double(std::string_view(token).substr(colon + 1), value))
        parse_error(line_no, "malformed value in '" + token + "'");
      row.entries.emplace_back(Index(index), value);
      previous = Index(index);
      dim = std::max(dim, Index(index));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::kEmptyFile, "no samples in LIBSVM input");

  LabeledDataset out;
  out.features = Matrix<double>::Zero(Index(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [index, value] : rows[i].entries) out.features(Index(i), index - 1) = value;
    out.labels.push_back(rows[i].label);
  }
  return out;
}

std::string serialize_libsvm(const LabeledDataset& data) {
  std::ostringstream out;
  out.precision(17);
  for (Index i = 0; i < data.size(); ++i) {
    out << (data.labels[std::size_t(i)] == Label::kPositive ? "+1" : "-1");
    for (Index j = 0; j < data.dimension(); ++j)
      if (data.features(i, j) != 0.0) out << ' ' << (j + 1) << ':' << data.features(i, j);
    out << '\n';
  }
  return out.str();
}

LabeledDataset parse_csv(std::string_view text, Index label_column, bool has_header) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> values;
    while (true) {
      const auto comma = line.find(',');
      double v = 0;
      const std::string_view cell = line.substr(0, comma);
      if (!parse_double(cell, v)) parse_error(line_no, "malformed number '" + std::string(trim(cell)) + "'");
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && values.size() != rows.front().size())
      throw Error(ErrorKind::kRaggedRows, "line " + std::to_string(line_no) + " has " +
                                              std::to_string(values.size()) + " columns, expected " +
                                              std::to_string(rows.front().size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorKind::kEmptyFile, "no rows in CSV input");
  const auto columns = Index(rows.front().size());
  if (label_column < 0) label_column = columns - 1;
  if (label_column >= columns) throw Error(ErrorKind::kOutOfRange, "label column out of range");

  std::vector<double> distinct;
  for (const auto& r : rows) {
    const double v = r[std::size_t(label_column)];
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  }
  if (distinct.size() != 2)
    throw Error(ErrorKind::kNonBinaryLabels, "label column holds " + std::to_string(distinct.size()) +
                                                 " distinct values, expected 2");
  const double positive = std::max(distinct[0], distinct[1]);

  LabeledDataset out;
  out.features.resize(Index(rows.size()), columns - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index c = 0;
    for (Index j = 0; j < columns; ++j)
      if (j != label_column) out.features(Index(i), c++) = rows[i][std::size_t(j)];
    out.labels.push_back(rows[i][std::size_t(label_column)] == positive ? Label::kPositive : Label::kNegative);
  }
  return out;
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "libsvm") return DataFormat::kLibsvm;
  if (name == "csv") return DataFormat::kCsv;
  throw Error(ErrorKind::kConfigError, "unknown data format '" + std::string(name) + "'");
}

LabeledDataset load_dataset(const std::string& path, DataFormat format, Index label_column, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfigError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  return format == DataFormat::kLibsvm ? parse_libsvm(text) : parse_csv(text, label_column, has_header);
}

FeatureMap<double> fit_standardizer(const Matrix<double>& features) {
  if (features.rows() < 2) throw Error(ErrorKind::kEmptyData, "standardization needs at least two samples");
  const Vector<double> mean = features.colwise().mean().transpose();
  const Vector<double> var =
      ((features.rowwise() - mean.transpose()).array().square().colwise().sum() / double(features.rows()))
          .transpose();
  Vector<double> scale = var.cwiseSqrt();
  for (Index j = 0; j < scale.size(); ++j)
    if (!(scale[j] > 1e-12 * (1.0 + std::abs(mean[j])))) scale[j] = 1.0;
  return FeatureMap<double>::standardize(mean, scale);
}

FeatureMap<double> fit_standardizer(const LabeledDataset& data) { return fit_standardizer(data.features); }

Matrix<double> training_points(const PairSet<double>& pairs, const UnlabeledSet<double>& unlabeled) {
  const Index d = pairs.dimension() >= 0 ? pairs.dimension() : unlabeled.points.cols();
  Matrix<double> out(2 * (pairs.n_s() + pairs.n_d()) + unlabeled.n_u(), d);
  Index row = 0;
  for (const auto* group : {&pairs.similar, &pairs.dissimilar})
    for (const auto& p : *group) {
      out.row(row++) = p.first.transpose();
      out.row(row++) = p.second.transpose();
    }
  if (unlabeled.n_u() > 0) out.bottomRows(unlabeled.n_u()) = unlabeled.points;
  return out;
}

}  // namespace pairwise
