#include <gtest/gtest.h>

#include "pairwise/risks.hpp"
#include "pairwise/random.hpp"

using namespace pairwise;

namespace {

const auto kId1 = FeatureMap<double>::identity(1);

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

MarginLoss<double> loss_of(LossKind k) { return MarginLoss<double>::make(k); }

LinearModel<double> constant_model(double b, Index k = 1) { return {Vector<double>::Zero(k), b}; }

struct Sample {
  PairSet<double> pairs;
  UnlabeledSet<double> unlabeled;
};

Sample random_sample(Rng& rng, int n_s, int n_d, int n_u, Index k) {
  Sample s;
  auto rv = [&] {
    Vector<double> v(k);
    for (Index i = 0; i < k; ++i) v[i] = rng.normal();
    return v;
  };
  for (int i = 0; i < n_s; ++i) s.pairs.similar.push_back({rv(), rv()});
  for (int i = 0; i < n_d; ++i) s.pairs.dissimilar.push_back({rv(), rv()});
  s.unlabeled.points.resize(n_u, k);
  for (int i = 0; i < n_u; ++i) s.unlabeled.points.row(i) = rv().transpose();
  return s;
}

// Direct summation of the pointwise risk formulas, written against eval_loss only.
struct Oracle {
  const ClassPriors<double>& p;
  const MarginLoss<double>& l;
  const LinearModel<double>& m;

  double f(const Vector<double>& x) const { return m.weights.dot(x) + m.bias; }
  double big_l(double z, double t) const {
    const double lt = t > 0 ? eval_loss(l, z, Label::kPositive) : eval_loss(l, z, Label::kNegative);
    const double lnt = t > 0 ? eval_loss(l, z, Label::kNegative) : eval_loss(l, z, Label::kPositive);
    return (p.pi_plus * lt - p.pi_minus * lnt) / (p.pi_plus - p.pi_minus);
  }
  double tilde(double z) const { return big_l(z, 1) - big_l(z, -1); }

  double su(const Sample& s) const {
    double a = 0, b = 0;
    for (const auto& pr : s.pairs.similar) a += tilde(f(pr.first)) + tilde(f(pr.second));
    for (Index i = 0; i < s.unlabeled.n_u(); ++i) b += big_l(f(s.unlabeled.points.row(i).transpose()), -1);
    return p.pi_s * a / (2.0 * double(s.pairs.similar.size())) + b / double(s.unlabeled.n_u());
  }
  double du(const Sample& s) const {
    double a = 0, b = 0;
    for (const auto& pr : s.pairs.dissimilar) a += tilde(f(pr.first)) + tilde(f(pr.second));
    for (Index i = 0; i < s.unlabeled.n_u(); ++i) b += big_l(f(s.unlabeled.points.row(i).transpose()), 1);
    return -p.pi_d * a / (2.0 * double(s.pairs.dissimilar.size())) + b / double(s.unlabeled.n_u());
  }
  double sd(const Sample& s) const {
    double a = 0, b = 0;
    for (const auto& pr : s.pairs.similar) a += big_l(f(pr.first), 1) + big_l(f(pr.second), 1);
    for (const auto& pr : s.pairs.dissimilar) b += big_l(f(pr.first), -1) + big_l(f(pr.second), -1);
    return p.pi_s * a / (2.0 * double(s.pairs.similar.size())) +
           p.pi_d * b / (2.0 * double(s.pairs.dissimilar.size()));
  }
};

DiscreteDistribution<double> random_distribution(Rng& rng, Index points, Index k, double pi) {
  DiscreteDistribution<double> d;
  d.support.resize(points, k);
  for (Index i = 0; i < d.support.size(); ++i) d.support.data()[i] = rng.normal();
  d.p_plus.resize(points);
  d.p_minus.resize(points);
  for (Index i = 0; i < points; ++i) {
    d.p_plus[i] = rng.uniform() + 1e-3;
    d.p_minus[i] = rng.uniform() + 1e-3;
  }
  d.p_plus /= d.p_plus.sum();
  d.p_minus /= d.p_minus.sum();
  d.priors = make_priors(pi);
  return d;
}

}  // namespace

TEST(EmpiricalRiskSu, ZeroModelSquared) {
  Rng rng(1);
  const auto s = random_sample(rng, 4, 0, 7, 1);
  EXPECT_DOUBLE_EQ(empirical_risk_su(constant_model(0), kId1, s.pairs, s.unlabeled, make_priors(0.7),
                                     loss_of(LossKind::kSquared)),
                   0.25);
}

TEST(EmpiricalRiskSu, ZeroModelZeroOne) {
  Rng rng(2);
  const auto s = random_sample(rng, 3, 0, 5, 1);
  EXPECT_NEAR(empirical_risk_su(constant_model(0), kId1, s.pairs, s.unlabeled, make_priors(0.7),
                                loss_of(LossKind::kZeroOne)),
              0.58 * (-2.5) + 1.75, 1e-14);
}

TEST(EmpiricalRiskSu, SinglePairSingleUnlabeledByHand) {
  PairSet<double> pairs;
  pairs.similar.push_back({vec({1.0}), vec({-0.5})});
  UnlabeledSet<double> u{Matrix<double>::Constant(1, 1, 2.0)};
  const LinearModel<double> m{vec({0.8}), 0.1};
  const auto p = make_priors(0.7);
  // Squared loss: L~(z) = -z / 0.4 and L(z, -1) = (0.7 (z+1)^2 - 0.3 (z-1)^2) / (4 * 0.4).
  const double z1 = 0.9, z2 = -0.3, zu = 1.7;
  const double expected = 0.58 / 2 * (-z1 / 0.4 - z2 / 0.4) +
                          (0.7 * (zu + 1) * (zu + 1) - 0.3 * (zu - 1) * (zu - 1)) / 1.6;
  EXPECT_NEAR(empirical_risk_su(m, kId1, pairs, u, p, loss_of(LossKind::kSquared)), expected, 1e-12);
}

TEST(EmpiricalRiskSu, IgnoresDissimilarAndRequiresData) {
  Rng rng(3);
  auto s = random_sample(rng, 2, 3, 4, 2);
  const auto id = FeatureMap<double>::identity(2);
  const LinearModel<double> m{vec({0.3, -0.7}), 0.2};
  const auto p = make_priors(0.7);
  const auto l = loss_of(LossKind::kDoubleHinge);
  const double with = empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l);
  s.pairs.dissimilar.clear();
  EXPECT_EQ(with, empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l));
  try {
    empirical_risk_su(m, id, s.pairs, UnlabeledSet<double>{}, p, l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyData);
  }
  s.pairs.similar.clear();
  EXPECT_THROW(empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l), Error);
}

TEST(EmpiricalRiskDu, ZeroModelIsSampleSizeIndependent) {
  Rng rng(4);
  const auto small = random_sample(rng, 0, 1, 1, 1);
  const auto large = random_sample(rng, 0, 100, 100, 1);
  const auto p = make_priors(0.7);
  const auto sq = loss_of(LossKind::kSquared);
  EXPECT_DOUBLE_EQ(empirical_risk_du(constant_model(0), kId1, small.pairs, small.unlabeled, p, sq), 0.25);
  EXPECT_DOUBLE_EQ(empirical_risk_du(constant_model(0), kId1, large.pairs, large.unlabeled, p, sq), 0.25);
  EXPECT_THROW(empirical_risk_du(constant_model(0), kId1, PairSet<double>{}, large.unlabeled, p, sq), Error);
}

TEST(EmpiricalRiskSd, ConstantModels) {
  Rng rng(5);
  const auto s = random_sample(rng, 5, 6, 0, 1);
  const auto p = make_priors(0.7);
  EXPECT_DOUBLE_EQ(empirical_risk_sd(constant_model(0), kId1, s.pairs, p, loss_of(LossKind::kSquared)), 0.25);
  EXPECT_NEAR(empirical_risk_sd(constant_model(1), kId1, s.pairs, p, loss_of(LossKind::kZeroOne)), 0.3, 1e-14);
  EXPECT_NEAR(validation_risk_sd_zero_one(constant_model(1), kId1, s.pairs, p), 0.3, 1e-14);
  EXPECT_NEAR(validation_risk_sd_zero_one(constant_model(-1), kId1, s.pairs, p), 0.7, 1e-14);
  EXPECT_THROW(empirical_risk_sd(constant_model(0), kId1, PairSet<double>{}, p, loss_of(LossKind::kSquared)), Error);
}

TEST(EmpiricalRisks, MatchDirectSummationOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Index k = 1 + Index(rng.below(4));
    const auto s = random_sample(rng, 1 + int(rng.below(5)), 1 + int(rng.below(5)), 1 + int(rng.below(6)), k);
    LinearModel<double> m{Vector<double>(k), rng.normal()};
    for (Index i = 0; i < k; ++i) m.weights[i] = rng.normal();
    const double pi = trial % 2 ? 0.7 : 0.25;
    const auto p = make_priors(pi);
    const auto id = FeatureMap<double>::identity(k);
    for (LossKind kind : {LossKind::kSquared, LossKind::kDoubleHinge, LossKind::kZeroOne}) {
      const auto l = loss_of(kind);
      const Oracle o{p, l, m};
      EXPECT_NEAR(empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l), o.su(s), 1e-10);
      EXPECT_NEAR(empirical_risk_du(m, id, s.pairs, s.unlabeled, p, l), o.du(s), 1e-10);
      EXPECT_NEAR(empirical_risk_sd(m, id, s.pairs, p, l), o.sd(s), 1e-10);
    }
  }
}

TEST(EmpiricalRiskSdu, DegenerateAndEqualWeights) {
  Rng rng(7);
  const auto s = random_sample(rng, 3, 4, 5, 2);
  const auto id = FeatureMap<double>::identity(2);
  const LinearModel<double> m{vec({0.5, -1.1}), 0.3};
  const auto p = make_priors(0.7);
  const auto l = loss_of(LossKind::kSquared);
  EXPECT_EQ(empirical_risk_sdu(m, id, s.pairs, s.unlabeled, p, l, GammaWeights<double>{1, 0, 0}),
            empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l));
  EXPECT_EQ(empirical_risk_sdu(m, id, s.pairs, s.unlabeled, p, l, GammaWeights<double>{0, 0, 1}),
            empirical_risk_sd(m, id, s.pairs, p, l));
  const auto third = GammaWeights<double>::make(1.0 / 3, 1.0 / 3, 1.0 / 3);
  EXPECT_NEAR(empirical_risk_sdu(LinearModel<double>::zero(2), id, s.pairs, s.unlabeled, p, l, third), 0.25, 1e-15);
}

TEST(EmpiricalRiskSdu, IsTheAffineCombination) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sample(rng, 3, 3, 6, 3);
    const auto id = FeatureMap<double>::identity(3);
    const LinearModel<double> m{Vector<double>::Random(3), rng.normal()};
    const auto p = make_priors(0.8);
    const auto l = loss_of(LossKind::kDoubleHinge);
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double total = a + b + c;
    const GammaWeights<double> g{a / total, b / total, 1 - a / total - b / total};
    const double expected = g.g1 * empirical_risk_su(m, id, s.pairs, s.unlabeled, p, l) +
                            g.g2 * empirical_risk_du(m, id, s.pairs, s.unlabeled, p, l) +
                            g.g3 * empirical_risk_sd(m, id, s.pairs, p, l);
    EXPECT_NEAR(empirical_risk_sdu(m, id, s.pairs, s.unlabeled, p, l, g), expected, 1e-12);
  }
}

TEST(EmpiricalRiskSdu, SkipsZeroWeightComponents) {
  Rng rng(9);
  auto s = random_sample(rng, 0, 4, 5, 1);
  // SD needs similar pairs; DU alone does not.
  EXPECT_NO_THROW(empirical_risk_sdu(constant_model(0.2), kId1, s.pairs, s.unlabeled, make_priors(0.7),
                                     loss_of(LossKind::kSquared), GammaWeights<double>{0, 1, 0}));
  EXPECT_THROW(empirical_risk_sdu(constant_model(0.2), kId1, s.pairs, s.unlabeled, make_priors(0.7),
                                  loss_of(LossKind::kSquared), GammaWeights<double>{0, 0.5, 0.5}),
               Error);
}

TEST(GammaWeights, Validation) {
  EXPECT_THROW(GammaWeights<double>::make(0.5, 0.6, 0), Error);
  EXPECT_THROW(GammaWeights<double>::make(-0.1, 0.6, 0.5), Error);
  EXPECT_NO_THROW(GammaWeights<double>::make(0.2, 0.3, 0.5));
}

TEST(GammaForVariant, Examples) {
  auto eq = [](GammaWeights<double> g, double a, double b, double c) {
    EXPECT_DOUBLE_EQ(g.g1, a);
    EXPECT_DOUBLE_EQ(g.g2, b);
    EXPECT_DOUBLE_EQ(g.g3, c);
  };
  eq(gamma_for_variant(Variant::kSddu, 0.2), 0, 0.2, 0.8);
  eq(gamma_for_variant(Variant::kSdsu, 1.0), 1, 0, 0);
  eq(gamma_for_variant(Variant::kSudu, 0.5), 0.5, 0.5, 0);
  EXPECT_THROW(gamma_for_variant(Variant::kSddu, 1.5), Error);
  EXPECT_THROW(gamma_for_variant(Variant::kSddu, -0.1), Error);
}

TEST(GammaForVariant, AlwaysSumsToOne) {
  Rng rng(10);
  for (int i = 0; i < 300; ++i) {
    const double g = rng.uniform();
    for (Variant v : {Variant::kSdsu, Variant::kSddu, Variant::kSudu}) {
      const auto w = gamma_for_variant(v, g);
      EXPECT_NEAR(w.g1 + w.g2 + w.g3, 1.0, 1e-12);
    }
  }
}

TEST(PopulationRisk, TwoPointExample) {
  DiscreteDistribution<double> d;
  d.support = Matrix<double>(2, 1);
  d.support << 1.0, -1.0;
  d.p_plus = vec({1, 0});
  d.p_minus = vec({0, 1});
  d.priors = make_priors(0.7);
  const LinearModel<double> m{vec({0.5}), 0};
  const auto sq = loss_of(LossKind::kSquared);
  EXPECT_NEAR(population_risk(d, m, kId1, sq), 0.0625, 1e-15);
  const auto r = population_pairwise_risks(d, m, kId1, sq);
  EXPECT_NEAR(r.su, 0.0625, 1e-12);
  EXPECT_NEAR(r.du, 0.0625, 1e-12);
  EXPECT_NEAR(r.sd, 0.0625, 1e-12);
  EXPECT_EQ(population_risk(d, m, kId1, loss_of(LossKind::kZeroOne)), 0.0);
}

TEST(PopulationRisk, ZeroModelSquaredIsQuarter) {
  Rng rng(11);
  const auto d = random_distribution(rng, 6, 2, 0.35);
  const auto m = LinearModel<double>::zero(2);
  const auto id = FeatureMap<double>::identity(2);
  EXPECT_NEAR(population_risk(d, m, id, loss_of(LossKind::kSquared)), 0.25, 1e-15);
  const auto r = population_pairwise_risks(d, m, id, loss_of(LossKind::kSquared));
  EXPECT_NEAR(r.su, 0.25, 1e-14);
  EXPECT_NEAR(r.du, 0.25, 1e-14);
  EXPECT_NEAR(r.sd, 0.25, 1e-14);
}

TEST(PopulationPairwiseRisks, EqualPopulationRiskOnRandomDistributions) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 1 + Index(rng.below(3));
    const double pi = rng.uniform(0.05, 0.95);
    if (std::abs(pi - 0.5) < 0.01) continue;
    const auto d = random_distribution(rng, 1 + Index(rng.below(10)), k, pi);
    LinearModel<double> m{Vector<double>(k), rng.normal()};
    for (Index i = 0; i < k; ++i) m.weights[i] = 2 * rng.normal();
    const auto id = FeatureMap<double>::identity(k);
    for (LossKind kind : {LossKind::kSquared, LossKind::kDoubleHinge, LossKind::kZeroOne, LossKind::kHinge}) {
      const double truth = population_risk(d, m, id, loss_of(kind));
      const auto r = population_pairwise_risks(d, m, id, loss_of(kind));
      EXPECT_NEAR(r.su, truth, 1e-10);
      EXPECT_NEAR(r.du, truth, 1e-10);
      EXPECT_NEAR(r.sd, truth, 1e-10);
    }
  }
}

TEST(DiscreteDistribution, Validation) {
  DiscreteDistribution<double> d;
  d.support = Matrix<double>::Zero(2, 1);
  d.p_plus = vec({0.5, 0.6});
  d.p_minus = vec({0.5, 0.5});
  d.priors = make_priors(0.7);
  EXPECT_THROW(d.validate(), Error);
  d.p_plus = vec({1.2, -0.2});
  EXPECT_THROW(d.validate(), Error);
  d.p_plus = vec({1.0});
  EXPECT_THROW(d.validate(), Error);
}

TEST(DiscreteDistribution, PointwiseDensitiesAreProbabilities) {
  Rng rng(13);
  const auto d = random_distribution(rng, 7, 1, 0.7);
  EXPECT_NEAR(d.pointwise_similar().sum(), 1.0, 1e-12);
  EXPECT_NEAR(d.pointwise_dissimilar().sum(), 1.0, 1e-12);
  EXPECT_NEAR(d.marginal().sum(), 1.0, 1e-12);
}
