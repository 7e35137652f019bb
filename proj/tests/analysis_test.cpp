#include "nonlocal_flow/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "nonlocal_flow/dynamics.hpp"
#include "nonlocal_flow/errors.hpp"
#include "nonlocal_flow/lyapunov.hpp"
#include "test_support.hpp"

namespace nonlocal_flow {
namespace {

using testing::atoms;

LyapunovSpec square_with_sign(int sign) {
  LyapunovSpec s = *lyapunov_catalog_entry("square");
  s.sign = sign;
  return s;
}

TEST(LyapunovValueTest, Examples) {
  EXPECT_EQ(lyapunov_value(atoms({{2.0, 1.0}}), square_with_sign(1)), 4.0);
  EXPECT_EQ(lyapunov_value(atoms({{0.5, 1.0}}), square_with_sign(-1)), -0.25);
}

TEST(LyapunovCatalogTest, NamesAndLookup) {
  const auto names = lyapunov_catalog_names();
  EXPECT_EQ(names, (std::vector<std::string>{"mass", "square", "cube", "quartic", "exp"}));
  EXPECT_FALSE(lyapunov_catalog_entry("cube_root"));
  for (const auto& n : names) {
    const auto s = lyapunov_catalog_entry(n);
    ASSERT_TRUE(s);
    // phi_prime is the derivative of phi: central differences.
    for (double z : {-1.5, -0.3, 0.2, 0.9, 2.5}) {
      const double h = 1e-5;
      const double fd = (s->phi(z + h) - s->phi(z - h)) / (2 * h);
      EXPECT_NEAR(s->phi_prime(z), fd, 1e-7 * (1 + std::abs(fd))) << n << " at " << z;
    }
  }
}

TEST(LyapunovCatalogTest, AdmissibilityFollowsMonotoneDerivative) {
  const HypothesisClass h1{Hypothesis::H1, 1.0, 3.0};
  const HypothesisClass h2{Hypothesis::H2, 0.0, 1.0};
  const HypothesisClass h3{Hypothesis::H3, -2.0, 0.0};
  const auto cube = *lyapunov_catalog_entry("cube");
  EXPECT_TRUE(phi_prime_nondecreasing(cube, h1));
  EXPECT_TRUE(phi_prime_nondecreasing(cube, h2));
  EXPECT_FALSE(phi_prime_nondecreasing(cube, h3));
  EXPECT_EQ(admissible_catalog(h3).size(), 4u);
  EXPECT_EQ(admissible_catalog(h2).size(), 5u);
  for (const auto& s : admissible_catalog(h2)) EXPECT_EQ(s.sign, -1);
  for (const auto& s : admissible_catalog(h1)) EXPECT_EQ(s.sign, 1);

  LyapunovSpec concave{"neg_square", [](double z) { return -z * z; },
                       [](double z) { return -2 * z; }, 1};
  EXPECT_FALSE(phi_prime_nondecreasing(concave, h1));
}

TEST(LyapunovDerivativeTest, FiniteDifferencesMatchTheDissipationIdentity) {
  // dE/dt = sign * sum w (Phi'(y) - Phi'(lambda)) (y - lambda) g(y), using
  // sum w y' = 0. Compare with central differences of the recorded series.
  const Ensemble e = atoms({{1.0, 0.25}, {1.5, 0.25}, {3.0, 0.5}});
  const HypothesisClass hyp = validate_hypothesis(e);
  const auto specs = admissible_catalog(hyp);
  StepControl c;
  c.record_every = 1e-3;
  c.t_max = 2.0;
  c.abs_tol = 1e-13;
  c.rel_tol = 1e-12;
  const TrajectoryRecord r = evolve(e, c, specs);
  for (const auto& spec : specs) {
    const auto& series = r.lyapunov(spec.name)->values;
    for (std::size_t k = 100; k + 1 < r.size(); k += 150) {
      const double fd = (series[k + 1] - series[k - 1]) / (r.times[k + 1] - r.times[k - 1]);
      const Ensemble& s = r.snapshots[k];
      const double lam = r.lambda_series[k];
      double analytic = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double y = s.values()[i];
        analytic += s.weights()[i] * (spec.phi_prime(y) - spec.phi_prime(lam)) *
                    (y - lam) * reaction_g(y);
      }
      analytic *= spec.sign;
      EXPECT_LE(analytic, 1e-14);
      EXPECT_NEAR(fd, analytic, 1e-5 * (1 + std::abs(analytic))) << spec.name;
    }
  }
}

TEST(CheckMonotoneTest, Examples) {
  const MonotoneReport constant = check_monotone(std::vector<double>(5, 3.0), 0.0);
  EXPECT_TRUE(constant.ok);
  EXPECT_LE(constant.worst_violation, 0.0);

  EXPECT_TRUE(check_monotone(std::vector<double>{5, 4, 3, 2}, 0.0).ok);

  const MonotoneReport jump = check_monotone(std::vector<double>{3, 2, 3, 1}, 1e-9);
  EXPECT_FALSE(jump.ok);
  EXPECT_EQ(jump.worst_violation, 1.0);
  EXPECT_EQ(jump.worst_index, 1u);

  EXPECT_TRUE(check_monotone(std::vector<double>{1.0, 1.0 + 1e-10}, 1e-9).ok);
  EXPECT_TRUE(check_monotone(std::vector<double>{1.0}, 0.0).ok);
}

TEST(LyapunovMonotonicityTest, CatalogIsNonIncreasingUnderEachHypothesis) {
  const Ensemble cases[] = {
      atoms({{1.0, 0.25}, {1.5, 0.25}, {3.0, 0.5}}),
      atoms({{0.1, 0.3}, {0.45, 0.3}, {0.8, 0.4}}),
      atoms({{-2.0, 0.3}, {-0.2, 0.3}, {0.0, 0.4}}),
  };
  for (const Ensemble& e : cases) {
    const HypothesisClass hyp = validate_hypothesis(e);
    const auto specs = admissible_catalog(hyp);
    const TrajectoryRecord r = evolve(e, StepControl{}, specs);
    for (const auto& s : specs) {
      const auto& v = r.lyapunov(s.name)->values;
      const MonotoneReport m = check_monotone(v, 1e-7 * (1 + std::abs(v.front())));
      EXPECT_TRUE(m.ok) << to_string(hyp.tag) << " " << s.name << " " << m.worst_violation;
    }
    // Phi(z) = z is the mass: constant, not just non-increasing.
    const auto& m = r.lyapunov("mass")->values;
    for (double x : m) EXPECT_NEAR(x, m.front(), 1e-12);
  }
}

TEST(EstimateLimitsTest, EquilibriumRecord) {
  const TrajectoryRecord r = reference_evolve(atoms({{2.0, 1.0}}), 0.1, 1.0, 0.1);
  const LimitEstimate lim = estimate_limits(r);
  EXPECT_EQ(lim.l_g, -2.0);
  EXPECT_EQ(lim.l_f, -4.0);
  EXPECT_TRUE(lim.converged);
}

TEST(EstimateLimitsTest, TwoLevelRunMatchesPredictedLimit) {
  const TrajectoryRecord r = evolve(atoms({{1.5, 0.5}, {3.0, 0.5}}), StepControl{});
  const LimitEstimate lim = estimate_limits(r);
  // g(2.25) = -2.8125, f(2.25) = 2.25 * g(2.25) = -6.328125 on measure 1.
  EXPECT_NEAR(lim.l_g, -2.8125, 1e-8);
  EXPECT_NEAR(lim.l_f, -6.328125, 1e-8);
  EXPECT_NEAR(lim.l_f / lim.l_g, 2.25, 1e-8);
  EXPECT_NEAR(lim.l_f / lim.l_g, r.lambda_series.back(), 1e-8);
  EXPECT_TRUE(lim.converged);
}

TEST(EstimateLimitsTest, SymmetricH2IntegralsVanish) {
  const TrajectoryRecord r = evolve(atoms({{0.25, 0.5}, {0.75, 0.5}}), StepControl{});
  const LimitEstimate lim = estimate_limits(r);
  EXPECT_LT(std::abs(lim.l_g), 1e-8);
  EXPECT_LT(std::abs(lim.l_f), 1e-8);
}

TEST(EstimateLimitsTest, NeedsTenSamples) {
  const TrajectoryRecord r = evolve(atoms({{2.0, 1.0}}), StepControl{});
  EXPECT_THROW(estimate_limits(r), std::invalid_argument);
}

TEST(EstimateLimitsTest, MovingSeriesIsNotConverged) {
  StepControl c;
  c.t_max = 1.0;
  c.record_every = 0.05;
  const TrajectoryRecord r = evolve(atoms({{1.5, 0.5}, {3.0, 0.5}}), c);
  EXPECT_FALSE(estimate_limits(r).converged);
}

TEST(PredictOmegaLimitTest, H1Examples) {
  const Ensemble a = atoms({{1.0, 0.5}, {2.0, 0.5}});
  const OmegaPrediction pa = predict_omega_limit(a, validate_hypothesis(a));
  EXPECT_EQ(pa.kind, OmegaKind::H1Step);
  EXPECT_EQ(*pa.lambda_infinity, 2.0);
  ASSERT_EQ(pa.pieces.size(), 2u);
  EXPECT_EQ(pa.pieces[0].level, 1.0);
  EXPECT_EQ(pa.pieces[0].measure, 0.5);
  EXPECT_EQ(pa.pieces[1].level, 2.0);
  EXPECT_EQ(pa.pieces[1].measure, 0.5);

  const Ensemble b = atoms({{1.5, 0.5}, {3.0, 0.5}});
  const OmegaPrediction pb = predict_omega_limit(b, validate_hypothesis(b));
  EXPECT_EQ(*pb.lambda_infinity, 2.25);
  ASSERT_EQ(pb.pieces.size(), 1u);
  EXPECT_EQ(pb.pieces[0].level, 2.25);
  EXPECT_EQ(pb.pieces[0].measure, 1.0);
  EXPECT_EQ(*pb.level_for(1.5), 2.25);
}

TEST(PredictOmegaLimitTest, H3Example) {
  const Ensemble e = atoms({{-1.0, 0.5}, {0.0, 0.5}});
  const OmegaPrediction p = predict_omega_limit(e, validate_hypothesis(e));
  EXPECT_EQ(p.kind, OmegaKind::H3Step);
  EXPECT_EQ(*p.lambda_infinity, -1.0);
  ASSERT_EQ(p.pieces.size(), 2u);
  EXPECT_EQ(p.pieces[0].level, -1.0);
  EXPECT_EQ(p.pieces[0].measure, 0.5);
  EXPECT_EQ(p.pieces[1].level, 0.0);
  EXPECT_EQ(p.pieces[1].measure, 0.5);
  EXPECT_EQ(*p.level_for(0.0), 0.0);
}

TEST(PredictOmegaLimitTest, PiecesCarryTheMass) {
  std::mt19937_64 rng(11);
  const std::pair<double, double> ranges[] = {{1.0, 5.0}, {-4.0, 0.0}};
  for (int trial = 0; trial < 200; ++trial) {
    const auto [lo, hi] = ranges[trial % 2];
    auto list = testing::random_ensemble(rng, 1 + trial % 6, lo, hi).atoms();
    list.push_back({trial % 2 == 0 ? 1.0 : 0.0, 0.1});
    const Ensemble e(list);
    const OmegaPrediction p = predict_omega_limit(e, validate_hypothesis(e));
    double total = 0.0;
    for (const auto& pc : p.pieces) total += pc.level * pc.measure;
    EXPECT_NEAR(total, mass(e), 1e-12 * (1 + std::abs(mass(e))));
    if (p.kind == OmegaKind::H1Step) EXPECT_GT(*p.lambda_infinity, 1.0);
    if (p.kind == OmegaKind::H3Step) EXPECT_LT(*p.lambda_infinity, 0.0);
  }
}

TEST(PredictOmegaLimitTest, H2IsPartial) {
  const Ensemble e = atoms({{0.0, 0.25}, {0.4, 0.5}, {1.0, 0.25}});
  const OmegaPrediction p = predict_omega_limit(e, validate_hypothesis(e));
  EXPECT_EQ(p.kind, OmegaKind::H2Partial);
  EXPECT_FALSE(p.lambda_infinity);
  EXPECT_EQ(p.pieces.size(), 2u);
  EXPECT_FALSE(p.level_for(0.4));
  EXPECT_EQ(*p.level_for(1.0), 1.0);
}

TEST(PredictOmegaLimitTest, DegenerateSupport) {
  const Ensemble ones = atoms({{1.0, 1.0}});
  EXPECT_THROW(predict_omega_limit(ones, {Hypothesis::H1, 1.0, 1.0}), DegenerateSupport);
  const Ensemble zeros = atoms({{0.0, 1.0}});
  EXPECT_THROW(predict_omega_limit(zeros, {Hypothesis::H3, 0.0, 0.0}), DegenerateSupport);
}

TEST(ClassifyTerminalTest, Examples) {
  EXPECT_EQ(classify_terminal(atoms({{1e-9, 0.5}, {1 - 1e-9, 0.5}}), 0.5, 1e-4),
            (std::vector<Bucket>{Bucket::Zero, Bucket::One}));
  EXPECT_EQ(classify_terminal(atoms({{2.2500001, 1.0}}), 2.25, 1e-4),
            (std::vector<Bucket>{Bucket::LambdaInf}));
  EXPECT_EQ(classify_terminal(atoms({{0.5, 1.0}}), std::nullopt, 1e-4),
            (std::vector<Bucket>{Bucket::Ambiguous}));
}

TEST(ClassifyTerminalTest, TiesAreAmbiguous) {
  EXPECT_EQ(classify_terminal(atoms({{1.0, 1.0}}), 1.00005, 1e-4),
            (std::vector<Bucket>{Bucket::Ambiguous}));
  EXPECT_EQ(classify_terminal(atoms({{1.0, 1.0}}), 1.001, 1e-4),
            (std::vector<Bucket>{Bucket::One}));
  EXPECT_EQ(classify_terminal(atoms({{0.3, 1.0}}), std::nullopt, 1e-4),
            (std::vector<Bucket>{Bucket::Ambiguous}));
}

TEST(H2UniquenessTest, Examples) {
  const Ensemble three = atoms({{0.1, 0.3}, {0.9, 0.3}, {0.5, 0.4}});
  EXPECT_TRUE(check_h2_uniqueness(
                  three, std::vector<Bucket>{Bucket::Zero, Bucket::One, Bucket::LambdaInf}, 0.4)
                  .ok);

  // Equal initial values are one characteristic.
  const Ensemble same(std::vector<Atom>{{0.3, 0.5}, {0.3, 0.5}});
  EXPECT_TRUE(check_h2_uniqueness(
                  same, std::vector<Bucket>{Bucket::LambdaInf, Bucket::LambdaInf}, 0.3)
                  .ok);

  const Ensemble two = atoms({{0.3, 0.5}, {0.4, 0.5}});
  const UniquenessReport bad = check_h2_uniqueness(
      two, std::vector<Bucket>{Bucket::LambdaInf, Bucket::LambdaInf}, 0.35);
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.offending_values, (std::vector<double>{0.3, 0.4}));
}

TEST(H2UniquenessTest, Preconditions) {
  const Ensemble e = atoms({{0.3, 1.0}});
  EXPECT_THROW(check_h2_uniqueness(e, std::vector<Bucket>{Bucket::Zero}, 1.0),
               std::invalid_argument);
  EXPECT_THROW(check_h2_uniqueness(e, std::vector<Bucket>{}, 0.5), std::invalid_argument);
}

TEST(SandwichCheckTest, ConstantTrajectory) {
  const ScalarTrajectory y{{0, 1, 2, 3, 4, 5}, std::vector<double>(6, 2.0)};
  const std::vector<double> lambda(6, 2.0);
  const SandwichReport r = sandwich_check(y, lambda, 0.1);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.t_eps, 0.0);
  EXPECT_GT(r.min_lower_margin, 0.0);
  EXPECT_GT(r.min_upper_margin, 0.0);
}

TEST(SandwichCheckTest, ZeroEpsCollapsesTheBracket) {
  const ScalarTrajectory y{{0, 1, 2, 3}, std::vector<double>(4, 2.0)};
  const std::vector<double> lambda(4, 2.0);
  const SandwichReport r = sandwich_check(y, lambda, 0.0);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.min_lower_margin, 0.0);
  EXPECT_EQ(r.min_upper_margin, 0.0);
}

TEST(SandwichCheckTest, NoSettlingTime) {
  const ScalarTrajectory y{{0, 1, 2, 3}, {2.0, 2.0, 2.0, 2.0}};
  const std::vector<double> lambda = {2.0, 3.0, 2.0, 3.0};
  EXPECT_THROW(sandwich_check(y, lambda, 0.1), NoSettlingTime);
  EXPECT_THROW(sandwich_check({{0.0}, {2.0}}, std::vector<double>{2.0}, 0.1), NoSettlingTime);
}

TEST(SandwichCheckTest, TwoLevelRunIsBracketed) {
  const Ensemble e = atoms({{1.5, 0.5}, {3.0, 0.5}});
  StepControl c;
  c.record_every = 0.01;
  const TrajectoryRecord r = evolve(e, c);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const SandwichReport s = sandwich_check({r.times, r.atom_series(i)}, r.lambda_series, 0.05);
    EXPECT_TRUE(s.ok) << "atom " << i;
    EXPECT_GT(s.t_eps, 0.0);
    EXPECT_GE(s.min_lower_margin, 0.0);
    EXPECT_GE(s.min_upper_margin, 0.0);
  }
}

TEST(SandwichCheckTest, DetectsAnEscapingTrajectory) {
  // Y runs away from lambda_inf while lambda sits still: beta cannot follow.
  std::vector<double> t, y;
  for (int k = 0; k <= 50; ++k) {
    t.push_back(0.1 * k);
    y.push_back(2.0 + 0.02 * k);
  }
  const std::vector<double> lambda(t.size(), 2.0);
  const SandwichReport r = sandwich_check({t, y}, lambda, 0.05);
  EXPECT_FALSE(r.ok);
  EXPECT_LT(r.min_upper_margin, 0.0);
}

}  // namespace
}  // namespace nonlocal_flow
