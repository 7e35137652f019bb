#include "nonlocal_flow/measure_state.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nonlocal_flow/errors.hpp"
#include "test_support.hpp"

namespace nonlocal_flow {
namespace {

using testing::atoms;

TEST(BuildEnsembleTest, ExplicitAtomsKeepOrder) {
  const Ensemble e = build_ensemble(ExplicitAtoms{{{2.0, 0.5}, {1.0, 0.5}}});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e.atom(0), (Atom{2.0, 0.5}));
  EXPECT_EQ(e.atom(1), (Atom{1.0, 0.5}));
  EXPECT_EQ(e.domain_measure(), 1.0);
  EXPECT_EQ(e.time(), 0.0);
}

TEST(BuildEnsembleTest, SamplerUsesMidpoints) {
  AnalyticSampler s{[](double x) { return x; }, 0.0, 1.0, 2, 1.0};
  const Ensemble e = build_ensemble(s);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e.atom(0), (Atom{0.25, 0.5}));
  EXPECT_EQ(e.atom(1), (Atom{0.75, 0.5}));
}

TEST(BuildEnsembleTest, EqualExplicitValuesMerge) {
  const Ensemble e = build_ensemble(ExplicitAtoms{{{1.0, 0.3}, {1.0, 0.2}}});
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.atom(0).value, 1.0);
  EXPECT_DOUBLE_EQ(e.atom(0).weight, 0.5);
}

TEST(BuildEnsembleTest, MergeIsExactEqualityOnly) {
  const Ensemble e =
      build_ensemble(ExplicitAtoms{{{1.0, 0.3}, {std::nextafter(1.0, 2.0), 0.2}}});
  EXPECT_EQ(e.size(), 2u);
}

TEST(BuildEnsembleTest, PiecesMergeLikeAtoms) {
  const Ensemble e = build_ensemble(
      PiecewiseConstant{{{0.5, 0.25}, {0.2, 0.5}, {0.5, 0.25}}});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e.atom(0), (Atom{0.5, 0.5}));
  EXPECT_EQ(e.atom(1), (Atom{0.2, 0.5}));
}

TEST(BuildEnsembleTest, SamplerNeverMerges) {
  AnalyticSampler s{[](double) { return 0.5; }, 0.0, 2.0, 4, 3.0};
  const Ensemble e = build_ensemble(s);
  ASSERT_EQ(e.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(e.atom(i), (Atom{0.5, 0.75}));
  EXPECT_EQ(e.domain_measure(), 3.0);
}

TEST(BuildEnsembleTest, Errors) {
  EXPECT_THROW(build_ensemble(ExplicitAtoms{}), EmptySpec);
  EXPECT_THROW(build_ensemble(PiecewiseConstant{}), EmptySpec);
  EXPECT_THROW(build_ensemble(AnalyticSampler{[](double x) { return x; }, 0, 1, 0, 1}),
               EmptySpec);
  EXPECT_THROW(build_ensemble(ExplicitAtoms{{{1.0, 0.0}}}), NonpositiveWeight);
  EXPECT_THROW(build_ensemble(ExplicitAtoms{{{1.0, -1.0}}}), NonpositiveWeight);
  EXPECT_THROW(build_ensemble(ExplicitAtoms{{{NAN, 1.0}}}), FlowError);
}

TEST(ValidateHypothesisTest, Examples) {
  const HypothesisClass h1 = validate_hypothesis(atoms({{1.0, 0.5}, {2.0, 0.5}}));
  EXPECT_EQ(h1.tag, Hypothesis::H1);
  EXPECT_EQ(h1.interval_lo, 1.0);
  EXPECT_EQ(h1.interval_hi, 2.0);

  const HypothesisClass h2 = validate_hypothesis(atoms({{0.25, 0.5}, {1.0, 0.5}}));
  EXPECT_EQ(h2.tag, Hypothesis::H2);
  EXPECT_EQ(h2.interval_lo, 0.0);
  EXPECT_EQ(h2.interval_hi, 1.0);

  const HypothesisClass h3 = validate_hypothesis(atoms({{-1.5, 0.5}, {0.0, 0.5}}));
  EXPECT_EQ(h3.tag, Hypothesis::H3);
  EXPECT_EQ(h3.interval_lo, -1.5);
  EXPECT_EQ(h3.interval_hi, 0.0);
}

TEST(ValidateHypothesisTest, RejectsEquilibriaAndStraddling) {
  EXPECT_THROW(validate_hypothesis(atoms({{1.0, 1.0}})), NoHypothesis);
  EXPECT_THROW(validate_hypothesis(atoms({{0.0, 1.0}})), NoHypothesis);
  EXPECT_THROW(validate_hypothesis(atoms({{-1.0, 0.5}, {0.5, 0.5}})), NoHypothesis);
  EXPECT_THROW(validate_hypothesis(atoms({{0.0, 0.5}, {1.0, 0.5}})), NoHypothesis);
  EXPECT_THROW(validate_hypothesis(atoms({{0.5, 0.5}, {1.5, 0.5}})), NoHypothesis);
}

TEST(ValidateHypothesisTest, LyapunovSignAlternates) {
  EXPECT_EQ((HypothesisClass{Hypothesis::H1, 1, 2}).lyapunov_sign(), 1);
  EXPECT_EQ((HypothesisClass{Hypothesis::H2, 0, 1}).lyapunov_sign(), -1);
  EXPECT_EQ((HypothesisClass{Hypothesis::H3, -1, 0}).lyapunov_sign(), 1);
}

TEST(MassTest, Examples) {
  EXPECT_EQ(mass(atoms({{2.0, 0.5}, {1.0, 0.5}})), 1.5);
  EXPECT_EQ(mass(atoms({{0.0, 1.0}})), 0.0);
  EXPECT_EQ(mass(atoms({{-1.0, 0.5}, {-0.5, 0.5}})), -0.75);
}

// Split atom i into two equal-value halves placed at the end.
Ensemble split_atom(const Ensemble& e, std::size_t i) {
  auto list = e.atoms();
  const Atom a = list[i];
  list.erase(list.begin() + static_cast<long>(i));
  list.push_back({a.value, a.weight / 2});
  list.push_back({a.value, a.weight / 2});
  return Ensemble(std::move(list));
}

TEST(MeasureStatePropertyTest, HypothesisInvariantUnderPermutationAndSplit) {
  std::mt19937_64 rng(20261019);
  const std::pair<double, double> ranges[] = {{1.0, 4.0}, {0.0, 1.0}, {-3.0, 0.0}};
  for (int trial = 0; trial < 300; ++trial) {
    const auto [lo, hi] = ranges[trial % 3];
    const Ensemble e = testing::random_ensemble(rng, 1 + trial % 7, lo, hi);
    const HypothesisClass ref = validate_hypothesis(e);

    auto shuffled = e.atoms();
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const HypothesisClass p = validate_hypothesis(Ensemble(shuffled));
    EXPECT_EQ(p.tag, ref.tag);
    EXPECT_EQ(p.interval_lo, ref.interval_lo);
    EXPECT_EQ(p.interval_hi, ref.interval_hi);

    const HypothesisClass s = validate_hypothesis(split_atom(e, trial % e.size()));
    EXPECT_EQ(s.tag, ref.tag);
    EXPECT_EQ(s.interval_lo, ref.interval_lo);
    EXPECT_EQ(s.interval_hi, ref.interval_hi);
  }
}

TEST(MeasureStatePropertyTest, MassAndMeasureInvariantUnderSplitAndMerge) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const Ensemble e = testing::random_ensemble(rng, 1 + trial % 9, -5.0, 5.0);
    const Ensemble split = split_atom(e, trial % e.size());
    const double scale = 1.0 + std::abs(mass(e));
    EXPECT_NEAR(mass(split), mass(e), 4e-16 * scale * static_cast<double>(e.size()));
    EXPECT_NEAR(split.domain_measure(), e.domain_measure(), 1e-12 * e.domain_measure());

    const Ensemble merged = build_ensemble(ExplicitAtoms{split.atoms()});
    EXPECT_EQ(merged.size(), e.size());
    EXPECT_NEAR(mass(merged), mass(e), 4e-16 * scale * static_cast<double>(e.size()));
    EXPECT_NEAR(merged.domain_measure(), e.domain_measure(), 1e-12 * e.domain_measure());
  }
}

TEST(EnsembleTest, WithValuesKeepsWeights) {
  const Ensemble e = atoms({{1.5, 0.25}, {3.0, 0.75}});
  const Ensemble moved = Ensemble::with_values(e, {2.0, 2.5}, 1.25);
  EXPECT_EQ(moved.time(), 1.25);
  EXPECT_EQ(moved.atom(1), (Atom{2.5, 0.75}));
  EXPECT_EQ(moved.domain_measure(), e.domain_measure());
  EXPECT_THROW(Ensemble::with_values(e, {1.0}, 0.0), FlowError);
}

}  // namespace
}  // namespace nonlocal_flow
