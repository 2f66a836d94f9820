#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "mbdf/detectors.hpp"
#include "test_util.hpp"

using namespace mbdf;
using mbdf::test::random_gaussian;

namespace {

CVector random_symbols(int n, const Constellation& c, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
  CVector s(n);
  for (int j = 0; j < n; ++j) s(j) = c.point(pick(rng));
  return s;
}

// Independent enumeration over all N_T-tuples, odometer style.
CVector brute_force_ml(const CVector& r, const CMatrix& h, const Constellation& c) {
  const int n = static_cast<int>(h.cols());
  std::vector<std::size_t> idx(n, 0);
  CVector best(n), s(n);
  double best_d = std::numeric_limits<double>::infinity();
  while (true) {
    for (int j = 0; j < n; ++j) s(j) = c.point(idx[j]);
    const double d = (r - h * s).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = s;
    }
    int k = n - 1;
    while (k >= 0 && ++idx[k] == c.size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return best;
}

}  // namespace

TEST(Ml, NoiselessRecovery) {
  Rng rng(1);
  const auto c = Constellation::qpsk();
  for (int t = 0; t < 20; ++t) {
    const auto h = random_channel(3, 3, 0.0, rng);
    const CVector s = random_symbols(3, c, rng);
    EXPECT_EQ(detect_ml(transmit(h, s, rng), h.gains, c).symbols, s);
  }
}

TEST(Ml, MatchesBruteForce) {
  Rng rng(2);
  const auto c = Constellation::qpsk();
  const auto h = random_channel(2, 2, 0.5, rng);
  for (int t = 0; t < 200; ++t) {
    const CVector r = transmit(h, random_symbols(2, c, rng), rng);
    EXPECT_EQ(detect_ml(r, h.gains, c).symbols, brute_force_ml(r, h.gains, c));
  }
}

TEST(Ml, SearchSpaceGuard) {
  Rng rng(3);
  const auto h = random_channel(8, 8, 0.1, rng);
  EXPECT_THROW(detect_ml(CVector::Zero(8), h.gains, Constellation::qam16()), SearchSpaceError);
}

TEST(MbDf, NoiselessRecoveryAnyL) {
  Rng rng(4);
  const auto c = Constellation::qpsk();
  for (int l : {1, 2, 4, 8}) {
    const auto h = random_channel(4, 4, 0.0, rng);
    const auto specs = make_sic_branches(fixed_orderings(4, l), 1.0);
    const FilterBank bank = design_perfect_feedback(h.gains, 0.0, specs);
    for (int t = 0; t < 20; ++t) {
      const CVector s = random_symbols(4, c, rng);
      EXPECT_EQ(detect_mb_mmse_df(transmit(h, s, rng), bank, specs, c).symbols, s) << "L=" << l;
    }
  }
}

TEST(MbDf, SingleBranchEqualsSic) {
  Rng rng(5);
  const auto c = Constellation::qpsk();
  int trials = 0;
  for (int ch = 0; ch < 50; ++ch) {
    const auto h = random_channel(4, 4, snr_to_noise_variance(8.0, 4, 1.0, 2), rng);
    const auto order = order_suboptimal(stream_mmse(h.gains, h.noise_variance), 1);
    const auto specs = make_sic_branches(order, 1.0);
    const FilterBank bank = design_perfect_feedback(h.gains, h.noise_variance, specs);
    for (int t = 0; t < 20; ++t, ++trials) {
      const CVector r = transmit(h, random_symbols(4, c, rng), rng);
      EXPECT_EQ(detect_mb_mmse_df(r, bank, specs, c).symbols,
                detect_sic(r, bank, specs[0], c).symbols);
    }
  }
  EXPECT_EQ(trials, 1000);
}

TEST(MbDf, BetaZeroEqualsLinear) {
  Rng rng(6);
  const auto c = Constellation::qpsk();
  for (int ch = 0; ch < 50; ++ch) {
    const auto h = random_channel(4, 4, snr_to_noise_variance(8.0, 4, 1.0, 2), rng);
    const auto specs = make_sic_branches(fixed_orderings(4, 4), 0.0);
    const FilterBank bank = design_perfect_feedback(h.gains, h.noise_variance, specs);
    Receiver lin({.kind = DetectorKind::linear, .branches = 1}, c);
    lin.prepare(h.gains, h.noise_variance);
    for (int t = 0; t < 20; ++t) {
      const CVector r = transmit(h, random_symbols(4, c, rng), rng);
      EXPECT_EQ(detect_mb_mmse_df(r, bank, specs, c).symbols, lin.detect(r).symbols);
    }
  }
}

TEST(MbDf, SelectionPicksSmallestMetric) {
  Rng rng(7);
  const auto c = Constellation::qpsk();
  const auto h = random_channel(4, 4, 0.3, rng);
  const auto specs = make_sic_branches(fixed_orderings(4, 4), 1.0);
  const FilterBank bank = design_perfect_feedback(h.gains, h.noise_variance, specs);
  for (int t = 0; t < 50; ++t) {
    const auto res = detect_mb_mmse_df(transmit(h, random_symbols(4, c, rng), rng), bank, specs, c);
    for (int j = 0; j < 4; ++j) {
      const int b = res.chosen_branch[j];
      for (int l = 0; l < 4; ++l) {
        EXPECT_LE(res.metric(j, b), res.metric(j, l));
        if (l < b) {
          EXPECT_LT(res.metric(j, b), res.metric(j, l));
        }
      }
      EXPECT_EQ(res.symbols(j), c.slice(res.soft(j, b)));
    }
  }
}

TEST(MbDf, FullAndReducedMetricsAgree) {
  Rng rng(12);
  const auto c = Constellation::qpsk();
  DetectorConfig red{.kind = DetectorKind::mbdf, .branches = 4};
  DetectorConfig full = red;
  full.immse = ImmseForm::full;
  Receiver a(red, c), b(full, c);
  int same = 0, total = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto h = random_channel(4, 4, snr_to_noise_variance(12.0, 4, 1.0, 2), rng);
    a.prepare(h.gains, h.noise_variance);
    b.prepare(h.gains, h.noise_variance);
    const CVector r = transmit(h, random_symbols(4, c, rng), rng);
    const auto da = a.detect(r), db = b.detect(r);
    for (int j = 0; j < 4; ++j, ++total) same += da.chosen_branch[j] == db.chosen_branch[j];
  }
  RecordProperty("agreement", std::to_string(same) + "/" + std::to_string(total));
  EXPECT_GE(same, 0.95 * total) << same << " of " << total;
}

TEST(MbDf, MismatchedInputs) {
  Rng rng(8);
  const auto c = Constellation::qpsk();
  const auto h = random_channel(3, 3, 0.1, rng);
  const auto specs = make_sic_branches(fixed_orderings(3, 2), 1.0);
  const FilterBank bank = design_perfect_feedback(h.gains, 0.1, specs);
  EXPECT_THROW(detect_mb_mmse_df(CVector::Zero(4), bank, specs, c), InputShapeError);
  const auto one = make_sic_branches(fixed_orderings(3, 1), 1.0);
  EXPECT_THROW(detect_mb_mmse_df(CVector::Zero(3), bank, one, c), ConfigError);
}

TEST(Linear, IdentityChannelNoiseless) {
  Rng rng(9);
  const auto c = Constellation::qam16();
  ChannelRealization h;
  h.gains = CMatrix::Identity(3, 3);
  h.noise_variance = 1e-12;
  Receiver lin({.kind = DetectorKind::linear, .branches = 1}, c);
  lin.prepare(h.gains, h.noise_variance);
  for (int t = 0; t < 20; ++t) {
    const CVector s = random_symbols(3, c, rng);
    const auto res = lin.detect(transmit(h, s, rng));
    EXPECT_EQ(res.symbols, s);
    EXPECT_LT((res.soft.col(0) - s).norm(), 1e-4);
  }
}

TEST(MultiStage, OneStageIsPlainDetector) {
  Rng rng(10);
  const auto c = Constellation::qpsk();
  const auto h = random_channel(4, 4, 0.2, rng);
  const auto orders = fixed_orderings(4, 2);
  const auto specs = make_sic_branches(orders, 1.0);
  std::vector<BranchSpec> later;
  for (int l = 0; l < 2; ++l) later.push_back(make_pic_branch(orders[l], l, 1.0));
  const FilterBank bank = design_perfect_feedback(h.gains, 0.2, specs);
  const FilterBank later_bank = design_perfect_feedback(h.gains, 0.2, later);
  for (int t = 0; t < 50; ++t) {
    const CVector r = transmit(h, random_symbols(4, c, rng), rng);
    const auto a = multi_stage(r, bank, specs, later_bank, later, c, 1);
    const auto b = detect_mb_mmse_df(r, bank, specs, c);
    EXPECT_EQ(a.symbols, b.symbols);
    EXPECT_EQ(a.soft, b.soft);
  }
  EXPECT_THROW(multi_stage(CVector::Zero(4), bank, specs, later_bank, later, c, 0), ConfigError);
}

TEST(MultiStage, ReversalMatrix) {
  RMatrix t(3, 3);
  t << 0, 0, 1, 0, 1, 0, 1, 0, 0;
  EXPECT_EQ(reversal_matrix(3), t);
}

TEST(Ordering, SuboptimalFirstBranch) {
  const std::vector<double> mmse{0.1, 0.4, 0.2};
  EXPECT_EQ(order_suboptimal(mmse, 1)[0], (std::vector<int>{0, 2, 1}));
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(order_suboptimal(flat, 1)[0], identity_ordering(4));
}

TEST(Ordering, SuboptimalBranchesDistinct) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto h = random_channel(4, 4, 0.2, rng);
    const auto orders = order_suboptimal(stream_mmse(h.gains, 0.2), 8);
    ASSERT_EQ(orders.size(), 8u);
    for (std::size_t a = 0; a < orders.size(); ++a) {
      EXPECT_TRUE(is_permutation(orders[a], 4));
      for (std::size_t b = 0; b < a; ++b) EXPECT_NE(orders[a], orders[b]);
    }
  }
}

TEST(Ordering, StreamMmseMatchesDefinition) {
  Rng rng(12);
  const CMatrix h = random_gaussian(4, 3, rng);
  const double nv = 0.3;
  const CMatrix r_inv = (h * h.adjoint() + nv * CMatrix::Identity(4, 4)).inverse();
  const auto m = stream_mmse(h, nv);
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(m[j], 1.0 - (h.col(j).adjoint() * r_inv * h.col(j))(0, 0).real(), 1e-12);
}

TEST(Ordering, OptimalTrivialAndTwoStream) {
  Rng rng(13);
  CMatrix h1(1, 1);
  h1(0, 0) = 0.7;
  EXPECT_EQ(order_optimal(h1, 0.1, 1, 1.0)[0], std::vector<int>{0});
  for (int t = 0; t < 20; ++t) {
    const CMatrix h = random_gaussian(2, 2, rng);
    const std::vector<int> a{0, 1}, b{1, 0};
    const double ca = ordering_cost(h, 0.1, a, 1.0), cb = ordering_cost(h, 0.1, b, 1.0);
    EXPECT_EQ(order_optimal(h, 0.1, 1, 1.0)[0], ca <= cb ? a : b);
  }
}

TEST(Ordering, OptimalFourStreamsAllPermutations) {
  Rng rng(14);
  const CMatrix h = random_gaussian(4, 4, rng);
  const auto all = order_optimal(h, 0.2, 24, kDefaultBeta);
  ASSERT_EQ(all.size(), 24u);
  double prev = -1.0;
  for (const auto& o : all) {
    const double cost = ordering_cost(h, 0.2, o, kDefaultBeta);
    EXPECT_GE(cost, prev - 1e-12);
    prev = cost;
  }
  EXPECT_THROW(order_optimal(h, 0.2, 25, kDefaultBeta), ConfigError);
  EXPECT_THROW(order_optimal(random_gaussian(6, 6, rng), 0.2, 2, 1.0), SearchSpaceError);
}

TEST(Ordering, JointSearchAgreesWithPerBranch) {
  Rng rng(15);
  for (int t = 0; t < 10; ++t) {
    const CMatrix h = random_gaussian(3, 3, rng);
    auto a = order_optimal(h, 0.2, 3, 1.0);
    auto b = order_optimal_joint(h, 0.2, 3, 1.0);
    double ca = 0, cb = 0;
    for (const auto& o : a) ca += ordering_cost(h, 0.2, o, 1.0);
    for (const auto& o : b) cb += ordering_cost(h, 0.2, o, 1.0);
    EXPECT_NEAR(ca, cb, 1e-12);
  }
}

TEST(Receiver, ConfigValidation) {
  DetectorConfig cfg;
  cfg.branches = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {.kind = DetectorKind::sic, .branches = 2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {.beta = 1.2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(Receiver({}, Constellation::qpsk()).detect(CVector::Zero(2)), ConfigError);
  EXPECT_EQ(detector_kind_from_string("mbdf"), DetectorKind::mbdf);
  EXPECT_THROW(detector_kind_from_string("zf"), ConfigError);
}
