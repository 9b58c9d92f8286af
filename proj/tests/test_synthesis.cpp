#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "ofbm/error.hpp"
#include "ofbm/io.hpp"
#include "ofbm/rng.hpp"
#include "ofbm/synthesis.hpp"
#include "support.hpp"

using namespace ofbm;
using ofbm::testing::corr2;
using ofbm::testing::mat2;

namespace {

ModelParams brownian() { return make_params({0.5}, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)); }

// H = (0.3, 0.6), variances (2, 0.5), rho = 0.4.
ModelParams reference_bivariate(const Eigen::MatrixXd& w) {
  return validate_params(HurstVector{{0.3, 0.6}}, IntrinsicCovariance{Eigen::Vector2d(2.0, 0.5), corr2(0.4)},
                         MixingMatrix{w});
}

// Exact covariance of the generator's linear map: (1/L) sum_f R_f R_f^T cos(2 pi f k / L), then mixed.
Eigen::MatrixXd generator_covariance(const CirculantGenerator& gen, long long k) {
  const std::size_t len = gen.report().embedding_size;
  const auto m = static_cast<Eigen::Index>(gen.params().dim());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t f = 0; f < len; ++f) {
    const Eigen::MatrixXd r = gen.spectral_factor(f);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(f) * static_cast<double>(k) /
                         static_cast<double>(len);
    acc += r * r.transpose() * std::cos(angle);
  }
  const auto& w = gen.params().mixing().entries;
  return w * (acc / static_cast<double>(len)) * w.transpose();
}

}  // namespace

TEST(MfgnCovariance, BrownianIncrementsAreWhite) {
  const auto p = brownian();
  EXPECT_DOUBLE_EQ(mfgn_cross_covariance(p, 0, 0, 0), 1.0);
  EXPECT_NEAR(mfgn_cross_covariance(p, 0, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(mfgn_cross_covariance(p, 0, 0, 7), 0.0, 1e-14);
}

TEST(MfgnCovariance, UnivariateLagOne) {
  const auto p = make_params({0.7}, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1));
  EXPECT_NEAR(mfgn_cross_covariance(p, 0, 0, 1), 0.31950791077289425937, 1e-14);
}

TEST(MfgnCovariance, MatchesHighPrecisionReference) {
  const auto p = reference_bivariate(Eigen::MatrixXd::Identity(2, 2));
  struct Row {
    long long k;
    double g11, g12, g22;
  };
  const Row rows[] = {
      {0, 2.0, 0.4, 0.5},
      {1, -0.48428343348960191765, -0.026786803385277033607, 0.074349177498517503399},
      {5, -0.025502847229942908684, -0.0030888319111456397226, 0.016637378777740429967},
      {-3, -0.053250813359057407105, -0.0054965045572923557312, 0.025260678848135773823},
  };
  for (const auto& r : rows) {
    const auto g = mfgn_covariance(p, r.k);
    EXPECT_NEAR(g(0, 0), r.g11, 1e-14) << "k=" << r.k;
    EXPECT_NEAR(g(0, 1), r.g12, 1e-14) << "k=" << r.k;
    EXPECT_NEAR(g(1, 0), r.g12, 1e-14) << "k=" << r.k;
    EXPECT_NEAR(g(1, 1), r.g22, 1e-14) << "k=" << r.k;
  }
}

TEST(MfgnCovariance, MixedMatchesHighPrecisionReference) {
  const auto p = reference_bivariate(ofbm::testing::mixing2());
  const auto g0 = mixed_mfgn_covariance(p, 0);
  EXPECT_NEAR(g0(0, 0), 2.525, 1e-14);
  EXPECT_NEAR(g0(0, 1), 0.1, 1e-14);
  EXPECT_NEAR(g0(1, 1), 0.425, 1e-14);
  const auto g2 = mixed_mfgn_covariance(p, 2);
  EXPECT_NEAR(g2(0, 0), -0.098202442985371282319, 1e-14);
  EXPECT_NEAR(g2(0, 1), 0.03461779422019480807, 1e-14);
  EXPECT_NEAR(g2(1, 1), 0.033884815371532707388, 1e-14);
}

TEST(MfgnCovariance, EvenInLag) {
  const auto p = reference_bivariate(ofbm::testing::mixing2());
  for (long long k = 0; k < 40; k += 3) EXPECT_TRUE(mfgn_covariance(p, k).isApprox(mfgn_covariance(p, -k), 0.0));
}

TEST(MfgnCovariance, IndexOutOfRange) {
  const auto p = brownian();
  try {
    (void)mfgn_cross_covariance(p, 0, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(CirculantGenerator, EmbeddingIsExactForSmallProblems) {
  Eigen::MatrixXd w3(3, 3);
  w3 << 1.0, 0.2, -0.3, 0.1, 0.9, 0.4, -0.2, 0.3, 1.1;
  const std::vector<ModelParams> models = {
      make_params({0.7}, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Constant(1, 1, 1.5)),
      make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2()),
      make_params({0.2, 0.5, 0.85}, ofbm::testing::toeplitz_corr(3, 0.3), w3),
  };
  for (const auto& p : models) {
    for (std::size_t n : {2u, 5u, 17u, 64u}) {
      const CirculantGenerator gen(p, n);
      ASSERT_EQ(gen.report().clipped_mass, 0.0);
      const auto len = gen.report().embedding_size;
      EXPECT_TRUE(std::has_single_bit(len));
      EXPECT_GE(len, 2 * (n - 1));
      for (long long k = 0; k < static_cast<long long>(n); ++k) {
        const double err = (generator_covariance(gen, k) - mixed_mfgn_covariance(p, k)).cwiseAbs().maxCoeff();
        EXPECT_LE(err, 1e-8) << "M=" << p.dim() << " n=" << n << " k=" << k;
      }
    }
  }
}

TEST(CirculantGenerator, ReportIsWellFormed) {
  const CirculantGenerator gen(make_params({0.4, 0.8}, corr2(0.5), ofbm::testing::mixing2()), 1000);
  EXPECT_EQ(gen.report().embedding_size, 2048u);
  EXPECT_GE(gen.report().clipped_mass, 0.0);
  EXPECT_LE(gen.report().clipped_mass, 1.0);
  EXPECT_GT(gen.report().min_spectral_eigenvalue, 0.0);
  const auto j = to_json(gen.report());
  EXPECT_EQ(j.at("embedding_size").get<std::size_t>(), 2048u);
}

TEST(CirculantGenerator, FailsWhenClippingExceedsTolerance) {
  // At the correlation bound with a near-unit exponent, no embedding up to the
  // size cap is nonnegative definite.
  const double r = rho_max(0.1, 0.98);
  try {
    const CirculantGenerator gen(make_params({0.1, 0.98}, corr2(r), Eigen::MatrixXd::Identity(2, 2)), 64);
    FAIL() << "expected EmbeddingFailed, clipped mass " << gen.report().clipped_mass;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmbeddingFailed);
  }
}

TEST(CirculantGenerator, RejectsTooShortRequests) {
  try {
    (void)CirculantGenerator(brownian(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Synthesis, DeterministicGivenSeed) {
  const auto p = make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2());
  const auto a = synthesize_mfgn(p, 300, 42);
  const auto b = synthesize_mfgn(p, 300, 42);
  const auto c = synthesize_mfgn(p, 300, 43);
  EXPECT_TRUE(a.path.data == b.path.data);
  EXPECT_FALSE(a.path.data == c.path.data);
  EXPECT_EQ(a.path.seed, 42u);
  EXPECT_EQ(a.path.kind, PathKind::Mfgn);
}

TEST(Synthesis, WhiteNoiseMoments) {
  const CirculantGenerator gen(brownian(), 256);
  constexpr int kReps = 10000;
  double s0 = 0.0, s1 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int r = 0; r < kReps; ++r) {
    const auto x = gen.sample(static_cast<std::uint64_t>(r) + 1);
    const double a = x(0, 100), b = x(0, 101);
    s0 += a * a;
    s1 += a * b;
    m3 += a * a * a;
    m4 += a * a * a * a;
  }
  const double n = kReps;
  EXPECT_NEAR(s0 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s1 / n, 0.0, 5.0 * std::sqrt(1.0 / n));
  EXPECT_NEAR(m3 / n, 0.0, 5.0 * std::sqrt(6.0 / n));
  EXPECT_NEAR(m4 / n, 3.0, 5.0 * std::sqrt(24.0 / n));
}

TEST(Synthesis, MixedPathIsGaussian) {
  const CirculantGenerator gen(make_params({0.3, 0.8}, corr2(0.4), ofbm::testing::mixing2()), 128);
  const Eigen::Matrix2d cov0 = mixed_mfgn_covariance(gen.params(), 0);
  constexpr int kReps = 10000;
  Eigen::Vector2d m3 = Eigen::Vector2d::Zero(), m4 = Eigen::Vector2d::Zero();
  for (int r = 0; r < kReps; ++r) {
    const auto x = gen.sample(static_cast<std::uint64_t>(r) + 1000);
    for (int c = 0; c < 2; ++c) {
      const double z = x(c, 60) / std::sqrt(cov0(c, c));
      m3(c) += z * z * z;
      m4(c) += z * z * z * z;
    }
  }
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(m3(c) / kReps, 0.0, 5.0 * std::sqrt(6.0 / kReps));
    EXPECT_NEAR(m4(c) / kReps, 3.0, 5.0 * std::sqrt(24.0 / kReps));
  }
}

TEST(Synthesis, DistinctSeedsAreUncorrelated) {
  const CirculantGenerator gen(brownian(), 4096);
  const Eigen::VectorXd a = gen.sample(1).row(0).transpose();
  const Eigen::VectorXd b = gen.sample(2).row(0).transpose();
  const double corr = (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) /
                      std::sqrt((a.array() - a.mean()).square().sum() * (b.array() - b.mean()).square().sum());
  EXPECT_LT(std::abs(corr), 5.0 / std::sqrt(4096.0));
}

TEST(Synthesis, MfbmIsCumulativeSumOfMfgn) {
  const auto p = make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2());
  const CirculantGenerator gen(p, 200);
  const auto x = gen.mfgn(9);
  const auto b = gen.mfbm(9);
  EXPECT_EQ(b.kind, PathKind::Mfbm);
  EXPECT_EQ(b.data.cols(), 200);
  EXPECT_TRUE(b.data.col(0) == x.data.col(0));
  for (Eigen::Index t = 1; t < 200; ++t)
    EXPECT_LE((b.data.col(t) - b.data.col(t - 1) - x.data.col(t)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(synthesize_mfbm(p, 200, 9).data == b.data);
}

TEST(Synthesis, BrownianPathVarianceGrowsLinearly) {
  const CirculantGenerator gen(brownian(), 64);
  constexpr int kReps = 10000;
  double v15 = 0.0, v63 = 0.0;
  for (int r = 0; r < kReps; ++r) {
    const auto b = gen.mfbm(static_cast<std::uint64_t>(r) + 77).data;
    v15 += b(0, 15) * b(0, 15);
    v63 += b(0, 63) * b(0, 63);
  }
  // Var of a Gaussian variance estimate: 2 sigma^4 / n.
  EXPECT_NEAR(v15 / kReps, 16.0, 5.0 * 16.0 * std::sqrt(2.0 / kReps));
  EXPECT_NEAR(v63 / kReps, 64.0, 5.0 * 64.0 * std::sqrt(2.0 / kReps));
}

TEST(Synthesis, SelfSimilarScaling) {
  // Var B(2t) = 2^{2H} Var B(t).
  const double h = 0.7;
  const CirculantGenerator gen(make_params({h}, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)), 128);
  constexpr int kReps = 6000;
  double v_t = 0.0, v_2t = 0.0;
  for (int r = 0; r < kReps; ++r) {
    const auto b = gen.mfbm(static_cast<std::uint64_t>(r) + 5).data;
    v_t += b(0, 31) * b(0, 31);
    v_2t += b(0, 63) * b(0, 63);
  }
  EXPECT_NEAR(v_t / kReps, std::pow(32.0, 2 * h), 5.0 * std::pow(32.0, 2 * h) * std::sqrt(2.0 / kReps));
  const double ratio = v_2t / v_t;
  // The two estimates are positively correlated, so this band is conservative.
  EXPECT_NEAR(ratio, std::pow(2.0, 2 * h), 5.0 * std::pow(2.0, 2 * h) * std::sqrt(4.0 / kReps));
}

TEST(Synthesis, BatchIsIndependentOfThreadCount) {
  const CirculantGenerator gen(make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2()), 500);
  const std::vector<std::uint64_t> seeds = {5, 1, 99, 7, 12, 3};
  const auto one = synthesize_batch(gen, seeds, PathKind::Mfbm, 1);
  const auto four = synthesize_batch(gen, seeds, PathKind::Mfbm, 4);
  ASSERT_EQ(one.size(), seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_TRUE(one[i].data == four[i].data);
    EXPECT_TRUE(one[i].data == gen.mfbm(seeds[i]).data);
  }
}

TEST(SampleIo, CsvRoundTripIsExact) {
  const auto p = make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2());
  const auto path = synthesize_mfbm(p, 300, 3);
  const std::string csv = sample_path_csv(path.data);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,c1,c2");
  const auto back = parse_series_csv(csv);
  EXPECT_TRUE(back.data == path.data);
  EXPECT_TRUE(back.labels.empty());
}

TEST(SampleIo, BinaryRoundTripIsExact) {
  ofbm::testing::TempDir dir;
  const auto p = make_params({0.4, 0.7}, corr2(0.5), ofbm::testing::mixing2());
  const auto path = synthesize_mfbm(p, 257, 3);
  const auto bytes = sample_path_binary(path.data);
  ASSERT_EQ(bytes.size(), 2u * 257u * sizeof(double));
  // Component-contiguous: the first N doubles belong to component 1.
  double second = 0.0;
  std::memcpy(&second, bytes.data() + sizeof(double), sizeof(double));
  EXPECT_EQ(second, path.data(0, 1));

  const auto sidecar = sample_path_sidecar(path);
  EXPECT_EQ(sidecar.at("kind"), "mfBm");
  EXPECT_EQ(sidecar.at("rng"), std::string(GaussianStream::kAlgorithm));
  EXPECT_TRUE(params_from_json(sidecar.at("params")) == p);
  io::write_atomic(dir / "x.bin", bytes);
  io::write_atomic(dir / "x.json", sidecar.dump());
  const auto loaded = load_series(dir / "x.bin");
  EXPECT_TRUE(loaded.data == path.data);
}

TEST(SampleIo, LabelColumnIsSeparated) {
  const auto s = parse_series_csv("t,a,b,state\n0,1.5,2,pre\n1,-3,4e-1,ictal\n", "state");
  ASSERT_EQ(s.data.rows(), 2);
  ASSERT_EQ(s.data.cols(), 2);
  EXPECT_EQ(s.data(1, 1), 0.4);
  EXPECT_EQ(s.labels, (std::vector<std::string>{"pre", "ictal"}));
}

TEST(SampleIo, MalformedInputsAreParseErrors) {
  for (const std::string text : {"a,b\n1,x\n", "", "t\n1\n"}) {
    try {
      (void)parse_series_csv(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << text;
    }
  }
}
