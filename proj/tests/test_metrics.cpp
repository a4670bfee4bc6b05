#include "vitriever/metrics.hpp"

#include "generators.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace vitriever;

namespace {

oracle::M to_oracle(Metric m) {
    return static_cast<oracle::M>(static_cast<int>(m));
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    return idx;
}

}

TEST(Metrics, NamesRoundTripCaseInsensitively) {
    for (auto m : kAllMetrics) {
        EXPECT_EQ(parse_metric(metric_name(m)), m);
    }
    EXPECT_EQ(parse_metric("BrayCurtis"), Metric::BrayCurtis);
    EXPECT_EQ(parse_metric("COSINE"), Metric::Cosine);
    EXPECT_THROW(parse_metric("hamming"), Error);
}

TEST(Metrics, WorkedExamples) {
    EXPECT_DOUBLE_EQ(distance(Metric::Manhattan, {0, 0}, {3, 4}), 7.0);
    EXPECT_DOUBLE_EQ(distance(Metric::Euclidean, {0, 0}, {3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(distance(Metric::Chebyshev, {1, 5}, {4, 1}), 4.0);
    EXPECT_DOUBLE_EQ(distance(Metric::Canberra, {1, 0}, {0, 1}), 2.0);
    EXPECT_DOUBLE_EQ(distance(Metric::BrayCurtis, {1, 2}, {3, 2}), 0.25);
}

TEST(Metrics, CanberraZeroOverZeroContributesNothing) {
    EXPECT_DOUBLE_EQ(distance(Metric::Canberra, {0, 0, 1}, {0, 0, 3}), 0.5);
}

TEST(Metrics, BrayCurtisIsReturnedAsComputedForMixedSigns) {
    // Signed denominator: (3 + 4) / ((1 - 2) + (-1 + 3)) = 7 / 1.
    EXPECT_DOUBLE_EQ(distance(Metric::BrayCurtis, {1, -1}, {-2, 3}), 7.0);
    EXPECT_LT(distance(Metric::BrayCurtis, {-1, -1}, {-2, -1}), 0.0);
}

TEST(Metrics, SelfDistanceIsZero) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        auto p = testgen::random_vector(rng, 768);
        for (auto m : kAllMetrics) {
            if (m == Metric::BrayCurtis) continue;  // 0 / sum(2p), see below
            EXPECT_NEAR(distance(m, p, p), 0.0, 1e-9) << metric_name(m);
        }
        auto positive = testgen::random_vector(rng, 768, 0.1, 2.0);
        EXPECT_NEAR(distance(Metric::BrayCurtis, positive, positive), 0.0, 1e-9);
    }
}

TEST(Metrics, CorrelationOfAffineImageIsZero) {
    std::mt19937_64 rng(4);
    auto p = testgen::random_vector(rng, 300);
    std::vector<float> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = 2.5f * p[i] + 7.0f;
    EXPECT_NEAR(distance(Metric::Correlation, p, q), 0.0, 1e-9);
}

TEST(Metrics, DegenerateInputsThrow) {
    auto code = [](Metric m, std::vector<float> p, std::vector<float> q) {
        try {
            distance(m, p, q);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code(Metric::Cosine, {0, 0}, {1, 2}), ErrorCode::DegenerateInput);
    EXPECT_EQ(code(Metric::Correlation, {3, 3, 3}, {1, 2, 3}), ErrorCode::DegenerateInput);
    EXPECT_EQ(code(Metric::BrayCurtis, {1, -1}, {1, -1}), ErrorCode::DegenerateInput);
    EXPECT_EQ(code(Metric::Euclidean, {1, 2}, {1, 2, 3}), ErrorCode::DimensionMismatch);
}

TEST(Metrics, MatchesStraightLoopOracle) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 100; ++t) {
        auto p = testgen::random_vector(rng, 768);
        auto q = testgen::random_vector(rng, 768);
        for (auto m : kAllMetrics) {
            double want = oracle::distance(to_oracle(m), p, q);
            double got = distance(m, p, q);
            EXPECT_TRUE(oracle::close_relative(got, want, 1e-6)) << metric_name(m) << ": " << got << " vs " << want;
        }
    }
}

TEST(Metrics, BatchMatchesPerRowCalls) {
    std::mt19937_64 rng(7);
    auto index = testgen::random_set(rng, 1000, 768);
    auto q = testgen::random_vector(rng, 768);
    for (auto m : kAllMetrics) {
        auto batch = distance_batch(m, q, index.matrix);
        ASSERT_EQ(batch.size(), 1000u);
        for (std::size_t r = 0; r < 1000; r += 37) {
            auto row = index.matrix.row(r);
            double want = oracle::distance(to_oracle(m), q, std::vector<float>(row.begin(), row.end()));
            EXPECT_TRUE(oracle::close_relative(batch[r], want, 1e-6)) << metric_name(m) << " row " << r;
            EXPECT_EQ(batch[r], distance(m, q, row)) << metric_name(m);
        }
    }
}

TEST(Metrics, BatchEdgeCases) {
    std::mt19937_64 rng(8);
    DescriptorMatrix empty(16);
    auto q = testgen::random_vector(rng, 16);
    EXPECT_TRUE(distance_batch(Metric::Cosine, q, empty).empty());

    auto rows = testgen::random_rows(rng, 5, 16);
    rows[0] = q;
    rows[3] = std::vector<float>(16, 0.0f);
    auto m = DescriptorMatrix::from_rows(rows);
    std::size_t warnings = 0;
    auto d = distance_batch(Metric::Cosine, q, m, &warnings);
    EXPECT_NEAR(d[0], 0.0, 1e-9);
    EXPECT_TRUE(std::isinf(d[3]));
    EXPECT_EQ(warnings, 1u);
    EXPECT_THROW(distance_batch(Metric::Cosine, testgen::random_vector(rng, 15), m), Error);
}

TEST(Metrics, Symmetry) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<std::size_t> dim(2, 256);
        auto n = dim(rng);
        auto p = testgen::random_vector(rng, n), q = testgen::random_vector(rng, n);
        for (auto m : kAllMetrics) {
            double a = distance(m, p, q), b = distance(m, q, p);
            if (m == Metric::Manhattan || m == Metric::Chebyshev || m == Metric::Canberra) {
                EXPECT_EQ(a, b) << metric_name(m);
            } else {
                EXPECT_NEAR(a, b, 1e-9) << metric_name(m);
            }
        }
    }
}

TEST(Metrics, NonNegativeExceptSignedBrayCurtis) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 200; ++t) {
        auto p = testgen::random_vector(rng, 64), q = testgen::random_vector(rng, 64);
        for (auto m : kAllMetrics) {
            if (m == Metric::BrayCurtis) continue;
            EXPECT_GE(distance(m, p, q), 0.0);
        }
        auto pp = testgen::random_vector(rng, 64, 0, 1), qq = testgen::random_vector(rng, 64, 0, 1);
        EXPECT_GE(distance(Metric::BrayCurtis, pp, qq), 0.0);
    }
}

TEST(Metrics, TriangleInequality) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 1000; ++t) {
        auto a = testgen::random_vector(rng, 32), b = testgen::random_vector(rng, 32), c = testgen::random_vector(rng, 32);
        for (auto m : {Metric::Manhattan, Metric::Euclidean, Metric::Chebyshev}) {
            EXPECT_LE(distance(m, a, c), distance(m, a, b) + distance(m, b, c) + 1e-9);
        }
    }
}

// Inputs lie on a 2^-10 grid and scales are powers of two, so the transformed
// vectors are exact in float and any difference comes from the metric itself.
TEST(Metrics, ScaleAndAffineInvariance) {
    std::mt19937_64 rng(15);
    std::uniform_int_distribution<int> grid(-1024, 1024), exponent(-3, 3), offset(-8, 8);
    auto grid_vector = [&](std::size_t n) {
        std::vector<float> v(n);
        for (auto& x : v) x = static_cast<float>(grid(rng)) / 1024.0f;
        return v;
    };
    for (int t = 0; t < 200; ++t) {
        auto p = grid_vector(128), q = grid_vector(128);
        float a = std::ldexp(1.0f, exponent(rng)), b = std::ldexp(1.0f, exponent(rng));
        float s = static_cast<float>(offset(rng));
        std::vector<float> ap(p.size()), bq(q.size()), affine(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            ap[i] = a * p[i];
            bq[i] = b * q[i];
            affine[i] = a * p[i] + s;
        }
        EXPECT_NEAR(distance(Metric::Cosine, ap, bq), distance(Metric::Cosine, p, q), 1e-9);
        EXPECT_NEAR(distance(Metric::Correlation, affine, q), distance(Metric::Correlation, p, q), 1e-9);
    }
}

TEST(Metrics, CosineOfCenteredRanksLikeCorrelation) {
    std::mt19937_64 rng(16);
    auto index = testgen::random_rows(rng, 300, 64);
    auto q = testgen::random_vector(rng, 64, -0.5, 1.5);
    auto center = [](std::vector<float> v) {
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        for (auto& x : v) x = static_cast<float>(x - mean);
        return v;
    };
    std::vector<double> cos, cor;
    auto qc = center(q);
    for (const auto& r : index) {
        cos.push_back(distance(Metric::Cosine, qc, center(r)));
        cor.push_back(distance(Metric::Correlation, q, r));
    }
    EXPECT_EQ(argsort(cos), argsort(cor));
}
