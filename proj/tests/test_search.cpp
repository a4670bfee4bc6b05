#include "vitriever/normalization.hpp"
#include "vitriever/search.hpp"

#include "generators.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace vitriever;

namespace {

std::vector<std::size_t> rows_of(const RankedList& list) {
    std::vector<std::size_t> out;
    for (const auto& e : list.entries) out.push_back(e.row);
    return out;
}

oracle::M to_oracle(Metric m) {
    return static_cast<oracle::M>(static_cast<int>(m));
}

}

TEST(Search, SelfMatchAndExclusion) {
    std::mt19937_64 rng(1);
    auto index = testgen::random_set(rng, 20, 32);
    auto query = index.matrix.row(7);
    auto top = top_k(query, "q", index, Metric::Cosine, 1);
    ASSERT_EQ(top.entries.size(), 1u);
    EXPECT_EQ(top.entries[0].id, index.ids[7]);
    EXPECT_NEAR(top.entries[0].distance, 0.0, 1e-9);

    auto excluded = top_k(query, "q", index, Metric::Cosine, 1, IdSet{index.ids[7]});
    ASSERT_EQ(excluded.entries.size(), 1u);
    EXPECT_NE(excluded.entries[0].id, index.ids[7]);
}

TEST(Search, DepthIsBoundedByEligibleRows) {
    std::mt19937_64 rng(2);
    auto index = testgen::random_set(rng, 5, 4);
    auto q = testgen::random_vector(rng, 4);
    EXPECT_EQ(top_k(q, "q", index, Metric::Euclidean, 100).entries.size(), 5u);
    EXPECT_EQ(top_k(q, "q", index, Metric::Euclidean, kFullDepth, IdSet{"img0", "img1", "ghost"}).entries.size(), 3u);
    EXPECT_THROW(top_k(q, "q", index, Metric::Euclidean, 0), Error);
    EXPECT_THROW(top_k(testgen::random_vector(rng, 3), "q", index, Metric::Euclidean, 1), Error);
}

TEST(Search, MatchesNaiveOracleForEveryMetric) {
    std::mt19937_64 rng(3);
    auto rows = testgen::random_rows(rng, 500, 64);
    auto index = testgen::make_set(rows, 64);
    SearchIndex prepared(index);
    for (int t = 0; t < 5; ++t) {
        auto q = testgen::random_vector(rng, 64);
        for (auto m : kAllMetrics) {
            auto got = top_k(q, "q", prepared, m, 10);
            EXPECT_EQ(rows_of(got), oracle::naive_ranking(to_oracle(m), q, rows, 10)) << metric_name(m);
        }
    }
}

TEST(Search, TiesBreakByRowOrder) {
    std::mt19937_64 rng(4);
    auto base = testgen::random_rows(rng, 6, 8);
    // Rows 1, 3 and 5 are identical, so their distances tie exactly.
    base[3] = base[1];
    base[5] = base[1];
    auto index = testgen::make_set(base, 8);
    auto q = testgen::random_vector(rng, 8);
    for (auto m : kAllMetrics) {
        auto full = top_k(q, "q", index, m, kFullDepth);
        std::vector<std::size_t> tied;
        for (auto r : rows_of(full)) {
            if (r == 1 || r == 3 || r == 5) tied.push_back(r);
        }
        EXPECT_EQ(tied, (std::vector<std::size_t>{1, 3, 5})) << metric_name(m);
        EXPECT_EQ(rows_of(full), oracle::naive_ranking(to_oracle(m), q, base, kFullDepth)) << metric_name(m);
    }
}

TEST(Search, MonotonePrefix) {
    std::mt19937_64 rng(5);
    auto index = testgen::random_set(rng, 200, 16);
    auto q = testgen::random_vector(rng, 16);
    auto full = top_k(q, "q", index, Metric::Manhattan, kFullDepth);
    for (std::size_t k : {1, 3, 10, 50, 199}) {
        auto part = top_k(q, "q", index, Metric::Manhattan, k);
        ASSERT_EQ(part.entries.size(), k);
        EXPECT_TRUE(std::equal(part.entries.begin(), part.entries.end(), full.entries.begin()));
    }
}

TEST(Search, BatchExcludingSelf) {
    std::mt19937_64 rng(6);
    auto index = testgen::random_set(rng, 40, 12);
    Exclusions ex;
    for (const auto& id : index.ids) ex[id].insert(id);
    auto results = batch_search(index, index, Metric::Cosine, 1, ex);
    ASSERT_EQ(results.size(), 40u);
    for (std::size_t j = 0; j < results.size(); ++j) {
        EXPECT_EQ(results[j].query_id, index.ids[j]);
        EXPECT_NE(results[j].entries[0].id, index.ids[j]);
    }
}

TEST(Search, BatchEmptyQueries) {
    std::mt19937_64 rng(7);
    auto index = testgen::random_set(rng, 10, 4);
    DescriptorSet none(DescriptorMatrix(4), {});
    EXPECT_TRUE(batch_search(none, index, Metric::Cosine, 3).empty());
    DescriptorSet wrong(DescriptorMatrix(5), {});
    EXPECT_THROW(batch_search(wrong, index, Metric::Cosine, 3), Error);
}

TEST(Search, BatchIsDeterministicAcrossThreadCountsAndTiles) {
    std::mt19937_64 rng(8);
    auto index = testgen::random_set(rng, 300, 24);
    auto queries = testgen::random_set(rng, 37, 24, "q");
    for (auto m : kAllMetrics) {
        SearchOptions one;
        auto reference = batch_search(queries, index, m, 15, {}, one);
        for (std::size_t threads : {2, 5}) {
            for (std::size_t tile : {1, 4, 64}) {
                SearchOptions opt;
                opt.threads = threads;
                opt.query_tile = tile;
                opt.row_block = 37;
                EXPECT_EQ(batch_search(queries, index, m, 15, {}, opt), reference) << metric_name(m);
            }
        }
        for (std::size_t j = 0; j < queries.ids.size(); j += 9) {
            EXPECT_EQ(reference[j], top_k(queries.matrix.row(j), queries.ids[j], index, m, 15));
        }
    }
}

TEST(Search, DegenerateRowsRankLast) {
    auto index = DescriptorSet(DescriptorMatrix::from_rows({{0, 0, 0}, {1, 2, 3}, {3, 2, 1}}), {"zero", "a", "b"});
    std::size_t warnings = 0;
    std::vector<float> q{1, 2, 3.5f};
    auto r = top_k(q, "q", index, Metric::Cosine, kFullDepth, {}, &warnings);
    EXPECT_EQ(warnings, 1u);
    EXPECT_EQ(r.entries.back().id, "zero");
    EXPECT_TRUE(std::isinf(r.entries.back().distance));
}

TEST(Search, EuclideanAfterL2MatchesCosineRanking) {
    std::mt19937_64 rng(9);
    std::vector<std::vector<float>> rows, qrows;
    for (int i = 0; i < 1000; ++i) rows.push_back(testgen::exact_norm_vector(rng, 96));
    for (int i = 0; i < 10; ++i) qrows.push_back(testgen::exact_norm_vector(rng, 96));
    auto raw = testgen::make_set(rows, 96);
    auto queries = testgen::make_set(qrows, 96, "q");
    NormalizationSpec l2;
    l2.scheme = Scheme::L2Axis1;
    DescriptorSet unit(fit_apply(l2, raw.matrix, raw.matrix), raw.ids);
    DescriptorSet unit_queries(fit_apply(l2, raw.matrix, queries.matrix), queries.ids);
    auto cos = batch_search(queries, raw, Metric::Cosine, kFullDepth);
    auto euc = batch_search(unit_queries, unit, Metric::Euclidean, kFullDepth);
    for (std::size_t j = 0; j < cos.size(); ++j) {
        EXPECT_EQ(rows_of(cos[j]), rows_of(euc[j]));
    }
}

TEST(Search, TrecOutput) {
    RankedList list{"q1", {{"a", 0.5, 0}, {"b", 1.25, 1}}, 2};
    std::ostringstream out;
    write_rankings(out, {list});
    EXPECT_EQ(out.str(), "q1 1 a 0.5\nq1 2 b 1.25\n");
}
