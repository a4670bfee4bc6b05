#ifndef VITRIEVER_SEARCH_HPP
#define VITRIEVER_SEARCH_HPP

#include "error.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "store.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file search.hpp
 *
 * @brief Exhaustive top-k retrieval.
 *
 * Every index row is scored against every query; results are ordered by
 * ascending distance with ties broken by ascending index row.
 */

namespace vitriever {

/**
 * Requested depth meaning "rank the whole eligible index".
 */
inline constexpr std::size_t kFullDepth = std::numeric_limits<std::size_t>::max();

struct RankedEntry {
    std::string id;
    double distance = 0;
    std::size_t row = 0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
    std::size_t k = kFullDepth;

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

using IdSet = std::unordered_set<std::string>;

/**
 * Per-query ids to leave out of the ranking, keyed by query id.
 */
using Exclusions = std::unordered_map<std::string, IdSet>;

struct SearchOptions {
    std::size_t threads = 1;
    std::size_t query_tile = 8;   ///< queries scored together per pass over the index
    std::size_t row_block = 512;  ///< index rows per cache block
};

/**
 * @brief An index set with the per-row statistics the kernels need, computed once.
 *
 * Holds a reference to the descriptor set, which must outlive it.
 */
class SearchIndex {
public:
    explicit SearchIndex(const DescriptorSet& set) : set_(&set), profiles_(profile_rows(set.matrix)), rows_(set.index_by_id()) {}

    const DescriptorSet& set() const { return *set_; }

    const DescriptorMatrix& matrix() const { return set_->matrix; }

    const std::vector<VectorProfile>& profiles() const { return profiles_; }

    std::size_t dim() const { return set_->matrix.dim(); }

    std::size_t size() const { return set_->matrix.count(); }

    /**
     * Marks the rows named in `ids`; unknown ids are ignored.
     */
    std::vector<char> mask(const IdSet* ids) const {
        std::vector<char> out;
        if (!ids || ids->empty()) {
            return out;
        }
        out.assign(size(), 0);
        for (const auto& id : *ids) {
            auto it = rows_.find(id);
            if (it != rows_.end()) {
                out[it->second] = 1;
            }
        }
        return out;
    }

private:
    const DescriptorSet* set_;
    std::vector<VectorProfile> profiles_;
    std::unordered_map<std::string, std::size_t> rows_;
};

namespace detail {

inline bool rank_before(const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
}

/**
 * Keeps the `k` best eligible rows, in ranking order.
 * Distances are never NaN here (undefined pairs were already mapped to +inf).
 */
inline std::vector<std::pair<double, std::size_t>> select_top(std::span<const double> distances, std::size_t k, const std::vector<char>& excluded) {
    std::vector<std::pair<double, std::size_t>> candidates;
    candidates.reserve(distances.size());
    for (std::size_t r = 0; r < distances.size(); ++r) {
        if (excluded.empty() || !excluded[r]) {
            candidates.emplace_back(distances[r], r);
        }
    }
    if (k < candidates.size()) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(), rank_before);
        candidates.resize(k);
    } else {
        std::sort(candidates.begin(), candidates.end(), rank_before);
    }
    return candidates;
}

/**
 * Fills `out[q * N + r]` with distances for a tile of prepared queries.
 * Returns the number of undefined pairs.
 */
template<Metric M>
std::size_t score_tile(std::span<const PreparedQuery> queries, const SearchIndex& index, std::size_t row_block, double* out) {
    const std::size_t n = index.size();
    const auto& matrix = index.matrix();
    const auto& profiles = index.profiles();
    std::size_t bad = 0;
    for (std::size_t start = 0; start < n; start += row_block) {
        const std::size_t stop = std::min(n, start + row_block);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            double* dest = out + q * n;
            for (std::size_t r = start; r < stop; ++r) {
                double d = kernel<M>(queries[q], matrix.row(r).data(), profiles[r]);
                if (std::isnan(d)) {
                    d = std::numeric_limits<double>::infinity();
                    ++bad;
                }
                dest[r] = d;
            }
        }
    }
    return bad;
}

inline RankedList assemble(std::string query_id, const SearchIndex& index, std::size_t k, const std::vector<std::pair<double, std::size_t>>& top) {
    RankedList out;
    out.query_id = std::move(query_id);
    out.k = k;
    out.entries.reserve(top.size());
    const auto& ids = index.set().ids;
    for (const auto& [d, r] : top) {
        out.entries.push_back(RankedEntry{ids[r], d, r});
    }
    return out;
}

}

/**
 * @brief Rankings for many queries against one index.
 *
 * Output element `j` is the ranking of query row `j`, whatever the thread count.
 * Undefined distances rank last as `+inf` and are counted in `warnings`.
 *
 * @param k Depth, or `kFullDepth`. Must be positive.
 */
inline std::vector<RankedList> batch_search(
    const DescriptorSet& queries,
    const SearchIndex& index,
    Metric metric,
    std::size_t k,
    const Exclusions& exclusions = {},
    const SearchOptions& options = {},
    std::size_t* warnings = nullptr)
{
    if (queries.matrix.dim() != index.dim()) {
        fail(ErrorCode::DimensionMismatch, "queries of dimension " + std::to_string(queries.matrix.dim()) +
            " against index of dimension " + std::to_string(index.dim()));
    }
    if (k == 0) {
        fail(ErrorCode::InvalidArgument, "search depth must be positive");
    }

    const std::size_t nq = queries.matrix.count();
    const std::size_t n = index.size();
    const std::size_t tile = std::max<std::size_t>(1, options.query_tile);
    const std::size_t row_block = std::max<std::size_t>(1, options.row_block);
    const std::size_t ntiles = (nq + tile - 1) / tile;

    std::vector<RankedList> results(nq);
    std::atomic<std::size_t> bad{0};

    dispatch_metric(metric, [&](auto tag) {
        constexpr Metric M = decltype(tag)::value;
        parallelize(ntiles, options.threads, [&](std::size_t t) {
            const std::size_t first = t * tile;
            const std::size_t last = std::min(nq, first + tile);
            std::vector<PreparedQuery> prepared;
            prepared.reserve(last - first);
            for (std::size_t q = first; q < last; ++q) {
                prepared.emplace_back(queries.matrix.row(q));
            }
            std::vector<double> distances(prepared.size() * n);
            bad += detail::score_tile<M>(prepared, index, row_block, distances.data());

            for (std::size_t q = first; q < last; ++q) {
                const auto& qid = queries.ids[q];
                auto found = exclusions.find(qid);
                auto excluded = index.mask(found == exclusions.end() ? nullptr : &found->second);
                auto top = detail::select_top(std::span<const double>(distances.data() + (q - first) * n, n), k, excluded);
                results[q] = detail::assemble(qid, index, k, top);
            }
        });
    });

    if (warnings) {
        *warnings += bad.load();
    }
    return results;
}

inline std::vector<RankedList> batch_search(
    const DescriptorSet& queries,
    const DescriptorSet& index,
    Metric metric,
    std::size_t k,
    const Exclusions& exclusions = {},
    const SearchOptions& options = {},
    std::size_t* warnings = nullptr)
{
    SearchIndex prepared(index);
    return batch_search(queries, prepared, metric, k, exclusions, options, warnings);
}

/**
 * @brief Ranking of a single query.
 */
inline RankedList top_k(
    std::span<const float> query,
    const std::string& query_id,
    const SearchIndex& index,
    Metric metric,
    std::size_t k,
    const IdSet& exclude = {},
    std::size_t* warnings = nullptr)
{
    if (query.size() != index.dim()) {
        fail(ErrorCode::DimensionMismatch, "query of length " + std::to_string(query.size()) +
            " against index of dimension " + std::to_string(index.dim()));
    }
    if (k == 0) {
        fail(ErrorCode::InvalidArgument, "search depth must be positive");
    }
    auto distances = distance_batch(metric, query, index.matrix(), warnings, &index.profiles());
    auto top = detail::select_top(distances, k, index.mask(&exclude));
    return detail::assemble(query_id, index, k, top);
}

inline RankedList top_k(
    std::span<const float> query,
    const std::string& query_id,
    const DescriptorSet& index,
    Metric metric,
    std::size_t k,
    const IdSet& exclude = {},
    std::size_t* warnings = nullptr)
{
    SearchIndex prepared(index);
    return top_k(query, query_id, prepared, metric, k, exclude, warnings);
}

/**
 * Writes rankings as `<query_id> <rank> <id> <distance>` lines, ranks starting at 1.
 */
inline void write_rankings(std::ostream& out, const std::vector<RankedList>& rankings) {
    char buffer[64];
    for (const auto& list : rankings) {
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            const auto& e = list.entries[i];
            std::snprintf(buffer, sizeof(buffer), "%.9g", e.distance);
            out << list.query_id << ' ' << (i + 1) << ' ' << e.id << ' ' << buffer << '\n';
        }
    }
}

}

#endif
