#ifndef VITRIEVER_EVAL_HPP
#define VITRIEVER_EVAL_HPP

#include "error.hpp"
#include "search.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file eval.hpp
 *
 * @brief Retrieval quality scores: mean average precision and the UKBench top-4 score.
 */

namespace vitriever {

enum class Protocol {
    Map,  ///< mean average precision, reported on a 0-100 scale
    Ns    ///< number of group members in the top 4, in [0, 4]
};

inline const char* protocol_name(Protocol p) {
    return p == Protocol::Map ? "map" : "ns";
}

struct GroundTruthQuery {
    std::string query;
    IdSet positives;
    IdSet junk;
    bool exclude_self = false;

    friend bool operator==(const GroundTruthQuery&, const GroundTruthQuery&) = default;
};

struct GroundTruth {
    Protocol protocol = Protocol::Map;
    std::vector<GroundTruthQuery> queries;

    /**
     * Throws `ErrorCode::GroundTruth` if any invariant is broken:
     * non-empty positives, positives disjoint from junk, junk only under MAP, distinct query ids.
     */
    void validate() const {
        IdSet seen;
        for (const auto& q : queries) {
            if (!seen.insert(q.query).second) {
                fail(ErrorCode::GroundTruth, "query '" + q.query + "' listed twice");
            }
            if (q.positives.empty()) {
                fail(ErrorCode::GroundTruth, "query '" + q.query + "' has no positives");
            }
            if (protocol == Protocol::Ns && !q.junk.empty()) {
                fail(ErrorCode::GroundTruth, "query '" + q.query + "' has junk entries under the NS protocol");
            }
            for (const auto& j : q.junk) {
                if (q.positives.count(j)) {
                    fail(ErrorCode::GroundTruth, "query '" + q.query + "': '" + j + "' is both positive and junk");
                }
            }
        }
    }

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/**
 * Self-exclusions requested by the ground truth, in the form `batch_search()` expects.
 */
inline Exclusions exclusions_for(const GroundTruth& gt) {
    Exclusions out;
    for (const auto& q : gt.queries) {
        if (q.exclude_self) {
            out[q.query].insert(q.query);
        }
    }
    return out;
}

struct QueryScore {
    std::string query_id;
    double score = 0;

    friend bool operator==(const QueryScore&, const QueryScore&) = default;
};

struct EvalReport {
    Protocol protocol = Protocol::Map;
    double aggregate = 0;
    std::vector<QueryScore> per_query;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/**
 * @brief Non-interpolated average precision of one ranking, in [0, 1].
 *
 * Junk entries are dropped first and the remaining ranks close up.
 * The precision at each retrieved positive is summed and divided by the
 * total number of positives, so positives absent from the ranking contribute 0.
 */
inline double average_precision(const RankedList& ranked, const IdSet& positives, const IdSet& junk = {}) {
    if (positives.empty()) {
        fail(ErrorCode::GroundTruth, "average precision needs at least one positive");
    }
    std::size_t rank = 0;
    std::size_t hits = 0;
    double sum = 0;
    for (const auto& e : ranked.entries) {
        if (junk.count(e.id)) {
            continue;
        }
        ++rank;
        if (positives.count(e.id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
            if (hits == positives.size()) {
                break;
            }
        }
    }
    return sum / static_cast<double>(positives.size());
}

namespace detail {

inline std::unordered_map<std::string, const RankedList*> rankings_by_query(const std::vector<RankedList>& rankings) {
    std::unordered_map<std::string, const RankedList*> out;
    for (const auto& r : rankings) {
        if (!out.emplace(r.query_id, &r).second) {
            fail(ErrorCode::DuplicateRanking, "more than one ranking for query '" + r.query_id + "'");
        }
    }
    return out;
}

inline const RankedList& ranking_for(const std::unordered_map<std::string, const RankedList*>& lookup, const std::string& query) {
    auto it = lookup.find(query);
    if (it == lookup.end()) {
        fail(ErrorCode::MissingRanking, "no ranking for ground-truth query '" + query + "'");
    }
    return *it->second;
}

}

/**
 * @brief Mean of per-query average precision, scaled to 0-100.
 *
 * Rankings for queries outside the ground truth are ignored.
 */
inline EvalReport mean_average_precision(const std::vector<RankedList>& rankings, const GroundTruth& gt) {
    if (gt.protocol != Protocol::Map) {
        fail(ErrorCode::InvalidArgument, "ground truth is not for the MAP protocol");
    }
    if (gt.queries.empty()) {
        fail(ErrorCode::GroundTruth, "ground truth has no queries");
    }
    auto lookup = detail::rankings_by_query(rankings);
    EvalReport report;
    report.protocol = Protocol::Map;
    double total = 0;
    for (const auto& q : gt.queries) {
        double ap = average_precision(detail::ranking_for(lookup, q.query), q.positives, q.junk);
        report.per_query.push_back(QueryScore{q.query, ap});
        total += ap;
    }
    report.aggregate = 100.0 * total / static_cast<double>(gt.queries.size());
    return report;
}

/**
 * Depth needed by the NS protocol.
 */
inline constexpr std::size_t kNsDepth = 4;

/**
 * @brief Mean number of positives among the first four ranked entries.
 *
 * Each query's positives are its full group of four, itself included.
 */
inline EvalReport ns_score(const std::vector<RankedList>& rankings, const GroundTruth& gt) {
    if (gt.protocol != Protocol::Ns) {
        fail(ErrorCode::InvalidArgument, "ground truth is not for the NS protocol");
    }
    if (gt.queries.empty()) {
        fail(ErrorCode::GroundTruth, "ground truth has no queries");
    }
    auto lookup = detail::rankings_by_query(rankings);
    EvalReport report;
    report.protocol = Protocol::Ns;
    double total = 0;
    for (const auto& q : gt.queries) {
        if (q.positives.size() != kNsDepth) {
            fail(ErrorCode::GroundTruth, "query '" + q.query + "' must have exactly 4 positives under NS");
        }
        const auto& ranked = detail::ranking_for(lookup, q.query);
        if (ranked.entries.size() < kNsDepth) {
            fail(ErrorCode::InsufficientDepth, "ranking for '" + q.query + "' has depth " +
                std::to_string(ranked.entries.size()) + ", NS needs 4");
        }
        std::size_t hits = 0;
        for (std::size_t i = 0; i < kNsDepth; ++i) {
            hits += q.positives.count(ranked.entries[i].id);
        }
        report.per_query.push_back(QueryScore{q.query, static_cast<double>(hits)});
        total += static_cast<double>(hits);
    }
    report.aggregate = total / static_cast<double>(gt.queries.size());
    return report;
}

/**
 * Scores with whichever protocol the ground truth declares.
 */
inline EvalReport score(const std::vector<RankedList>& rankings, const GroundTruth& gt) {
    return gt.protocol == Protocol::Map ? mean_average_precision(rankings, gt) : ns_score(rankings, gt);
}

/**
 * Machine format: `<query_id> <score>` per query, then `AGGREGATE <value>`.
 */
inline void write_report_lines(std::ostream& out, const EvalReport& report) {
    char buffer[64];
    for (const auto& q : report.per_query) {
        std::snprintf(buffer, sizeof(buffer), "%.10g", q.score);
        out << q.query_id << ' ' << buffer << '\n';
    }
    std::snprintf(buffer, sizeof(buffer), "%.10g", report.aggregate);
    out << "AGGREGATE " << buffer << '\n';
}

/**
 * Human-readable table with one row per query and a summary line.
 */
inline void write_report_table(std::ostream& out, const EvalReport& report) {
    std::size_t width = 5;
    for (const auto& q : report.per_query) {
        width = std::max(width, q.query_id.size());
    }
    const char* label = report.protocol == Protocol::Map ? "AP" : "top-4";
    char buffer[64];
    out << "query" << std::string(width - 5 + 2, ' ') << label << '\n';
    for (const auto& q : report.per_query) {
        std::snprintf(buffer, sizeof(buffer), report.protocol == Protocol::Map ? "%.4f" : "%.0f", q.score);
        out << q.query_id << std::string(width - q.query_id.size() + 2, ' ') << buffer << '\n';
    }
    std::snprintf(buffer, sizeof(buffer), report.protocol == Protocol::Map ? "%.2f" : "%.3f", report.aggregate);
    out << (report.protocol == Protocol::Map ? "mAP" : "N-S") << " over " << report.per_query.size()
        << " queries: " << buffer << '\n';
}

}

#endif
