#ifndef VITRIEVER_EXPERIMENT_HPP
#define VITRIEVER_EXPERIMENT_HPP

#include "error.hpp"
#include "eval.hpp"
#include "metrics.hpp"
#include "normalization.hpp"
#include "parallel.hpp"
#include "search.hpp"
#include "store.hpp"

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

/**
 * @file experiment.hpp
 *
 * @brief End-to-end evaluation: normalize, search, score; and the normalization x metric grid.
 */

namespace vitriever {

struct EvaluateOptions {
    Metric metric = Metric::Cosine;
    NormalizationSpec normalization;
    /// Ranking depth. `std::nullopt` picks the protocol default: full for MAP, 4 for NS.
    std::optional<std::size_t> depth;
    SearchOptions search;
};

struct Evaluation {
    EvalReport report;
    std::vector<RankedList> rankings;
    std::size_t normalization_warnings = 0;  ///< degenerate rows or columns passed through
    std::size_t metric_warnings = 0;         ///< undefined distances ranked last
};

inline std::size_t default_depth(Protocol p) {
    return p == Protocol::Map ? kFullDepth : kNsDepth;
}

/**
 * @brief Scores one (normalization, metric) configuration.
 *
 * The normalizer is fitted on the index and applied to both index and queries.
 * `queries == nullptr` means queries are rows of the index itself.
 * `gt` must already be expressed in store ids (see `resolve_ground_truth()`).
 */
inline Evaluation evaluate(const DescriptorSet& index, const DescriptorSet* queries, const GroundTruth& gt, const EvaluateOptions& options) {
    gt.validate();
    const DescriptorSet& query_source = queries ? *queries : index;
    if (query_source.matrix.dim() != index.matrix.dim()) {
        fail(ErrorCode::DimensionMismatch, "query store dimension " + std::to_string(query_source.matrix.dim()) +
            " differs from index dimension " + std::to_string(index.matrix.dim()));
    }

    Evaluation out;
    auto normalizer = fit(options.normalization, index.matrix);
    DescriptorSet normalized_index(apply(normalizer, index.matrix, &out.normalization_warnings), index.ids);

    auto lookup = query_source.index_by_id();
    std::vector<std::size_t> rows;
    std::vector<std::string> query_ids;
    rows.reserve(gt.queries.size());
    for (const auto& q : gt.queries) {
        auto it = lookup.find(q.query);
        if (it == lookup.end()) {
            fail(ErrorCode::GroundTruth, "query '" + q.query + "' is not in the query store");
        }
        rows.push_back(it->second);
        query_ids.push_back(q.query);
    }

    DescriptorMatrix query_matrix;
    if (queries) {
        std::size_t ignored = 0;
        query_matrix = apply(normalizer, queries->matrix.select_rows(rows), &ignored);
    } else {
        query_matrix = normalized_index.matrix.select_rows(rows);
    }
    DescriptorSet normalized_queries(std::move(query_matrix), std::move(query_ids));

    const std::size_t depth = options.depth.value_or(default_depth(gt.protocol));
    out.rankings = batch_search(normalized_queries, normalized_index, options.metric, depth, exclusions_for(gt), options.search, &out.metric_warnings);
    out.report = score(out.rankings, gt);
    return out;
}

struct GridSpec {
    std::vector<Scheme> schemes{kTableSchemes.begin(), kTableSchemes.end()};
    std::vector<Metric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    std::string label = "model";
    /// Quantiles and norm formula shared by every cell; the scheme field is ignored.
    NormalizationSpec base;
};

struct GridCell {
    Scheme scheme = Scheme::None;
    Metric metric = Metric::Cosine;
    std::optional<double> score;  ///< empty if the cell failed
    std::string error;
    bool best = false;
};

struct GridResult {
    std::string label;
    Protocol protocol = Protocol::Map;
    std::vector<Scheme> schemes;
    std::vector<Metric> metrics;
    std::vector<GridCell> cells;  ///< row-major: one row per scheme

    const GridCell& at(std::size_t s, std::size_t m) const { return cells[s * metrics.size() + m]; }

    bool any_failed() const {
        for (const auto& c : cells) {
            if (!c.score) return true;
        }
        return false;
    }
};

/**
 * Options a grid cell is evaluated with; also what a standalone `evaluate()` must use to reproduce it.
 */
inline EvaluateOptions cell_options(const GridSpec& spec, Scheme scheme, Metric metric, const EvaluateOptions& common) {
    EvaluateOptions opt = common;
    opt.metric = metric;
    opt.normalization = spec.base;
    opt.normalization.scheme = scheme;
    return opt;
}

/**
 * @brief Evaluates every (scheme, metric) cell.
 *
 * A failing cell records its error and the remaining cells still run.
 * The highest-scoring cell is flagged; ties go to the first in row-major order.
 *
 * @param parallel_cells Run cells concurrently, each with single-threaded search.
 */
inline GridResult run_grid(const DescriptorSet& index, const DescriptorSet* queries, const GroundTruth& gt,
    const GridSpec& spec, const EvaluateOptions& common = {}, bool parallel_cells = false)
{
    GridResult out;
    out.label = spec.label;
    out.protocol = gt.protocol;
    out.schemes = spec.schemes;
    out.metrics = spec.metrics;
    out.cells.resize(spec.schemes.size() * spec.metrics.size());

    auto run_cell = [&](std::size_t c) {
        auto& cell = out.cells[c];
        cell.scheme = spec.schemes[c / spec.metrics.size()];
        cell.metric = spec.metrics[c % spec.metrics.size()];
        auto opt = cell_options(spec, cell.scheme, cell.metric, common);
        if (parallel_cells) {
            opt.search.threads = 1;
        }
        try {
            cell.score = evaluate(index, queries, gt, opt).report.aggregate;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };

    if (parallel_cells) {
        parallelize(out.cells.size(), common.search.threads, run_cell);
    } else {
        for (std::size_t c = 0; c < out.cells.size(); ++c) {
            run_cell(c);
        }
    }

    GridCell* best = nullptr;
    for (auto& c : out.cells) {
        if (c.score && (!best || *c.score > *best->score)) {
            best = &c;
        }
    }
    if (best) {
        best->best = true;
    }
    return out;
}

namespace detail {

inline std::string format_score(Protocol p, double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), p == Protocol::Map ? "%.2f" : "%.3f", v);
    return buffer;
}

}

/**
 * Aligned text table: rows are schemes, columns metrics, best cell marked with `*`.
 */
inline void write_grid_table(std::ostream& out, const GridResult& grid) {
    const std::size_t first = 12, width = 10;
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    out << pad(grid.label, first);
    for (auto m : grid.metrics) {
        out << pad(metric_label(m), width);
    }
    out << '\n';
    for (std::size_t s = 0; s < grid.schemes.size(); ++s) {
        out << pad(scheme_label(grid.schemes[s]), first);
        for (std::size_t m = 0; m < grid.metrics.size(); ++m) {
            const auto& cell = grid.at(s, m);
            std::string text = cell.score ? detail::format_score(grid.protocol, *cell.score) : "ERR";
            if (cell.best) text += "*";
            out << pad(text, width);
        }
        out << '\n';
    }
    for (const auto& cell : grid.cells) {
        if (!cell.score) {
            out << "error in " << scheme_label(cell.scheme) << " / " << metric_label(cell.metric) << ": " << cell.error << '\n';
        }
    }
}

/**
 * CSV with header `label,protocol,normalization,metric,score,best,status`.
 */
inline void write_grid_csv(std::ostream& out, const GridResult& grid) {
    out << "label,protocol,normalization,metric,score,best,status\n";
    char buffer[32];
    for (const auto& cell : grid.cells) {
        out << grid.label << ',' << protocol_name(grid.protocol) << ',' << scheme_name(cell.scheme) << ','
            << metric_name(cell.metric) << ',';
        if (cell.score) {
            std::snprintf(buffer, sizeof(buffer), "%.10g", *cell.score);
            out << buffer;
        }
        out << ',' << (cell.best ? 1 : 0) << ',' << (cell.score ? "ok" : "error") << '\n';
    }
}

}

#endif
