#ifndef VITRIEVER_TOOLS_CLI_HPP
#define VITRIEVER_TOOLS_CLI_HPP

#include "vitriever/vitriever.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vitriever::cli {

struct SharedFlags {
    std::string metric = "cosine";
    std::string norm = "none";
    std::string robust_quantiles = "0.25,0.75";
    bool literal_formula = false;
    std::string layout = "json";
    std::string gt;
    std::string k = "default";
    std::string out;
    std::string csv;
    std::size_t threads = default_threads();
};

inline std::optional<std::size_t> parse_depth(const std::string& text) {
    if (text == "default") {
        return std::nullopt;
    }
    if (text == "full" || text == "FULL") {
        return kFullDepth;
    }
    char* end = nullptr;
    auto v = std::strtoull(text.c_str(), &end, 10);
    if (text.empty() || *end != '\0' || v == 0) {
        fail(ErrorCode::InvalidArgument, "--k expects a positive integer or 'full', got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

inline NormalizationSpec parse_normalization(const SharedFlags& f, const std::string& scheme) {
    NormalizationSpec spec;
    spec.scheme = parse_scheme(scheme);
    auto comma = f.robust_quantiles.find(',');
    if (comma == std::string::npos) {
        fail(ErrorCode::InvalidArgument, "--robust-quantiles expects '<low>,<high>'");
    }
    try {
        std::size_t used = 0;
        auto low_text = f.robust_quantiles.substr(0, comma);
        auto high_text = f.robust_quantiles.substr(comma + 1);
        spec.robust_low = std::stod(low_text, &used);
        if (used != low_text.size()) throw std::invalid_argument("low");
        spec.robust_high = std::stod(high_text, &used);
        if (used != high_text.size()) throw std::invalid_argument("high");
    } catch (const std::logic_error&) {
        fail(ErrorCode::InvalidArgument, "cannot parse --robust-quantiles '" + f.robust_quantiles + "'");
    }
    spec.formula = f.literal_formula ? NormFormula::Literal : NormFormula::Standard;
    spec.validate();
    return spec;
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/**
 * Writes to `path`, or to `fallback` when the path is empty.
 */
template<class Writer>
void emit(const std::string& path, std::ostream& fallback, Writer writer) {
    if (path.empty()) {
        writer(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) {
        fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    }
    writer(file);
    if (!file) {
        fail(ErrorCode::Io, "failed writing '" + path + "'");
    }
}

struct Stores {
    DescriptorSet index;
    std::unique_ptr<DescriptorSet> queries;  ///< null when the index doubles as the query set

    const DescriptorSet* query_ptr() const { return queries.get(); }

    const DescriptorSet& query_set() const { return queries ? *queries : index; }
};

inline Stores load_stores(const std::string& index_path, const std::string& query_path) {
    Stores s;
    s.index = load_descriptors(index_path);
    if (!query_path.empty() && query_path != "SAME" && query_path != "same") {
        s.queries = std::make_unique<DescriptorSet>(load_descriptors(query_path));
    }
    return s;
}

inline void report_warnings(std::ostream& err, std::size_t norm_warnings, std::size_t metric_warnings) {
    if (norm_warnings) {
        err << "warning: " << norm_warnings << " degenerate row(s)/column(s) passed through normalization unchanged\n";
    }
    if (metric_warnings) {
        err << "warning: " << metric_warnings << " undefined distance(s) ranked last\n";
    }
}

/**
 * Runs the command line. Returns the process exit status: nonzero iff an error was reported.
 */
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dense-descriptor retrieval evaluation"};
    app.require_subcommand(1);
    SharedFlags f;

    auto add_metric = [&](CLI::App* c) { c->add_option("--metric", f.metric, "manhattan|euclidean|cosine|braycurtis|canberra|chebyshev|correlation"); };
    auto add_norm = [&](CLI::App* c) {
        c->add_option("--norm", f.norm, "l1-axis1|l1-axis0|l2-axis1|l2-axis0|robust|none");
        c->add_option("--robust-quantiles", f.robust_quantiles, "ROBUST quantile fractions as <low,high>");
        c->add_flag("--literal-formula", f.literal_formula, "L1 by signed sum and L2 without square root");
    };
    auto add_threads = [&](CLI::App* c) { c->add_option("--threads", f.threads, "worker threads (default: $VITRIEVER_THREADS or all cores)"); };
    auto add_gt = [&](CLI::App* c) {
        c->add_option("--layout", f.layout, "oxford|paris|holidays|ukbench|json");
        c->add_option("--gt", f.gt, "ground-truth directory (oxford, paris) or JSON file");
    };

    std::string input, index_path, query_path = "SAME", fit_in, fit_out, label = "model", metrics_list, norms_list;
    bool exclude_self = false, parallel_cells = false;

    auto* ingest = app.add_subcommand("ingest", "Convert a text listing or store into a validated binary store");
    ingest->add_option("input", input, "text listing or binary store")->required();
    ingest->add_option("--out", f.out, "output store")->required();

    auto* normalize = app.add_subcommand("normalize", "Fit a normalizer on an index store and apply it");
    normalize->add_option("--index", index_path, "store the normalizer is fitted on")->required();
    normalize->add_option("--input", input, "store to transform (default: the index)");
    normalize->add_option("--out", f.out, "output store")->required();
    normalize->add_option("--fit-out", fit_out, "write the fitted normalizer sidecar");
    normalize->add_option("--fit-in", fit_in, "apply a saved sidecar instead of fitting");
    add_norm(normalize);

    auto* search = app.add_subcommand("search", "Rank the index for every query");
    search->add_option("--index", index_path, "index store")->required();
    search->add_option("--query", query_path, "query store, or SAME");
    search->add_option("--k", f.k, "depth: positive integer or full (default full)");
    search->add_option("--out", f.out, "ranking file (default stdout)");
    search->add_flag("--exclude-self", exclude_self, "leave each query out of its own ranking");
    add_metric(search);
    add_norm(search);
    add_threads(search);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score one normalization/metric configuration");
    evaluate_cmd->add_option("--index", index_path, "index store")->required();
    evaluate_cmd->add_option("--query", query_path, "query store, or SAME");
    evaluate_cmd->add_option("--k", f.k, "depth: positive integer or full (default: full for mAP, 4 for N-S)");
    evaluate_cmd->add_option("--out", f.out, "machine-readable report file");
    add_gt(evaluate_cmd);
    add_metric(evaluate_cmd);
    add_norm(evaluate_cmd);
    add_threads(evaluate_cmd);

    auto* grid = app.add_subcommand("grid", "Score every normalization x metric combination");
    grid->add_option("--index", index_path, "index store")->required();
    grid->add_option("--query", query_path, "query store, or SAME");
    grid->add_option("--k", f.k, "depth: positive integer or full");
    grid->add_option("--label", label, "model label for the table");
    grid->add_option("--metrics", metrics_list, "comma-separated metrics (default all seven)");
    grid->add_option("--norms", norms_list, "comma-separated normalizations (default the five table rows)");
    grid->add_option("--out", f.out, "table file (default stdout)");
    grid->add_option("--csv", f.csv, "CSV file");
    grid->add_flag("--parallel-cells", parallel_cells, "evaluate cells concurrently");
    grid->add_option("--robust-quantiles", f.robust_quantiles, "ROBUST quantile fractions as <low,high>");
    grid->add_flag("--literal-formula", f.literal_formula, "L1 by signed sum and L2 without square root");
    add_gt(grid);
    add_threads(grid);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (f.threads == 0) {
            fail(ErrorCode::InvalidArgument, "--threads must be positive");
        }
        SearchOptions search_options;
        search_options.threads = f.threads;

        if (*ingest) {
            auto bytes = detail::read_file(input);
            auto set = looks_like_store(bytes) ? decode_store(bytes, input) : parse_text_descriptors(bytes, input);
            write_store(set, f.out);
            out << "wrote " << f.out << ": N=" << set.matrix.count() << " D=" << set.matrix.dim() << '\n';
            return 0;
        }

        if (*normalize) {
            auto index = load_descriptors(index_path);
            auto target = input.empty() ? index : load_descriptors(input);
            FittedNormalizer normalizer = fit_in.empty()
                ? fit(parse_normalization(f, f.norm), index.matrix)
                : read_normalizer(fit_in);
            std::size_t warnings = 0;
            DescriptorSet result(apply(normalizer, target.matrix, &warnings), target.ids);
            write_store(result, f.out);
            if (!fit_out.empty()) {
                write_normalizer(normalizer, fit_out);
            }
            report_warnings(err, warnings, 0);
            out << "wrote " << f.out << ": " << scheme_name(normalizer.scheme()) << ", N=" << result.matrix.count()
                << " D=" << result.matrix.dim() << '\n';
            return 0;
        }

        if (*search) {
            auto stores = load_stores(index_path, query_path);
            auto normalizer = fit(parse_normalization(f, f.norm), stores.index.matrix);
            std::size_t norm_warnings = 0, metric_warnings = 0;
            DescriptorSet index(apply(normalizer, stores.index.matrix, &norm_warnings), stores.index.ids);
            DescriptorSet queries = stores.queries
                ? DescriptorSet(apply(normalizer, stores.queries->matrix, &norm_warnings), stores.queries->ids)
                : index;
            Exclusions exclusions;
            if (exclude_self) {
                for (const auto& id : queries.ids) exclusions[id].insert(id);
            }
            auto depth = parse_depth(f.k).value_or(kFullDepth);
            auto rankings = batch_search(queries, index, parse_metric(f.metric), depth, exclusions, search_options, &metric_warnings);
            emit(f.out, out, [&](std::ostream& o) { write_rankings(o, rankings); });
            report_warnings(err, norm_warnings, metric_warnings);
            return 0;
        }

        auto stores = load_stores(index_path, query_path);
        auto gt = load_ground_truth(parse_layout(f.layout), f.gt, stores.index.ids, stores.query_set().ids);
        EvaluateOptions common;
        common.depth = parse_depth(f.k);
        common.search = search_options;

        if (*evaluate_cmd) {
            common.metric = parse_metric(f.metric);
            common.normalization = parse_normalization(f, f.norm);
            auto result = evaluate(stores.index, stores.query_ptr(), gt, common);
            write_report_table(out, result.report);
            if (!f.out.empty()) {
                emit(f.out, out, [&](std::ostream& o) { write_report_lines(o, result.report); });
            }
            report_warnings(err, result.normalization_warnings, result.metric_warnings);
            return 0;
        }

        if (*grid) {
            GridSpec spec;
            spec.label = label;
            spec.base = parse_normalization(f, "none");
            if (!metrics_list.empty()) {
                spec.metrics.clear();
                for (const auto& m : split_list(metrics_list)) spec.metrics.push_back(parse_metric(m));
            }
            if (!norms_list.empty()) {
                spec.schemes.clear();
                for (const auto& s : split_list(norms_list)) spec.schemes.push_back(parse_scheme(s));
            }
            auto result = run_grid(stores.index, stores.query_ptr(), gt, spec, common, parallel_cells);
            emit(f.out, out, [&](std::ostream& o) { write_grid_table(o, result); });
            if (!f.csv.empty()) {
                emit(f.csv, out, [&](std::ostream& o) { write_grid_csv(o, result); });
            }
            if (result.any_failed()) {
                err << "error: one or more grid cells failed\n";
                return 1;
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}

#endif
