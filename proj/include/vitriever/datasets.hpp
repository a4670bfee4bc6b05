#ifndef VITRIEVER_DATASETS_HPP
#define VITRIEVER_DATASETS_HPP

#include "error.hpp"
#include "eval.hpp"
#include "store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

/**
 * @file datasets.hpp
 *
 * @brief Ground-truth readers for the benchmark layouts and a generic JSON format.
 *
 * Benchmarks name images inconsistently (paths, extensions, case, the `oxc1_` prefix),
 * so ground-truth tokens are matched against store ids through `normalize_id()`.
 * Parsers return ground truth expressed in the original store ids.
 */

namespace vitriever {

enum class DatasetLayout {
    Oxford,
    Paris,
    Holidays,
    UKBench,
    GenericJson
};

inline DatasetLayout parse_layout(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "oxford") return DatasetLayout::Oxford;
    if (lower == "paris") return DatasetLayout::Paris;
    if (lower == "holidays") return DatasetLayout::Holidays;
    if (lower == "ukbench") return DatasetLayout::UKBench;
    if (lower == "json") return DatasetLayout::GenericJson;
    fail(ErrorCode::InvalidArgument, "unknown layout '" + std::string(name) + "'");
}

/**
 * Strips directory components and an image extension, then lower-cases.
 */
inline std::string normalize_id(std::string_view raw) {
    auto slash = raw.find_last_of("/\\");
    if (slash != std::string_view::npos) {
        raw.remove_prefix(slash + 1);
    }
    std::string id(raw);
    std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::tolower(c); });
    static constexpr std::array<std::string_view, 11> extensions{
        ".jpg", ".jpeg", ".png", ".ppm", ".pgm", ".bmp", ".gif", ".tif", ".tiff", ".webp", ".jp2"
    };
    for (auto ext : extensions) {
        if (id.size() > ext.size() && id.compare(id.size() - ext.size(), ext.size(), ext) == 0) {
            id.resize(id.size() - ext.size());
            break;
        }
    }
    return id;
}

/**
 * @brief Maps normalized ground-truth tokens back to store ids.
 */
class IdResolver {
public:
    explicit IdResolver(const std::vector<std::string>& ids) {
        for (const auto& id : ids) {
            auto key = normalize_id(id);
            auto [it, inserted] = lookup_.emplace(key, id);
            if (!inserted) {
                ambiguous_.insert(key);
            }
        }
    }

    std::optional<std::string> find(std::string_view token) const {
        auto key = normalize_id(token);
        if (ambiguous_.count(key)) {
            fail(ErrorCode::GroundTruth, "'" + std::string(token) + "' matches more than one store id");
        }
        auto it = lookup_.find(key);
        if (it == lookup_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::string require(std::string_view token, const std::string& context) const {
        auto found = find(token);
        if (!found) {
            fail(ErrorCode::GroundTruth, context + ": '" + std::string(token) + "' is not in the descriptor store");
        }
        return *found;
    }

private:
    std::unordered_map<std::string, std::string> lookup_;
    IdSet ambiguous_;
};

/**
 * @brief Re-expresses ground truth in store ids.
 *
 * Query ids are looked up in `query_ids`, positives and junk in `index_ids`.
 * A missing query or positive is an error; junk absent from the index is dropped, since it cannot be ranked.
 */
inline GroundTruth resolve_ground_truth(const GroundTruth& gt, const std::vector<std::string>& index_ids, const std::vector<std::string>& query_ids) {
    IdResolver index(index_ids);
    IdResolver queries(query_ids);
    GroundTruth out;
    out.protocol = gt.protocol;
    for (const auto& q : gt.queries) {
        GroundTruthQuery r;
        r.query = queries.require(q.query, "query");
        r.exclude_self = q.exclude_self;
        for (const auto& p : q.positives) {
            r.positives.insert(index.require(p, "positive of query '" + q.query + "'"));
        }
        for (const auto& j : q.junk) {
            if (auto found = index.find(j)) {
                r.junk.insert(*found);
            }
        }
        out.queries.push_back(std::move(r));
    }
    out.validate();
    return out;
}

namespace detail {

inline std::vector<std::string> read_tokens(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::GroundTruth, "missing ground-truth file '" + path.string() + "'");
    }
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) {
        out.push_back(tok);
    }
    return out;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}

/**
 * @brief Oxford5k / Paris6k ground truth.
 *
 * Reads every `<name>_query.txt` in `gt_dir` with its `_good`, `_ok` and `_junk` companions.
 * Positives are good and ok; the query's bounding box is validated but not used,
 * since whole images serve as queries.
 */
inline GroundTruth parse_oxford_gt(const std::filesystem::path& gt_dir, const std::vector<std::string>& image_ids) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(gt_dir)) {
        fail(ErrorCode::GroundTruth, "ground-truth directory '" + gt_dir.string() + "' does not exist");
    }
    static constexpr std::string_view suffix = "_query.txt";
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(gt_dir)) {
        auto file = entry.path().filename().string();
        if (entry.is_regular_file() && file.size() > suffix.size() &&
            file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0) {
            names.push_back(file.substr(0, file.size() - suffix.size()));
        }
    }
    std::sort(names.begin(), names.end());

    IdResolver resolver(image_ids);
    GroundTruth gt;
    gt.protocol = Protocol::Map;
    for (const auto& name : names) {
        auto query_tokens = detail::read_tokens(gt_dir / (name + "_query.txt"));
        if (query_tokens.size() != 5) {
            fail(ErrorCode::GroundTruth, name + "_query.txt: expected an image token and 4 box coordinates");
        }
        for (std::size_t i = 1; i < 5; ++i) {
            char* end = nullptr;
            std::strtod(query_tokens[i].c_str(), &end);
            if (end != query_tokens[i].c_str() + query_tokens[i].size()) {
                fail(ErrorCode::GroundTruth, name + "_query.txt: bad box coordinate '" + query_tokens[i] + "'");
            }
        }
        std::string token = query_tokens[0];
        if (token.rfind("oxc1_", 0) == 0) {
            token = token.substr(5);
        }

        GroundTruthQuery q;
        q.query = resolver.require(token, name + "_query.txt");
        for (const char* part : {"_good.txt", "_ok.txt"}) {
            for (const auto& t : detail::read_tokens(gt_dir / (name + part))) {
                q.positives.insert(resolver.require(t, name + part));
            }
        }
        for (const auto& t : detail::read_tokens(gt_dir / (name + "_junk.txt"))) {
            if (auto found = resolver.find(t)) {
                q.junk.insert(*found);
            }
        }
        if (q.positives.empty()) {
            fail(ErrorCode::GroundTruth, name + ": no positives");
        }
        gt.queries.push_back(std::move(q));
    }
    gt.validate();
    return gt;
}

/**
 * @brief INRIA Holidays ground truth derived from image names.
 *
 * Ids are 6-digit stems: 4 digits of group, 2 of member. The `..00` member of
 * each group is the query, the rest are its positives, and the query is
 * excluded from its own ranking.
 */
inline GroundTruth parse_holidays(const std::vector<std::string>& image_ids) {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> groups;
    for (const auto& id : image_ids) {
        auto stem = normalize_id(id);
        if (stem.size() != 6 || !detail::all_digits(stem)) {
            fail(ErrorCode::GroundTruth, "'" + id + "' is not a 6-digit Holidays image name");
        }
        groups[stem.substr(0, 4)].emplace_back(stem, id);
    }
    GroundTruth gt;
    gt.protocol = Protocol::Map;
    for (auto& [group, members] : groups) {
        std::sort(members.begin(), members.end());
        if (members.size() < 2) {
            fail(ErrorCode::GroundTruth, "Holidays group " + group + " has a single image");
        }
        if (members.front().first.substr(4) != "00") {
            fail(ErrorCode::GroundTruth, "Holidays group " + group + " has no '00' query image");
        }
        GroundTruthQuery q;
        q.query = members.front().second;
        q.exclude_self = true;
        for (std::size_t i = 1; i < members.size(); ++i) {
            q.positives.insert(members[i].second);
        }
        gt.queries.push_back(std::move(q));
    }
    gt.validate();
    return gt;
}

/**
 * @brief UKBench ground truth: consecutive blocks of four images form a group.
 *
 * The sequence number is the trailing digit run of each id and must cover
 * `0 .. N-1` without gaps. Every image is a query whose positives are its
 * own group, itself included.
 */
inline GroundTruth parse_ukbench(const std::vector<std::string>& image_ids) {
    if (image_ids.size() % 4 != 0) {
        fail(ErrorCode::GroundTruth, "UKBench listing of " + std::to_string(image_ids.size()) + " images is not a multiple of 4");
    }
    std::vector<std::pair<std::size_t, std::string>> ordered;
    ordered.reserve(image_ids.size());
    for (const auto& id : image_ids) {
        auto stem = normalize_id(id);
        std::size_t start = stem.size();
        while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1]))) {
            --start;
        }
        if (start == stem.size()) {
            fail(ErrorCode::GroundTruth, "'" + id + "' carries no sequence number");
        }
        auto digits = stem.substr(start);
        if (digits.size() > 18) {
            fail(ErrorCode::GroundTruth, "'" + id + "' has an out-of-range sequence number");
        }
        ordered.emplace_back(std::stoull(digits), id);
    }
    std::sort(ordered.begin(), ordered.end());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (ordered[i].first != i) {
            fail(ErrorCode::GroundTruth, "UKBench sequence has a gap or repeat at position " + std::to_string(i) +
                " ('" + ordered[i].second + "')");
        }
    }

    GroundTruth gt;
    gt.protocol = Protocol::Ns;
    for (std::size_t g = 0; g < ordered.size(); g += 4) {
        IdSet group;
        for (std::size_t i = g; i < g + 4; ++i) {
            group.insert(ordered[i].second);
        }
        for (std::size_t i = g; i < g + 4; ++i) {
            gt.queries.push_back(GroundTruthQuery{ordered[i].second, group, {}, false});
        }
    }
    gt.validate();
    return gt;
}

/**
 * @name Generic JSON ground truth
 *
 * ```
 * {"protocol": "map" | "ns",
 *  "queries": [{"query": "q1", "positives": ["a", ...], "junk": [...], "exclude_self": false}, ...]}
 * ```
 * `junk` and `exclude_self` are optional.
 */
///@{
inline GroundTruth ground_truth_from_json(const nlohmann::json& doc) {
    auto schema = [](const std::string& what) {
        fail(ErrorCode::GroundTruth, "ground-truth JSON: " + what);
    };
    if (!doc.is_object()) schema("document must be an object");
    if (!doc.contains("protocol") || !doc["protocol"].is_string()) schema("missing string field 'protocol'");
    if (!doc.contains("queries") || !doc["queries"].is_array()) schema("missing array field 'queries'");

    GroundTruth gt;
    auto protocol = doc["protocol"].get<std::string>();
    std::transform(protocol.begin(), protocol.end(), protocol.begin(), [](unsigned char c) { return std::tolower(c); });
    if (protocol == "map") {
        gt.protocol = Protocol::Map;
    } else if (protocol == "ns") {
        gt.protocol = Protocol::Ns;
    } else {
        schema("unknown protocol '" + protocol + "'");
    }

    auto string_set = [&](const nlohmann::json& arr, const std::string& field) {
        if (!arr.is_array()) schema("'" + field + "' must be an array");
        IdSet out;
        for (const auto& v : arr) {
            if (!v.is_string()) schema("'" + field + "' must contain strings");
            out.insert(v.get<std::string>());
        }
        return out;
    };

    for (const auto& entry : doc["queries"]) {
        if (!entry.is_object()) schema("each query must be an object");
        if (!entry.contains("query") || !entry["query"].is_string()) schema("query entry without a string 'query'");
        if (!entry.contains("positives")) schema("query entry without 'positives'");
        GroundTruthQuery q;
        q.query = entry["query"].get<std::string>();
        q.positives = string_set(entry["positives"], "positives");
        if (entry.contains("junk")) {
            q.junk = string_set(entry["junk"], "junk");
        }
        if (entry.contains("exclude_self")) {
            if (!entry["exclude_self"].is_boolean()) schema("'exclude_self' must be a boolean");
            q.exclude_self = entry["exclude_self"].get<bool>();
        }
        gt.queries.push_back(std::move(q));
    }
    gt.validate();
    return gt;
}

inline GroundTruth parse_generic_json(const std::string& path) {
    auto text = detail::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::GroundTruth, path + ": " + e.what());
    }
    return ground_truth_from_json(doc);
}

/**
 * Serializes with sorted id lists so the output is byte-stable.
 */
inline nlohmann::json ground_truth_to_json(const GroundTruth& gt) {
    auto sorted = [](const IdSet& s) {
        std::vector<std::string> v(s.begin(), s.end());
        std::sort(v.begin(), v.end());
        return v;
    };
    nlohmann::json doc;
    doc["protocol"] = protocol_name(gt.protocol);
    doc["queries"] = nlohmann::json::array();
    for (const auto& q : gt.queries) {
        nlohmann::json entry;
        entry["query"] = q.query;
        entry["positives"] = sorted(q.positives);
        entry["junk"] = sorted(q.junk);
        entry["exclude_self"] = q.exclude_self;
        doc["queries"].push_back(std::move(entry));
    }
    return doc;
}

inline void write_generic_json(const GroundTruth& gt, const std::string& path) {
    detail::write_file(path, ground_truth_to_json(gt).dump(2) + "\n");
}
///@}

/**
 * Reads an id listing, one id per line; blank lines are skipped.
 */
inline std::vector<std::string> read_id_listing(const std::string& path) {
    std::istringstream in(detail::read_file(path));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            out.push_back(line);
        }
    }
    return out;
}

/**
 * @brief Loads ground truth for any layout, resolved against the store ids.
 *
 * @param location Directory for Oxford/Paris, JSON file for the generic layout;
 * ignored for Holidays and UKBench, whose ground truth follows from the image names.
 */
inline GroundTruth load_ground_truth(DatasetLayout layout, const std::string& location,
    const std::vector<std::string>& index_ids, const std::vector<std::string>& query_ids)
{
    switch (layout) {
        case DatasetLayout::Oxford:
        case DatasetLayout::Paris:
            return resolve_ground_truth(parse_oxford_gt(location, index_ids), index_ids, query_ids);
        case DatasetLayout::Holidays:
            return resolve_ground_truth(parse_holidays(index_ids), index_ids, query_ids);
        case DatasetLayout::UKBench:
            return resolve_ground_truth(parse_ukbench(index_ids), index_ids, query_ids);
        case DatasetLayout::GenericJson:
            return resolve_ground_truth(parse_generic_json(location), index_ids, query_ids);
    }
    fail(ErrorCode::InvalidArgument, "unknown layout");
}

}

#endif
