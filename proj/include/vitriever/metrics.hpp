#ifndef VITRIEVER_METRICS_HPP
#define VITRIEVER_METRICS_HPP

#include "error.hpp"
#include "store.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

/**
 * @file metrics.hpp
 *
 * @brief Distance functions between descriptors.
 *
 * Inputs are 32-bit; every accumulation is carried out in 64-bit.
 * All seven functions are oriented so that a smaller value means closer:
 * cosine and correlation return one minus the similarity.
 */

namespace vitriever {

/**
 * Order matches the result-table columns.
 */
enum class Metric {
    Manhattan,
    Euclidean,
    Cosine,
    BrayCurtis,
    Canberra,
    Chebyshev,
    Correlation
};

inline constexpr std::array<Metric, 7> kAllMetrics{
    Metric::Manhattan, Metric::Euclidean, Metric::Cosine, Metric::BrayCurtis,
    Metric::Canberra, Metric::Chebyshev, Metric::Correlation
};

/**
 * Lower-case name used on the command line.
 */
inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Manhattan: return "manhattan";
        case Metric::Euclidean: return "euclidean";
        case Metric::Cosine: return "cosine";
        case Metric::BrayCurtis: return "braycurtis";
        case Metric::Canberra: return "canberra";
        case Metric::Chebyshev: return "chebyshev";
        case Metric::Correlation: return "correlation";
    }
    return "?";
}

/**
 * Short column heading used in result tables.
 */
inline const char* metric_label(Metric m) {
    switch (m) {
        case Metric::Manhattan: return "Manh.";
        case Metric::Euclidean: return "Eucl.";
        case Metric::Cosine: return "Cos";
        case Metric::BrayCurtis: return "BC";
        case Metric::Canberra: return "Canb.";
        case Metric::Chebyshev: return "Cheb.";
        case Metric::Correlation: return "Correl.";
    }
    return "?";
}

/**
 * Case-insensitive inverse of `metric_name()`.
 */
inline Metric parse_metric(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto m : kAllMetrics) {
        if (lower == metric_name(m)) {
            return m;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

/**
 * @brief Per-vector quantities reused across many distance evaluations.
 */
struct VectorProfile {
    double norm = 0;           ///< sqrt(sum x^2)
    double mean = 0;
    double centered_norm = 0;  ///< sqrt(sum (x - mean)^2)
    bool zero = true;          ///< every element is exactly zero
    bool constant = true;      ///< every element equals the first
};

namespace detail {

inline double sum_of_squares(std::span<const float> x) {
    double acc = 0;
    const float* p = x.data();
    const std::size_t n = x.size();
#pragma omp simd reduction(+:acc)
    for (std::size_t i = 0; i < n; ++i) {
        double v = p[i];
        acc += v * v;
    }
    return acc;
}

inline double sum(std::span<const float> x) {
    double acc = 0;
    const float* p = x.data();
    const std::size_t n = x.size();
#pragma omp simd reduction(+:acc)
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(p[i]);
    }
    return acc;
}

inline double centered_sum_of_squares(std::span<const float> x, double mean) {
    double acc = 0;
    const float* p = x.data();
    const std::size_t n = x.size();
#pragma omp simd reduction(+:acc)
    for (std::size_t i = 0; i < n; ++i) {
        double v = static_cast<double>(p[i]) - mean;
        acc += v * v;
    }
    return acc;
}

}

inline VectorProfile profile(std::span<const float> x) {
    VectorProfile out;
    if (x.empty()) {
        return out;
    }
    out.norm = std::sqrt(detail::sum_of_squares(x));
    out.mean = detail::sum(x) / static_cast<double>(x.size());
    out.centered_norm = std::sqrt(detail::centered_sum_of_squares(x, out.mean));
    out.zero = out.norm == 0;
    const float first = x.front();
    out.constant = std::all_of(x.begin(), x.end(), [&](float v) { return v == first; });
    return out;
}

inline std::vector<VectorProfile> profile_rows(const DescriptorMatrix& matrix) {
    std::vector<VectorProfile> out(matrix.count());
    for (std::size_t r = 0; r < matrix.count(); ++r) {
        out[r] = profile(matrix.row(r));
    }
    return out;
}

/**
 * @brief A query vector widened to 64-bit, with its profile and mean-centered copy.
 */
class PreparedQuery {
public:
    PreparedQuery() = default;

    explicit PreparedQuery(std::span<const float> q) : values_(q.begin(), q.end()), profile_(profile(q)) {
        centered_.resize(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) {
            centered_[i] = values_[i] - profile_.mean;
        }
    }

    std::size_t dim() const { return values_.size(); }

    const double* values() const { return values_.data(); }

    const double* centered() const { return centered_.data(); }

    const VectorProfile& stats() const { return profile_; }

private:
    std::vector<double> values_;
    std::vector<double> centered_;
    VectorProfile profile_;
};

namespace detail {

inline constexpr double kBrayCurtisGuard = 1e-12;

inline double clamp_similarity_distance(double d) {
    return d < 0 ? 0 : d;
}

/**
 * Distance between a prepared query and one row. Returns NaN when the pair
 * is outside the metric's domain (zero vector for cosine, constant vector
 * for correlation, vanishing Bray-Curtis denominator).
 */
template<Metric M>
double kernel(const PreparedQuery& query, const float* row, const VectorProfile& row_profile) {
    const double* q = query.values();
    const std::size_t n = query.dim();

    if constexpr (M == Metric::Manhattan) {
        double acc = 0;
#pragma omp simd reduction(+:acc)
        for (std::size_t i = 0; i < n; ++i) {
            acc += std::abs(q[i] - static_cast<double>(row[i]));
        }
        return acc;

    } else if constexpr (M == Metric::Euclidean) {
        double acc = 0;
#pragma omp simd reduction(+:acc)
        for (std::size_t i = 0; i < n; ++i) {
            double d = q[i] - static_cast<double>(row[i]);
            acc += d * d;
        }
        return std::sqrt(acc);

    } else if constexpr (M == Metric::Cosine) {
        if (query.stats().zero || row_profile.zero) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        double acc = 0;
#pragma omp simd reduction(+:acc)
        for (std::size_t i = 0; i < n; ++i) {
            acc += q[i] * static_cast<double>(row[i]);
        }
        return clamp_similarity_distance(1.0 - acc / (query.stats().norm * row_profile.norm));

    } else if constexpr (M == Metric::BrayCurtis) {
        double num = 0, den = 0;
#pragma omp simd reduction(+:num, den)
        for (std::size_t i = 0; i < n; ++i) {
            double r = row[i];
            num += std::abs(q[i] - r);
            den += q[i] + r;
        }
        if (std::abs(den) < kBrayCurtisGuard) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return num / den;

    } else if constexpr (M == Metric::Canberra) {
        double acc = 0;
#pragma omp simd reduction(+:acc)
        for (std::size_t i = 0; i < n; ++i) {
            double r = row[i];
            double num = std::abs(q[i] - r);
            double den = std::abs(q[i]) + std::abs(r);
            acc += den > 0 ? num / den : 0.0;
        }
        return acc;

    } else if constexpr (M == Metric::Chebyshev) {
        double best = 0;
#pragma omp simd reduction(max:best)
        for (std::size_t i = 0; i < n; ++i) {
            double d = std::abs(q[i] - static_cast<double>(row[i]));
            best = d > best ? d : best;
        }
        return best;

    } else {
        static_assert(M == Metric::Correlation);
        if (query.stats().constant || row_profile.constant) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double* qc = query.centered();
        const double mean = row_profile.mean;
        double acc = 0;
#pragma omp simd reduction(+:acc)
        for (std::size_t i = 0; i < n; ++i) {
            acc += qc[i] * (static_cast<double>(row[i]) - mean);
        }
        return clamp_similarity_distance(1.0 - acc / (query.stats().centered_norm * row_profile.centered_norm));
    }
}

}

/**
 * Calls `fun(std::integral_constant<Metric, M>{})` for the runtime metric `m`,
 * so the body can be compiled once per metric.
 */
template<class Function>
decltype(auto) dispatch_metric(Metric m, Function&& fun) {
    switch (m) {
        case Metric::Manhattan: return fun(std::integral_constant<Metric, Metric::Manhattan>{});
        case Metric::Euclidean: return fun(std::integral_constant<Metric, Metric::Euclidean>{});
        case Metric::Cosine: return fun(std::integral_constant<Metric, Metric::Cosine>{});
        case Metric::BrayCurtis: return fun(std::integral_constant<Metric, Metric::BrayCurtis>{});
        case Metric::Canberra: return fun(std::integral_constant<Metric, Metric::Canberra>{});
        case Metric::Chebyshev: return fun(std::integral_constant<Metric, Metric::Chebyshev>{});
        case Metric::Correlation: return fun(std::integral_constant<Metric, Metric::Correlation>{});
    }
    fail(ErrorCode::InvalidArgument, "unknown metric");
}

/**
 * @brief Distance between two descriptors.
 *
 * Throws `ErrorCode::DegenerateInput` for a zero vector under cosine,
 * a constant vector under correlation, or a Bray-Curtis denominator below 1e-12 in magnitude.
 */
inline double distance(Metric metric, std::span<const float> p, std::span<const float> q) {
    if (p.size() != q.size()) {
        fail(ErrorCode::DimensionMismatch, "vectors of length " + std::to_string(p.size()) + " and " +
            std::to_string(q.size()));
    }
    if (p.empty()) {
        fail(ErrorCode::InvalidArgument, "vectors must be non-empty");
    }
    PreparedQuery prepared(p);
    auto q_profile = profile(q);
    double d = dispatch_metric(metric, [&](auto tag) {
        return detail::kernel<decltype(tag)::value>(prepared, q.data(), q_profile);
    });
    if (std::isnan(d)) {
        fail(ErrorCode::DegenerateInput, std::string(metric_name(metric)) + " distance is undefined for this pair");
    }
    return d;
}

inline double distance(Metric metric, const std::vector<float>& p, const std::vector<float>& q) {
    return distance(metric, std::span<const float>(p), std::span<const float>(q));
}

/**
 * @brief Distances from one query to every row of `index`, in row order.
 *
 * Rows for which the distance is undefined get `+inf` and are counted in `warnings`.
 *
 * @param profiles Optional precomputed `profile_rows(index)`.
 */
inline std::vector<double> distance_batch(
    Metric metric,
    std::span<const float> query,
    const DescriptorMatrix& index,
    std::size_t* warnings = nullptr,
    const std::vector<VectorProfile>* profiles = nullptr)
{
    if (query.size() != index.dim()) {
        fail(ErrorCode::DimensionMismatch, "query of length " + std::to_string(query.size()) +
            " against index of dimension " + std::to_string(index.dim()));
    }
    std::vector<double> out(index.count());
    if (index.empty()) {
        return out;
    }

    std::vector<VectorProfile> local;
    if (!profiles) {
        local = profile_rows(index);
        profiles = &local;
    }
    PreparedQuery prepared(query);
    std::size_t bad = 0;
    dispatch_metric(metric, [&](auto tag) {
        constexpr Metric M = decltype(tag)::value;
        for (std::size_t r = 0; r < index.count(); ++r) {
            double d = detail::kernel<M>(prepared, index.row(r).data(), (*profiles)[r]);
            if (std::isnan(d)) {
                d = std::numeric_limits<double>::infinity();
                ++bad;
            }
            out[r] = d;
        }
    });
    if (warnings) {
        *warnings += bad;
    }
    return out;
}

}

#endif
