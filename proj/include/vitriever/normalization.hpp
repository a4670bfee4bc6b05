#ifndef VITRIEVER_NORMALIZATION_HPP
#define VITRIEVER_NORMALIZATION_HPP

#include "error.hpp"
#include "store.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file normalization.hpp
 *
 * @brief Post-processing normalizations applied to descriptor sets.
 *
 * Axis-1 schemes normalize each descriptor independently and need no fitting.
 * Axis-0 schemes divide each feature column by a norm computed over a reference set,
 * and ROBUST maps each column through `(x - q_low) / (q_high - q_low)` using
 * empirical quantiles of the reference set.
 * Fitted statistics come from the index set and are reused for queries.
 */

namespace vitriever {

enum class Scheme {
    None,
    L1Axis1,
    L2Axis1,
    L1Axis0,
    L2Axis0,
    Robust
};

/**
 * Row order of the result tables.
 */
inline constexpr std::array<Scheme, 5> kTableSchemes{
    Scheme::L2Axis1, Scheme::L2Axis0, Scheme::L1Axis1, Scheme::L1Axis0, Scheme::Robust
};

/**
 * Which norm definition the L1/L2 schemes use.
 *
 * `Standard` divides by sum |x| and sqrt(sum x^2).
 * `Literal` divides by the signed sum and by sum x^2 without the square root,
 * matching the formulas as typeset in the original write-up; it exists only for A/B comparison.
 */
enum class NormFormula {
    Standard,
    Literal
};

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::None: return "none";
        case Scheme::L1Axis1: return "l1-axis1";
        case Scheme::L2Axis1: return "l2-axis1";
        case Scheme::L1Axis0: return "l1-axis0";
        case Scheme::L2Axis0: return "l2-axis0";
        case Scheme::Robust: return "robust";
    }
    return "?";
}

inline const char* scheme_label(Scheme s) {
    switch (s) {
        case Scheme::None: return "None";
        case Scheme::L1Axis1: return "L1 Axis=1";
        case Scheme::L2Axis1: return "L2 Axis=1";
        case Scheme::L1Axis0: return "L1 Axis=0";
        case Scheme::L2Axis0: return "L2 Axis=0";
        case Scheme::Robust: return "ROBUST";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto s : {Scheme::None, Scheme::L1Axis1, Scheme::L2Axis1, Scheme::L1Axis0, Scheme::L2Axis0, Scheme::Robust}) {
        if (lower == scheme_name(s)) {
            return s;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown normalization '" + std::string(name) + "'");
}

inline bool is_axis0(Scheme s) { return s == Scheme::L1Axis0 || s == Scheme::L2Axis0; }

inline bool is_fitted(Scheme s) { return is_axis0(s) || s == Scheme::Robust; }

struct NormalizationSpec {
    Scheme scheme = Scheme::None;
    double robust_low = 0.25;
    double robust_high = 0.75;
    NormFormula formula = NormFormula::Standard;

    void validate() const {
        if (!(robust_low > 0 && robust_low < 1 && robust_high > 0 && robust_high < 1)) {
            fail(ErrorCode::InvalidArgument, "robust quantiles must lie in (0, 1)");
        }
        if (!(robust_low < robust_high)) {
            fail(ErrorCode::InvalidArgument, "robust low quantile must be below the high quantile");
        }
    }

    friend bool operator==(const NormalizationSpec&, const NormalizationSpec&) = default;
};

/**
 * Denominators smaller than this in magnitude are treated as zero.
 */
inline constexpr double kDegenerateDenominator = 1e-12;

/**
 * Linearly interpolated quantile of sorted data, at position `q * (n - 1)`.
 */
inline double interpolated_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        fail(ErrorCode::InvalidArgument, "quantile of an empty sample");
    }
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/**
 * @brief A normalization scheme plus whatever per-column state it was fitted with.
 *
 * For axis-0 schemes `scales()` holds one column norm per feature.
 * For ROBUST `low_values()` and `high_values()` hold the per-column quantiles.
 * Stateless schemes have `dim() == 0` and accept matrices of any dimension.
 */
class FittedNormalizer {
public:
    FittedNormalizer() = default;

    FittedNormalizer(NormalizationSpec spec, std::vector<double> scales, std::vector<double> low, std::vector<double> high)
        : spec_(spec), scales_(std::move(scales)), low_(std::move(low)), high_(std::move(high)) {
        spec_.validate();
        if (is_axis0(spec_.scheme)) {
            dim_ = scales_.size();
            if (dim_ == 0 || !low_.empty() || !high_.empty()) {
                fail(ErrorCode::InvalidArgument, "axis-0 normalizer needs exactly one scale per column");
            }
        } else if (spec_.scheme == Scheme::Robust) {
            dim_ = low_.size();
            if (dim_ == 0 || high_.size() != dim_ || !scales_.empty()) {
                fail(ErrorCode::InvalidArgument, "robust normalizer needs one quantile pair per column");
            }
            for (std::size_t c = 0; c < dim_; ++c) {
                if (!(high_[c] >= low_[c])) {
                    fail(ErrorCode::InvalidArgument, "robust quantiles out of order in column " + std::to_string(c));
                }
            }
        } else if (!scales_.empty() || !low_.empty() || !high_.empty()) {
            fail(ErrorCode::InvalidArgument, "stateless normalizer cannot carry column statistics");
        }
    }

    explicit FittedNormalizer(NormalizationSpec spec) : FittedNormalizer(spec, {}, {}, {}) {}

    const NormalizationSpec& spec() const { return spec_; }

    Scheme scheme() const { return spec_.scheme; }

    std::size_t dim() const { return dim_; }

    bool stateless() const { return dim_ == 0; }

    const std::vector<double>& scales() const { return scales_; }

    const std::vector<double>& low_values() const { return low_; }

    const std::vector<double>& high_values() const { return high_; }

    friend bool operator==(const FittedNormalizer&, const FittedNormalizer&) = default;

private:
    NormalizationSpec spec_;
    std::size_t dim_ = 0;
    std::vector<double> scales_;
    std::vector<double> low_;
    std::vector<double> high_;
};

namespace detail {

inline double l1_denominator(double abs_sum, double signed_sum, NormFormula f) {
    return f == NormFormula::Standard ? abs_sum : signed_sum;
}

inline double l2_denominator(double sum_sq, NormFormula f) {
    return f == NormFormula::Standard ? std::sqrt(sum_sq) : sum_sq;
}

}

/**
 * @brief Fits a normalizer on a reference (index) set.
 */
inline FittedNormalizer fit(const NormalizationSpec& spec, const DescriptorMatrix& reference) {
    spec.validate();
    if (!is_fitted(spec.scheme)) {
        return FittedNormalizer(spec);
    }
    if (reference.empty()) {
        fail(ErrorCode::InvalidArgument, std::string("cannot fit ") + scheme_name(spec.scheme) + " on an empty reference set");
    }

    const std::size_t n = reference.count();
    const std::size_t d = reference.dim();

    if (is_axis0(spec.scheme)) {
        std::vector<double> abs_sum(d), signed_sum(d), sum_sq(d);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = reference.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                double v = row[c];
                abs_sum[c] += std::abs(v);
                signed_sum[c] += v;
                sum_sq[c] += v * v;
            }
        }
        std::vector<double> scales(d);
        for (std::size_t c = 0; c < d; ++c) {
            scales[c] = spec.scheme == Scheme::L1Axis0
                ? detail::l1_denominator(abs_sum[c], signed_sum[c], spec.formula)
                : detail::l2_denominator(sum_sq[c], spec.formula);
        }
        return FittedNormalizer(spec, std::move(scales), {}, {});
    }

    std::vector<double> low(d), high(d), column(n);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            column[r] = reference.at(r, c);
        }
        std::sort(column.begin(), column.end());
        low[c] = interpolated_quantile(column, spec.robust_low);
        high[c] = interpolated_quantile(column, spec.robust_high);
    }
    return FittedNormalizer(spec, {}, std::move(low), std::move(high));
}

/**
 * @brief Applies a fitted normalizer, returning a new matrix of the same shape.
 *
 * A row or column whose denominator is below `kDegenerateDenominator` in magnitude is
 * passed through unchanged (ROBUST still subtracts the low quantile), and counted in `degenerate`.
 */
inline DescriptorMatrix apply(const FittedNormalizer& normalizer, const DescriptorMatrix& matrix, std::size_t* degenerate = nullptr) {
    const auto& spec = normalizer.spec();
    const std::size_t n = matrix.count();
    const std::size_t d = matrix.dim();
    if (!normalizer.stateless() && normalizer.dim() != d) {
        fail(ErrorCode::DimensionMismatch, std::string(scheme_name(spec.scheme)) + " normalizer fitted on dimension " +
            std::to_string(normalizer.dim()) + " applied to dimension " + std::to_string(d));
    }
    if (spec.scheme == Scheme::None) {
        return matrix;
    }

    std::vector<float> out(matrix.values().size());
    std::size_t bad = 0;

    switch (spec.scheme) {
        case Scheme::L1Axis1:
        case Scheme::L2Axis1:
            for (std::size_t r = 0; r < n; ++r) {
                auto row = matrix.row(r);
                double abs_sum = 0, signed_sum = 0, sum_sq = 0;
                for (float f : row) {
                    double v = f;
                    abs_sum += std::abs(v);
                    signed_sum += v;
                    sum_sq += v * v;
                }
                double den = spec.scheme == Scheme::L1Axis1
                    ? detail::l1_denominator(abs_sum, signed_sum, spec.formula)
                    : detail::l2_denominator(sum_sq, spec.formula);
                float* dest = out.data() + r * d;
                if (std::abs(den) < kDegenerateDenominator) {
                    std::copy(row.begin(), row.end(), dest);
                    ++bad;
                    continue;
                }
                for (std::size_t c = 0; c < d; ++c) {
                    dest[c] = static_cast<float>(static_cast<double>(row[c]) / den);
                }
            }
            break;

        case Scheme::L1Axis0:
        case Scheme::L2Axis0: {
            const auto& scales = normalizer.scales();
            std::vector<char> skip(d);
            for (std::size_t c = 0; c < d; ++c) {
                skip[c] = std::abs(scales[c]) < kDegenerateDenominator;
                bad += skip[c];
            }
            for (std::size_t r = 0; r < n; ++r) {
                auto row = matrix.row(r);
                float* dest = out.data() + r * d;
                for (std::size_t c = 0; c < d; ++c) {
                    dest[c] = skip[c] ? row[c] : static_cast<float>(static_cast<double>(row[c]) / scales[c]);
                }
            }
            break;
        }

        case Scheme::Robust: {
            const auto& low = normalizer.low_values();
            const auto& high = normalizer.high_values();
            std::vector<double> range(d);
            for (std::size_t c = 0; c < d; ++c) {
                range[c] = high[c] - low[c];
                if (std::abs(range[c]) < kDegenerateDenominator) {
                    range[c] = 1;
                    ++bad;
                }
            }
            for (std::size_t r = 0; r < n; ++r) {
                auto row = matrix.row(r);
                float* dest = out.data() + r * d;
                for (std::size_t c = 0; c < d; ++c) {
                    dest[c] = static_cast<float>((static_cast<double>(row[c]) - low[c]) / range[c]);
                }
            }
            break;
        }

        case Scheme::None:
            break;
    }

    if (degenerate) {
        *degenerate += bad;
    }
    return DescriptorMatrix(n, d, std::move(out));
}

/**
 * Fits on `reference` and applies to `matrix` in one call.
 */
inline DescriptorMatrix fit_apply(const NormalizationSpec& spec, const DescriptorMatrix& reference, const DescriptorMatrix& matrix, std::size_t* degenerate = nullptr) {
    return apply(fit(spec, reference), matrix, degenerate);
}

/**
 * @name Normalizer sidecar files
 *
 * Layout, little-endian: magic `VITN`, version u32 (1), scheme tag u8, dim u32, then f64 statistics.
 * The scheme tag is 0 none, 1 l1-axis1, 2 l2-axis1, 3 l1-axis0, 4 l2-axis0, 5 robust,
 * with bit 0x80 set for the literal norm formula.
 * Axis-0 schemes store `dim` column norms. ROBUST stores the low and high quantile
 * fractions followed by `dim` interleaved (low value, high value) pairs.
 * Stateless schemes store dim 0 and no statistics.
 */
///@{
inline constexpr std::array<char, 4> kNormalizerMagic{'V', 'I', 'T', 'N'};
inline constexpr std::uint32_t kNormalizerVersion = 1;

inline std::string encode_normalizer(const FittedNormalizer& normalizer) {
    std::string out(kNormalizerMagic.begin(), kNormalizerMagic.end());
    detail::put_u32(out, kNormalizerVersion);
    auto tag = static_cast<std::uint8_t>(normalizer.scheme());
    if (normalizer.spec().formula == NormFormula::Literal) {
        tag |= 0x80;
    }
    detail::put_u8(out, tag);
    detail::put_u32(out, static_cast<std::uint32_t>(normalizer.dim()));
    if (is_axis0(normalizer.scheme())) {
        for (double v : normalizer.scales()) {
            detail::put_f64(out, v);
        }
    } else if (normalizer.scheme() == Scheme::Robust) {
        detail::put_f64(out, normalizer.spec().robust_low);
        detail::put_f64(out, normalizer.spec().robust_high);
        for (std::size_t c = 0; c < normalizer.dim(); ++c) {
            detail::put_f64(out, normalizer.low_values()[c]);
            detail::put_f64(out, normalizer.high_values()[c]);
        }
    }
    return out;
}

inline FittedNormalizer decode_normalizer(std::string_view bytes, const std::string& context = "normalizer") {
    detail::ByteReader in(bytes, context);
    auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kNormalizerMagic.begin())) {
        fail(ErrorCode::BadMagic, context + ": not a normalizer file (bad magic)");
    }
    auto version = in.u32("version");
    if (version != kNormalizerVersion) {
        fail(ErrorCode::UnsupportedVersion, context + ": unsupported normalizer version " + std::to_string(version));
    }
    auto tag = in.u8("scheme");
    auto dim = in.u32("dim");

    NormalizationSpec spec;
    spec.formula = (tag & 0x80) ? NormFormula::Literal : NormFormula::Standard;
    auto scheme_tag = tag & 0x7F;
    if (scheme_tag > static_cast<int>(Scheme::Robust)) {
        fail(ErrorCode::Parse, context + ": unknown scheme tag " + std::to_string(scheme_tag));
    }
    spec.scheme = static_cast<Scheme>(scheme_tag);

    std::vector<double> scales, low, high;
    if (is_axis0(spec.scheme)) {
        in.require(static_cast<std::size_t>(dim) * 8, "column norms");
        scales.resize(dim);
        for (auto& v : scales) {
            v = in.f64("column norms");
        }
    } else if (spec.scheme == Scheme::Robust) {
        spec.robust_low = in.f64("quantile fraction");
        spec.robust_high = in.f64("quantile fraction");
        in.require(static_cast<std::size_t>(dim) * 16, "quantile values");
        low.resize(dim);
        high.resize(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            low[c] = in.f64("quantile values");
            high[c] = in.f64("quantile values");
        }
    } else if (dim != 0) {
        fail(ErrorCode::Parse, context + ": stateless scheme with nonzero dimension");
    }
    if (in.remaining() != 0) {
        fail(ErrorCode::TrailingData, context + ": unexpected trailing bytes");
    }
    for (double v : scales) {
        if (!std::isfinite(v)) fail(ErrorCode::NonFinite, context + ": non-finite column norm");
    }
    for (std::size_t c = 0; c < low.size(); ++c) {
        if (!std::isfinite(low[c]) || !std::isfinite(high[c])) fail(ErrorCode::NonFinite, context + ": non-finite quantile");
    }
    return FittedNormalizer(spec, std::move(scales), std::move(low), std::move(high));
}

inline void write_normalizer(const FittedNormalizer& normalizer, const std::string& path) {
    detail::write_file(path, encode_normalizer(normalizer));
}

inline FittedNormalizer read_normalizer(const std::string& path) {
    return decode_normalizer(detail::read_file(path), path);
}
///@}

}

#endif
