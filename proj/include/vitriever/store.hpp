#ifndef VITRIEVER_STORE_HPP
#define VITRIEVER_STORE_HPP

#include "error.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file store.hpp
 *
 * @brief Descriptor data model and the binary descriptor store format.
 *
 * A store file is laid out as
 *
 * | field            | bytes                     |
 * |------------------|---------------------------|
 * | magic `VITD`     | 4                         |
 * | version (u32)    | 4                         |
 * | count (u64)      | 8                         |
 * | dim (u32)        | 4                         |
 * | value type (u8)  | 1                         |
 * | values (f32)     | count * dim * 4           |
 * | ids              | count * (4 + id length)   |
 *
 * All integers and reals are little-endian. Values are stored row-major.
 * Each id is a u32 byte length followed by its UTF-8 bytes.
 */

namespace vitriever {

/**
 * @brief Dense row-major matrix of finite 32-bit descriptors.
 *
 * Every row is one image descriptor of length `dim()`.
 * The matrix is immutable once constructed, so it may be shared across threads.
 */
class DescriptorMatrix {
public:
    DescriptorMatrix() = default;

    /**
     * An empty matrix with a declared dimension.
     */
    explicit DescriptorMatrix(std::size_t dim) : dim_(dim) {
        if (dim == 0) {
            fail(ErrorCode::InvalidArgument, "descriptor dimension must be positive");
        }
    }

    /**
     * @param count Number of rows.
     * @param dim Number of columns, must be positive.
     * @param values Row-major values of length `count * dim`, all finite.
     */
    DescriptorMatrix(std::size_t count, std::size_t dim, std::vector<float> values)
        : count_(count), dim_(dim), values_(std::move(values)) {
        if (dim == 0) {
            fail(ErrorCode::InvalidArgument, "descriptor dimension must be positive");
        }
        if (values_.size() / dim != count || values_.size() % dim != 0) {
            fail(ErrorCode::CountMismatch, "value buffer of size " + std::to_string(values_.size()) +
                " does not match " + std::to_string(count) + "x" + std::to_string(dim));
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                fail(ErrorCode::NonFinite, "non-finite value at row " + std::to_string(i / dim) +
                    ", column " + std::to_string(i % dim));
            }
        }
    }

    /**
     * Builds a matrix from a list of equal-length rows.
     */
    static DescriptorMatrix from_rows(const std::vector<std::vector<float>>& rows, std::size_t dim = 0) {
        if (rows.empty()) {
            return DescriptorMatrix(dim == 0 ? 1 : dim);
        }
        std::size_t d = rows.front().size();
        std::vector<float> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            if (r.size() != d) {
                fail(ErrorCode::DimensionMismatch, "rows of unequal length");
            }
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return DescriptorMatrix(rows.size(), d, std::move(flat));
    }

    std::size_t count() const { return count_; }

    std::size_t dim() const { return dim_; }

    bool empty() const { return count_ == 0; }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(values_.data() + i * dim_, dim_);
    }

    float at(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }

    const std::vector<float>& values() const { return values_; }

    /**
     * Copies the selected rows, in order, into a new matrix.
     */
    DescriptorMatrix select_rows(std::span<const std::size_t> rows) const {
        std::vector<float> out;
        out.reserve(rows.size() * dim_);
        for (auto r : rows) {
            auto src = row(r);
            out.insert(out.end(), src.begin(), src.end());
        }
        return DescriptorMatrix(rows.size(), dim_, std::move(out));
    }

    friend bool operator==(const DescriptorMatrix& a, const DescriptorMatrix& b) {
        if (a.count_ != b.count_ || a.dim_ != b.dim_) {
            return false;
        }
        // Bitwise comparison, so that -0.0 and 0.0 are distinguished.
        return a.values_.empty() ||
            std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
    }

private:
    std::size_t count_ = 0;
    std::size_t dim_ = 1;
    std::vector<float> values_;
};

namespace detail {

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Reject overlong encodings, surrogates and out-of-range code points.
        static constexpr std::uint32_t min_for_length[] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_for_length[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(out, bits);
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

/**
 * Bounds-checked little-endian reader over an in-memory byte buffer.
 */
class ByteReader {
public:
    ByteReader(std::string_view bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::size_t position() const { return pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n) {
            fail(ErrorCode::Truncated, context_ + ": truncated while reading " + what);
        }
    }

    std::string_view take(std::size_t n, const char* what) {
        require(n, what);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint8_t u8(const char* what) {
        require(1, what);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    float f32(const char* what) {
        auto bits = u32(what);
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    double f64(const char* what) {
        auto bits = u64(what);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

private:
    std::string_view bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::Io, "failed reading '" + path + "'");
    }
    return content;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        fail(ErrorCode::Io, "failed writing '" + path + "'");
    }
}

}

inline constexpr std::array<char, 4> kStoreMagic{'V', 'I', 'T', 'D'};
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::uint8_t kValueTypeF32 = 1;
inline constexpr std::size_t kStoreHeaderSize = 4 + 4 + 8 + 4 + 1;

/**
 * Checks that ids are valid, distinct, and match the number of rows.
 */
inline void validate_ids(const std::vector<std::string>& ids, std::size_t count) {
    if (ids.size() != count) {
        fail(ErrorCode::CountMismatch, "got " + std::to_string(ids.size()) + " ids for " +
            std::to_string(count) + " descriptors");
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (id.find('\n') != std::string::npos || id.find('\r') != std::string::npos) {
            fail(ErrorCode::InvalidArgument, "id contains a newline: '" + id + "'");
        }
        if (!detail::valid_utf8(id)) {
            fail(ErrorCode::InvalidArgument, "id is not valid UTF-8");
        }
        if (id.size() > std::numeric_limits<std::uint32_t>::max()) {
            fail(ErrorCode::InvalidArgument, "id too long");
        }
        if (!seen.insert(id).second) {
            fail(ErrorCode::DuplicateId, "duplicate id '" + id + "'");
        }
    }
}

/**
 * @brief Descriptors together with their per-row identifiers.
 */
struct DescriptorSet {
    DescriptorMatrix matrix;
    std::vector<std::string> ids;

    DescriptorSet() = default;

    DescriptorSet(DescriptorMatrix m, std::vector<std::string> i) : matrix(std::move(m)), ids(std::move(i)) {
        validate_ids(ids, matrix.count());
    }

    /**
     * Row lookup by id.
     */
    std::unordered_map<std::string, std::size_t> index_by_id() const {
        std::unordered_map<std::string, std::size_t> out;
        out.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out.emplace(ids[i], i);
        }
        return out;
    }

    friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

/**
 * Serializes a descriptor set to the store byte layout.
 */
inline std::string encode_store(const DescriptorMatrix& matrix, const std::vector<std::string>& ids) {
    validate_ids(ids, matrix.count());
    if (matrix.dim() > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorCode::InvalidArgument, "dimension does not fit in 32 bits");
    }
    std::size_t id_bytes = 0;
    for (const auto& id : ids) {
        id_bytes += 4 + id.size();
    }

    std::string out;
    out.reserve(kStoreHeaderSize + matrix.values().size() * 4 + id_bytes);
    out.append(kStoreMagic.data(), kStoreMagic.size());
    detail::put_u32(out, kStoreVersion);
    detail::put_u64(out, matrix.count());
    detail::put_u32(out, static_cast<std::uint32_t>(matrix.dim()));
    detail::put_u8(out, kValueTypeF32);
    for (float v : matrix.values()) {
        detail::put_f32(out, v);
    }
    for (const auto& id : ids) {
        detail::put_u32(out, static_cast<std::uint32_t>(id.size()));
        out.append(id);
    }
    return out;
}

/**
 * Parses store bytes, validating every header field, value and id.
 * Nothing is returned unless the whole buffer is valid.
 */
inline DescriptorSet decode_store(std::string_view bytes, const std::string& context = "store") {
    detail::ByteReader in(bytes, context);
    auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kStoreMagic.begin())) {
        fail(ErrorCode::BadMagic, context + ": not a descriptor store (bad magic)");
    }
    auto version = in.u32("version");
    if (version != kStoreVersion) {
        fail(ErrorCode::UnsupportedVersion, context + ": unsupported store version " + std::to_string(version));
    }
    auto count = in.u64("count");
    auto dim = in.u32("dim");
    auto tag = in.u8("value type");
    if (tag != kValueTypeF32) {
        fail(ErrorCode::UnsupportedValueType, context + ": unsupported value type tag " + std::to_string(tag));
    }
    if (dim == 0) {
        fail(ErrorCode::InvalidArgument, context + ": zero dimension");
    }

    // Overflow-safe check that the value block fits in what is left.
    std::uint64_t max_values = in.remaining() / 4;
    if (count > max_values / dim) {
        fail(ErrorCode::Truncated, context + ": declared " + std::to_string(count) + "x" + std::to_string(dim) +
            " values exceed the file length");
    }
    std::size_t total = static_cast<std::size_t>(count) * dim;
    std::vector<float> values(total);
    for (std::size_t i = 0; i < total; ++i) {
        values[i] = in.f32("values");
        if (!std::isfinite(values[i])) {
            fail(ErrorCode::NonFinite, context + ": non-finite value at row " + std::to_string(i / dim) +
                ", column " + std::to_string(i % dim));
        }
    }

    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        auto len = in.u32("id length");
        ids.emplace_back(in.take(len, "id"));
    }
    if (in.remaining() != 0) {
        fail(ErrorCode::TrailingData, context + ": " + std::to_string(in.remaining()) + " unexpected trailing bytes");
    }

    DescriptorMatrix matrix(static_cast<std::size_t>(count), dim, std::move(values));
    return DescriptorSet(std::move(matrix), std::move(ids));
}

/**
 * @brief Writes descriptors and ids to a binary store file.
 */
inline void write_store(const DescriptorMatrix& matrix, const std::vector<std::string>& ids, const std::string& path) {
    detail::write_file(path, encode_store(matrix, ids));
}

inline void write_store(const DescriptorSet& set, const std::string& path) {
    write_store(set.matrix, set.ids, path);
}

/**
 * @brief Reads a binary store file written by `write_store()`.
 */
inline DescriptorSet read_store(const std::string& path) {
    auto bytes = detail::read_file(path);
    return decode_store(bytes, path);
}

/**
 * Whether a byte buffer starts with the store magic.
 */
inline bool looks_like_store(std::string_view bytes) {
    return bytes.size() >= 4 && std::equal(kStoreMagic.begin(), kStoreMagic.end(), bytes.begin());
}

/**
 * @brief Parses the plain-text descriptor listing.
 *
 * One descriptor per line: `<id> <v1> ... <vD>`, whitespace separated.
 * Blank lines are skipped. The dimension is taken from the first line.
 */
inline DescriptorSet parse_text_descriptors(std::string_view text, const std::string& context = "listing") {
    std::vector<std::string> ids;
    std::vector<float> values;
    std::unordered_map<std::string, std::size_t> first_line;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }

        std::istringstream tokens{std::string(line)};
        std::string id;
        if (!(tokens >> id)) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        std::size_t n = 0;
        std::string tok;
        while (tokens >> tok) {
            char* stop = nullptr;
            double v = std::strtod(tok.c_str(), &stop);
            if (stop != tok.c_str() + tok.size()) {
                fail(ErrorCode::Parse, context + ":" + std::to_string(line_no) + ": cannot parse value '" + tok + "'");
            }
            auto f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                fail(ErrorCode::NonFinite, context + ":" + std::to_string(line_no) + ": non-finite value '" + tok + "'");
            }
            values.push_back(f);
            ++n;
        }
        if (n == 0) {
            fail(ErrorCode::Parse, context + ":" + std::to_string(line_no) + ": descriptor '" + id + "' has no values");
        }
        if (dim == 0) {
            dim = n;
        } else if (n != dim) {
            fail(ErrorCode::DimensionMismatch, context + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(dim) + " values, found " + std::to_string(n));
        }
        auto [it, inserted] = first_line.emplace(id, line_no);
        if (!inserted) {
            fail(ErrorCode::DuplicateId, context + ":" + std::to_string(line_no) + ": duplicate id '" + id +
                "' (first seen on line " + std::to_string(it->second) + ")");
        }
        ids.push_back(std::move(id));
        if (end == text.size()) {
            break;
        }
    }
    if (dim == 0) {
        fail(ErrorCode::Parse, context + ": no descriptors found");
    }
    auto count = ids.size();
    return DescriptorSet(DescriptorMatrix(count, dim, std::move(values)), std::move(ids));
}

/**
 * Loads either a binary store or a text listing, detected by the magic bytes.
 */
inline DescriptorSet load_descriptors(const std::string& path) {
    auto bytes = detail::read_file(path);
    if (looks_like_store(bytes)) {
        return decode_store(bytes, path);
    }
    return parse_text_descriptors(bytes, path);
}

}

#endif
