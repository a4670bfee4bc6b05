#include "vitriever/store.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace vitriever;

namespace {

class StoreTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = std::filesystem::temp_directory_path() / ("vitriever_store_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::create_directories(dir);
    }

    void TearDown() override { std::filesystem::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    std::filesystem::path dir;
};

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

}

TEST_F(StoreTest, EmptyMatrixIsHeaderOnly) {
    DescriptorMatrix m(768);
    write_store(m, {}, path("empty.vitd"));
    EXPECT_EQ(std::filesystem::file_size(path("empty.vitd")), kStoreHeaderSize);
    auto back = read_store(path("empty.vitd"));
    EXPECT_EQ(back.matrix.count(), 0u);
    EXPECT_EQ(back.matrix.dim(), 768u);
    EXPECT_TRUE(back.ids.empty());
}

TEST_F(StoreTest, SmallRoundTrip) {
    DescriptorMatrix m(1, 2, {1.0f, -1.0f});
    write_store(m, {"a"}, path("one.vitd"));
    auto back = read_store(path("one.vitd"));
    EXPECT_EQ(back.matrix, m);
    EXPECT_EQ(back.ids, std::vector<std::string>{"a"});
}

TEST_F(StoreTest, ByteLengthFollowsLayout) {
    std::mt19937_64 rng(11);
    auto set = testgen::random_set(rng, 1000, 768, "image_");
    write_store(set, path("big.vitd"));

    std::size_t expected = kStoreHeaderSize + 1000 * 768 * 4;
    for (const auto& id : set.ids) expected += 4 + id.size();
    EXPECT_EQ(std::filesystem::file_size(path("big.vitd")), expected);
    EXPECT_EQ(read_store(path("big.vitd")), set);
}

TEST_F(StoreTest, HeaderBytesAreLittleEndian) {
    DescriptorMatrix m(1, 3, {1.0f, 2.0f, 3.0f});
    auto bytes = encode_store(m, {"x"});
    ASSERT_GE(bytes.size(), kStoreHeaderSize);
    EXPECT_EQ(bytes.substr(0, 4), "VITD");
    const unsigned char expected_header[] = {
        'V', 'I', 'T', 'D',
        1, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0,
        3, 0, 0, 0,
        1
    };
    EXPECT_EQ(std::memcmp(bytes.data(), expected_header, sizeof(expected_header)), 0);
    // 1.0f == 0x3F800000
    const unsigned char one[] = {0x00, 0x00, 0x80, 0x3F};
    EXPECT_EQ(std::memcmp(bytes.data() + kStoreHeaderSize, one, 4), 0);
}

TEST_F(StoreTest, RejectsBadMagic) {
    auto bytes = encode_store(DescriptorMatrix(1, 1, {0.5f}), {"a"});
    bytes.replace(0, 4, "XXXX");
    EXPECT_EQ(code_of([&] { decode_store(bytes); }), ErrorCode::BadMagic);
}

TEST_F(StoreTest, RejectsUnsupportedVersionAndValueType) {
    auto bytes = encode_store(DescriptorMatrix(1, 1, {0.5f}), {"a"});
    auto v2 = bytes;
    v2[4] = 2;
    EXPECT_EQ(code_of([&] { decode_store(v2); }), ErrorCode::UnsupportedVersion);
    auto f64 = bytes;
    f64[20] = 2;
    EXPECT_EQ(code_of([&] { decode_store(f64); }), ErrorCode::UnsupportedValueType);
}

TEST_F(StoreTest, RejectsTruncationInsideValueBlock) {
    std::mt19937_64 rng(5);
    auto set = testgen::random_set(rng, 50, 16);
    auto bytes = encode_store(set.matrix, set.ids);
    std::uniform_int_distribution<std::size_t> offset(kStoreHeaderSize + 1, kStoreHeaderSize + 50 * 16 * 4 - 1);
    for (int trial = 0; trial < 25; ++trial) {
        auto cut = bytes.substr(0, offset(rng));
        EXPECT_EQ(code_of([&] { decode_store(cut); }), ErrorCode::Truncated);
    }
    // Inside the id block too.
    EXPECT_EQ(code_of([&] { decode_store(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::Truncated);
}

TEST_F(StoreTest, RejectsDeclaredSizeBeyondFile) {
    auto bytes = encode_store(DescriptorMatrix(2, 2, {1, 2, 3, 4}), {"a", "b"});
    // Claim an enormous count; must fail cleanly rather than allocate.
    for (int i = 8; i < 16; ++i) bytes[i] = static_cast<char>(0xFF);
    EXPECT_EQ(code_of([&] { decode_store(bytes); }), ErrorCode::Truncated);
}

TEST_F(StoreTest, RejectsNonFiniteOnReadAndWrite) {
    auto bytes = encode_store(DescriptorMatrix(1, 2, {1, 2}), {"a"});
    float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + kStoreHeaderSize + 4, &nan, 4);
    EXPECT_EQ(code_of([&] { decode_store(bytes); }), ErrorCode::NonFinite);
    EXPECT_EQ(code_of([&] { DescriptorMatrix(1, 2, {1.0f, std::numeric_limits<float>::infinity()}); }), ErrorCode::NonFinite);
}

TEST_F(StoreTest, RejectsIdProblems) {
    DescriptorMatrix m(2, 1, {1, 2});
    EXPECT_EQ(code_of([&] { encode_store(m, {"a"}); }), ErrorCode::CountMismatch);
    EXPECT_EQ(code_of([&] { encode_store(m, {"a", "a"}); }), ErrorCode::DuplicateId);
    EXPECT_EQ(code_of([&] { encode_store(m, {"a", "b\nc"}); }), ErrorCode::InvalidArgument);

    auto bytes = encode_store(m, {"a", "b"});
    bytes.back() = 'a';
    EXPECT_EQ(code_of([&] { decode_store(bytes); }), ErrorCode::DuplicateId);
}

TEST_F(StoreTest, RejectsTrailingBytes) {
    auto bytes = encode_store(DescriptorMatrix(1, 1, {1}), {"a"});
    bytes.push_back('\0');
    EXPECT_EQ(code_of([&] { decode_store(bytes); }), ErrorCode::TrailingData);
}

TEST_F(StoreTest, MissingFileIsIoError) {
    EXPECT_EQ(code_of([&] { read_store(path("nope.vitd")); }), ErrorCode::Io);
}

// Property: random matrices (including -0.0, subnormals and extremes) with random
// Unicode ids survive a round trip bit-for-bit.
TEST_F(StoreTest, RoundTripPropertyWithUnicodeIds) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::uint32_t> cp_dist(1, 0x10FFFF);
    auto random_id = [&](std::size_t i) {
        std::string s = std::to_string(i) + "_";
        std::uniform_int_distribution<int> len(0, 12);
        for (int k = len(rng); k > 0; --k) {
            std::uint32_t cp;
            do {
                cp = cp_dist(rng);
            } while (cp == '\n' || cp == '\r' || (cp >= 0xD800 && cp <= 0xDFFF));
            if (cp < 0x80) {
                s += static_cast<char>(cp);
            } else if (cp < 0x800) {
                s += static_cast<char>(0xC0 | (cp >> 6));
                s += static_cast<char>(0x80 | (cp & 0x3F));
            } else if (cp < 0x10000) {
                s += static_cast<char>(0xE0 | (cp >> 12));
                s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                s += static_cast<char>(0x80 | (cp & 0x3F));
            } else {
                s += static_cast<char>(0xF0 | (cp >> 18));
                s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
                s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                s += static_cast<char>(0x80 | (cp & 0x3F));
            }
        }
        return s;
    };

    const float specials[] = {-0.0f, 0.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
        -std::numeric_limits<float>::max(), std::numeric_limits<float>::min()};
    std::uniform_int_distribution<std::size_t> n_dist(0, 40), d_dist(1, 20);
    std::uniform_int_distribution<std::uint32_t> bits(0, 0xFFFFFFFF);
    for (int trial = 0; trial < 50; ++trial) {
        auto n = n_dist(rng), d = d_dist(rng);
        std::vector<float> values(n * d);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i % 7 == 0) {
                values[i] = specials[i % 6];
            } else {
                float f;
                do {
                    auto b = bits(rng);
                    std::memcpy(&f, &b, 4);
                } while (!std::isfinite(f));
                values[i] = f;
            }
        }
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back(random_id(i));
        DescriptorMatrix m(n, d, values);
        auto back = decode_store(encode_store(m, ids));
        EXPECT_EQ(back.matrix, m);
        EXPECT_EQ(back.ids, ids);
    }
}

TEST_F(StoreTest, TextListingParses) {
    auto set = parse_text_descriptors("a 1 2 3 4\n\nb -1 0.5 1e-3 7\r\nc 0 0 0 0");
    EXPECT_EQ(set.matrix.count(), 3u);
    EXPECT_EQ(set.matrix.dim(), 4u);
    EXPECT_EQ(set.ids, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_FLOAT_EQ(set.matrix.at(1, 2), 1e-3f);
}

TEST_F(StoreTest, TextListingErrorsNameTheLine) {
    try {
        parse_text_descriptors("x 1 2\ny 3 4\nx 5 6\n", "list.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
        std::string msg = e.what();
        EXPECT_NE(msg.find("list.txt:3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
    }
    EXPECT_EQ(code_of([] { parse_text_descriptors("a 1 2\nb 1\n"); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { parse_text_descriptors("a 1 zz\n"); }), ErrorCode::Parse);
    EXPECT_EQ(code_of([] { parse_text_descriptors("a 1 nan\n"); }), ErrorCode::NonFinite);
    EXPECT_EQ(code_of([] { parse_text_descriptors("\n\n"); }), ErrorCode::Parse);
}
