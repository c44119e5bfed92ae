#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "whff/codec.hpp"
#include "whff/model.hpp"

using namespace whff;

namespace {

DenseMatrix<float> random_array(std::size_t rows, std::size_t cols, std::uint64_t seed, float lo, float hi) {
    std::mt19937_64 rng(seed);
    return DenseMatrix<float>(rows, cols, oracle::uniform_floats(rng, rows * cols, lo, hi));
}

/// Field rows of the z response of a small smooth model.
DenseMatrix<float> smooth_array() {
    ModelSpec s;
    s.grid_rows = 64;
    s.grid_cols = 64;
    s.S = 1024;
    s.K = 256;
    s.M = 16;
    s.fields = 1;
    s.seed = 9;
    const auto m = generate_model(s);
    return m.response(Axis::z);
}

double max_error(const DenseMatrix<float>& a, const DenseMatrix<float>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(double(a.values()[i]) - double(b.values()[i])));
    }
    return worst;
}

std::string serialize(const CompressedStream& s) {
    std::ostringstream out;
    write_stream(out, s);
    return out.str();
}

CorruptData::Kind read_kind(const std::string& bytes) {
    std::istringstream in(bytes);
    try {
        read_stream(in);
    } catch (const CorruptData& e) {
        return e.kind();
    }
    FAIL("read_stream accepted corrupt input");
    return CorruptData::Kind::bad_header;
}

bool bit_equal(const DenseMatrix<float>& a, const DenseMatrix<float>& b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("all-zero arrays cost under two bits per value") {
    const DenseMatrix<float> zero(8, 8, 0.0f);
    const auto s = compress(zero.view(), FixedAccuracy{1e-12});
    CHECK(decompress(s) == zero);
    CHECK(codec_metrics(zero.view(), decompress(s).view(), s).bits_per_value < 2.0);
}

TEST_CASE("fixed rate 8 gives ratio 4 on any input") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto a = random_array(128, 128, seed, -1e3f, 1e3f);
        const auto s = compress(a.view(), FixedRate{8});
        CHECK(s.payload_bits == 8 * s.header.padded_values());
        const auto m = codec_metrics(a.view(), decompress(s).view(), s);
        CHECK(m.bits_per_value == 8.0);
        CHECK(m.ratio == 4.0);
    }
    const auto odd = random_array(13, 7, 4, -1.0f, 1.0f);
    const auto s = compress(odd.view(), FixedRate{8});
    CHECK(codec_metrics(odd.view(), decompress(s).view(), s).ratio == 4.0);
    for (std::size_t b = 0; b < s.block_index.size(); ++b) CHECK(s.block_index[b] == b * 128);
}

TEST_CASE("fixed accuracy honours its tolerance on smooth and noise inputs") {
    const auto smooth = smooth_array();
    const auto noise = generate_noise_matrix(96, 200, 3, 1e-8);
    const auto wide = random_array(40, 40, 8, -100.0f, 100.0f);
    for (double tol : {1e-6, 1e-9, 1e-12}) {
        CAPTURE(tol);
        for (const auto* a : {&smooth, &noise, &wide}) {
            const auto s = compress(a->view(), FixedAccuracy{tol});
            CHECK(max_error(*a, decompress(s)) <= tol);
        }
    }
}

TEST_CASE("smooth operators compress at least fourfold at 1e-12") {
    const auto a = smooth_array();
    const auto s = compress(a.view(), FixedAccuracy{1e-12});
    const auto m = codec_metrics(a.view(), decompress(s).view(), s);
    CHECK(m.max_pointwise_error <= 1e-12);
    CHECK(m.ratio >= 4.0);
}

TEST_CASE("zero tolerance reproduces integer arrays bit for bit") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> value(-1024, 1024);
    DenseMatrix<float> a(37, 29);
    for (auto& v : a.values()) v = static_cast<float>(value(rng));
    CHECK(bit_equal(decompress(compress(a.view(), FixedAccuracy{0.0})), a));

    const auto r = random_array(21, 18, 2, -1e-20f, 1e20f);
    CHECK(bit_equal(decompress(compress(r.view(), FixedAccuracy{0.0})), r));
}

TEST_CASE("more bits never increase the error") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = random_array(24, 20, seed, -50.0f, 50.0f);
        CHECK(max_error(a, decompress(compress(a.view(), FixedRate{32}))) <=
              max_error(a, decompress(compress(a.view(), FixedRate{8}))));
        double previous = std::numeric_limits<double>::infinity();
        for (unsigned planes : {4u, 8u, 12u, 16u, 20u, 24u, 28u, 32u}) {
            const double e = max_error(a, decompress(compress(a.view(), FixedPrecision{planes})));
            CHECK(e <= previous);
            previous = e;
        }
    }
}

TEST_CASE("blocks decode independently from the block index") {
    const auto a = random_array(18, 22, 6, -3.0f, 3.0f);
    for (CodecMode mode : {CodecMode{FixedRate{12}}, CodecMode{FixedPrecision{20}}, CodecMode{FixedAccuracy{1e-4}}}) {
        const auto s = compress(a.view(), mode);
        const auto whole = decompress(s);
        const auto bc = s.header.block_cols();
        for (std::uint64_t b = 0; b < s.header.block_count(); ++b) {
            const auto block = decode_block(s, b);
            const auto r0 = 4 * (b / bc), c0 = 4 * (b % bc);
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = 0; j < 4; ++j) {
                    if (r0 + i < a.rows() && c0 + j < a.cols()) CHECK(block[i * 4 + j] == whole(r0 + i, c0 + j));
                }
            }
        }
        CHECK_THROWS_AS(decode_block(s, s.header.block_count()), LookupError);
        CHECK(decompress(s, 4) == whole);
    }
}

TEST_CASE("streams round trip through their serialized form") {
    const auto a = random_array(9, 11, 1, -1.0f, 1.0f);
    for (CodecMode mode : {CodecMode{FixedRate{5}}, CodecMode{FixedPrecision{9}}, CodecMode{FixedAccuracy{1e-3}}}) {
        const auto s = compress(a.view(), mode);
        const auto bytes = serialize(s);
        CHECK(bytes.size() == s.serialized_bytes());
        std::istringstream in(bytes);
        CHECK(read_stream(in) == s);
    }
    const auto path = std::filesystem::temp_directory_path() / "whff_test_codec.whfz";
    const auto s = compress(a.view(), FixedRate{8});
    save_stream(path, s);
    CHECK(load_stream(path) == s);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt streams are classified") {
    const auto a = random_array(8, 8, 1, -1.0f, 1.0f);
    const auto good = serialize(compress(a.view(), FixedRate{8}));

    auto flipped = good;
    flipped[1] ^= 0x20;
    CHECK(read_kind(flipped) == CorruptData::Kind::bad_magic);
    CHECK(read_kind(good.substr(0, good.size() - 5)) == CorruptData::Kind::truncated);
    CHECK(read_kind(good.substr(0, 2)) == CorruptData::Kind::truncated);

    auto bad_mode = good;
    bad_mode[6] = 7;
    CHECK(read_kind(bad_mode) == CorruptData::Kind::bad_header);

    // Block lengths start after magic, version, mode, rate, rows, cols, block size and count.
    auto bad_offset = good;
    const std::uint16_t longer = 129;
    std::memcpy(bad_offset.data() + 36 + 2, &longer, sizeof longer);
    CHECK(read_kind(bad_offset) == CorruptData::Kind::bad_offset);

    auto s = compress(a.view(), FixedAccuracy{1e-3});
    s.block_index[1] = s.payload_bits + 1;
    CHECK_THROWS_AS(s.validate(), CorruptData);
    CHECK_THROWS_AS(decompress(s), CorruptData);
}

TEST_CASE("invalid inputs and modes are refused") {
    DenseMatrix<float> a(4, 4, 1.0f);
    a(2, 3) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(compress(a.view(), FixedRate{8}), NumericFault);
    const DenseMatrix<float> ok(4, 4, 1.0f);
    CHECK_THROWS_AS(compress(ok.view(), FixedAccuracy{-1.0}), InvalidArgument);
    CHECK_THROWS_AS(compress(ok.view(), FixedRate{0}), InvalidArgument);
    CHECK_THROWS_AS(compress(ok.view(), FixedRate{33}), InvalidArgument);
    CHECK_THROWS_AS(compress(ok.view(), FixedPrecision{0}), InvalidArgument);
    CHECK(describe(FixedRate{8}) == "rate(8)");
    CHECK(describe(FixedPrecision{16}) == "precision(16)");
}

TEST_CASE("metrics on constant offsets and identical arrays") {
    DenseMatrix<float> original(4, 4);
    DenseMatrix<float> shifted(4, 4);
    for (std::size_t i = 0; i < 16; ++i) {
        original.values()[i] = static_cast<float>(i) / 15.0f; // range exactly 1
        shifted.values()[i] = static_cast<float>(double(original.values()[i]) + 1e-3);
    }
    const auto s = compress(original.view(), FixedRate{8});
    const auto m = codec_metrics(original.view(), shifted.view(), s);
    CHECK(m.max_pointwise_error == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(m.rmse == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(m.nrmse == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(m.psnr == doctest::Approx(20.0 * std::log10(1.0 / 2e-3)).epsilon(1e-4));

    const auto same = codec_metrics(original.view(), original.view(), s);
    CHECK(same.rmse == 0.0);
    CHECK(same.max_pointwise_error == 0.0);
    CHECK(std::isinf(same.psnr));
    CHECK(same.psnr > 0.0);
}

TEST_CASE("fixed rate 8 keeps smooth operators above 60 dB") {
    const auto a = smooth_array();
    const auto s = compress(a.view(), FixedRate{8});
    CHECK(codec_metrics(a.view(), decompress(s).view(), s).psnr >= 60.0);
}
