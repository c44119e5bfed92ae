#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "whff/gemv.hpp"

using namespace whff;

namespace {

constexpr PrecisionPolicy kPolicies[] = {PrecisionPolicy::mixed, PrecisionPolicy::single, PrecisionPolicy::double_};

std::vector<float> run(const std::vector<float>& m, std::size_t rows, std::size_t cols, const std::vector<float>& v,
                       PrecisionPolicy policy, ReductionShape shape = ReductionShape::sequential(), unsigned threads = 1) {
    return gemv({MatrixView<const float>(m, rows, cols), v, policy, shape, threads});
}

double ulp64(double x) {
    const double a = std::abs(x);
    return std::nextafter(a, std::numeric_limits<double>::infinity()) - a;
}

} // namespace

TEST_CASE("identity returns the vector under every policy and shape") {
    std::vector<float> eye(16, 0.0f);
    for (int i = 0; i < 4; ++i) eye[i * 5] = 1.0f;
    const std::vector<float> v{1.5f, -3.0e-20f, 7.0e30f, -0.0f};
    for (auto p : kPolicies) {
        CHECK(run(eye, 4, 4, v, p) == v);
        CHECK(run(eye, 4, 4, v, p, ReductionShape::fixed_tree(2)) == v);
    }
    const auto widened = gemv_oracle(MatrixView<const float>(eye, 4, 4), v);
    for (std::size_t i = 0; i < 4; ++i) CHECK(widened[i] == static_cast<double>(v[i]));
}

TEST_CASE("oracle on a hand-computed product") {
    const std::vector<float> m{1, 2, 3, 4, 5, 6};
    const auto r = gemv_oracle(MatrixView<const float>(m, 2, 3), std::vector<float>{1, 1, 1});
    CHECK(r == std::vector<double>{6.0, 15.0});
}

TEST_CASE("mixed policy counts 256000 ones exactly") {
    const std::vector<float> ones(256000, 1.0f);
    CHECK(run(ones, 1, ones.size(), ones, PrecisionPolicy::mixed)[0] == 256000.0f);
    CHECK(run(ones, 1, ones.size(), ones, PrecisionPolicy::mixed, ReductionShape::fixed_tree(8))[0] == 256000.0f);
}

TEST_CASE("single accumulation loses perturbations that mixed accumulation keeps") {
    // Addends just above 1 fall below half an ulp of the running binary32 sum
    // once it passes 2^15, so sequential binary32 accumulation drops them.
    std::mt19937_64 rng(3);
    const std::size_t width = 256000;
    const std::vector<float> ones(width, 1.0f);
    std::vector<float> v(width);
    std::uniform_int_distribution<int> steps(1, 255);
    for (auto& x : v) x = 1.0f + static_cast<float>(steps(rng)) * 0x1p-20f;
    const auto want = gemv_oracle(MatrixView<const float>(ones, 1, width), v);
    const auto mixed = run(ones, 1, width, v, PrecisionPolicy::mixed);
    const auto single = run(ones, 1, width, v, PrecisionPolicy::single);
    const double mixed_err = std::abs(mixed[0] - want[0]) / want[0];
    const double single_err = std::abs(single[0] - want[0]) / want[0];
    CHECK(single[0] != static_cast<float>(want[0]));
    CHECK(single_err > 0.0);
    CHECK(single_err >= 256.0 * mixed_err);
    CHECK(mixed_err <= 0x1p-24);
}

TEST_CASE("contaminated bit accounting") {
    CHECK(reduction_bits_lost(1) == 0);
    CHECK(reduction_bits_lost(2) == 1);
    CHECK(reduction_bits_lost(3) == 1);
    CHECK(reduction_bits_lost(4) == 2);
    CHECK(reduction_bits_lost(256000) == 17);
    CHECK(uncontaminated_bits(256000) == 6);
    CHECK(uncontaminated_bits(1) == 23);
    CHECK(uncontaminated_bits(std::uint64_t{1} << 40) == 0);
    CHECK_THROWS_AS(reduction_bits_lost(0), InvalidArgument);
}

TEST_CASE("width-4 single policy equals sequential binary32 evaluation") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t rows = 1 + rng() % 8;
        const auto m = oracle::uniform_floats(rng, rows * 4, -100.0f, 100.0f);
        const auto v = oracle::uniform_floats(rng, 4, -100.0f, 100.0f);
        CHECK(run(m, rows, 4, v, PrecisionPolicy::single) == oracle::gemv32(m, rows, 4, v));
    }
}

TEST_CASE("mixed results stay within the forward error bound of the binary64 oracle") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t rows = 1 + rng() % 32, cols = 1 + rng() % 32;
        const auto m = oracle::uniform_floats(rng, rows * cols, -1.0f, 1.0f);
        const auto v = oracle::uniform_floats(rng, cols, -1.0f, 1.0f);
        const auto want = oracle::gemv64(m, rows, cols, v);
        for (auto shape : {ReductionShape::sequential(), ReductionShape::fixed_tree(4)}) {
            const auto got = run(m, rows, cols, v, PrecisionPolicy::mixed, shape);
            for (std::size_t i = 0; i < rows; ++i) {
                double abs_sum = 0.0;
                for (std::size_t j = 0; j < cols; ++j) abs_sum += std::abs(double(m[i * cols + j]) * v[j]);
                const double err = std::abs(got[i] - want[i]);
                CHECK(err <= oracle::mixed_row_bound(&m[i * cols], v.data(), cols, want[i]));
                CHECK(err <= double(cols) * 0x1p-24 * abs_sum + std::numeric_limits<float>::denorm_min());
            }
        }
    }
}

TEST_CASE("double policy matches the oracle rounded once") {
    std::mt19937_64 rng(29);
    const std::size_t rows = 7, cols = 300;
    const auto m = oracle::uniform_floats(rng, rows * cols, -1.0f, 1.0f);
    const auto v = oracle::uniform_floats(rng, cols, -1.0f, 1.0f);
    const auto want = oracle::gemv64(m, rows, cols, v);
    const auto got = run(m, rows, cols, v, PrecisionPolicy::double_);
    for (std::size_t i = 0; i < rows; ++i) CHECK(got[i] == static_cast<float>(want[i]));
}

TEST_CASE("summation order has no visible effect on mixed results") {
    std::mt19937_64 rng(31);
    for (std::size_t width : {16u, 1000u, 65536u}) {
        const std::size_t rows = 4;
        const auto m = oracle::uniform_floats(rng, rows * width, -1.0f, 1.0f);
        const auto v = oracle::uniform_floats(rng, width, -1.0f, 1.0f);
        const GemvRequest seq{MatrixView<const float>(m, rows, width), v, PrecisionPolicy::mixed,
                              ReductionShape::sequential()};
        const auto acc_seq = gemv_accumulators(seq);
        const auto out_seq = gemv(seq);
        for (unsigned fanout : {1u, 2u, 8u, 64u, 256u}) {
            auto tree = seq;
            tree.shape = ReductionShape::fixed_tree(fanout);
            const auto acc_tree = gemv_accumulators(tree);
            const auto out_tree = gemv(tree);
            for (std::size_t i = 0; i < rows; ++i) {
                CHECK(std::abs(acc_tree[i] - acc_seq[i]) <= 4.0 * ulp64(acc_seq[i]));
                CHECK(std::abs(double(out_tree[i]) - double(out_seq[i])) <= 4.0 * ulp64(out_seq[i]));
            }
        }
    }
}

TEST_CASE("fixed-tree results do not depend on the thread count") {
    std::mt19937_64 rng(37);
    const std::size_t rows = 61, cols = 777;
    const auto m = oracle::uniform_floats(rng, rows * cols, -1.0f, 1.0f);
    const auto v = oracle::uniform_floats(rng, cols, -1.0f, 1.0f);
    for (auto p : kPolicies) {
        const auto one = run(m, rows, cols, v, p, ReductionShape::fixed_tree(8), 1);
        for (unsigned threads : {2u, 3u, 8u}) CHECK(run(m, rows, cols, v, p, ReductionShape::fixed_tree(8), threads) == one);
        CHECK(run(m, rows, cols, v, p, ReductionShape::fixed_tree(8), 1) == one);
    }
}

TEST_CASE("invalid requests are rejected") {
    const std::vector<float> m(6, 1.0f);
    CHECK_THROWS_AS(run(m, 2, 3, std::vector<float>(2, 1.0f), PrecisionPolicy::mixed), InvalidArgument);
    CHECK_THROWS_AS(run(m, 2, 3, std::vector<float>(3, 1.0f), PrecisionPolicy::mixed, ReductionShape::fixed_tree(3)),
                    InvalidArgument);
    auto bad = m;
    bad[4] = std::numeric_limits<float>::infinity();
    try {
        run(bad, 2, 3, std::vector<float>(3, 1.0f), PrecisionPolicy::mixed);
        FAIL("expected NumericFault");
    } catch (const NumericFault& e) {
        CHECK(e.index() == 4);
    }
    CHECK(parse_precision_policy("single") == PrecisionPolicy::single);
    CHECK_THROWS_AS(parse_precision_policy("half"), InvalidArgument);
}

TEST_CASE("error metrics") {
    const std::vector<double> want{3.0, -4.0};
    CHECK(relative_error(std::vector<float>{3.0f, -4.0f}, want) == 0.0);
    CHECK(relative_error(std::vector<float>{3.0f, -4.5f}, want) == doctest::Approx(0.1));
    CHECK(max_relative_error(std::vector<float>{3.0f, -4.5f}, want) == doctest::Approx(0.125));
    CHECK(gemv_flops(378, 256000) == 378.0 * 511999.0);
}

TEST_CASE("bench reports a shape, a rate and an error") {
    GemvBenchOptions o;
    o.rows = 16;
    o.cols = 256;
    o.repetitions = 2;
    const auto r = bench_gemv(o);
    CHECK(r.rows == 16);
    CHECK(r.gflops > 0.0);
    CHECK(r.seconds_min <= r.seconds_median);
    CHECK(r.max_rel_error < 1e-6);
}
