#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "whff/matrix.hpp"

namespace whff {

/// Multiply and accumulate precisions of a matrix-vector product.
///   mixed  - binary32 products, binary64 accumulation, binary32 result
///   single - binary32 products and accumulation
///   double - binary64 products and accumulation, binary32 result
enum class PrecisionPolicy { mixed, single, double_ };

const char* to_string(PrecisionPolicy p);
PrecisionPolicy parse_precision_policy(const std::string& s);

/// Summation order of each row.
///
/// A fixed tree of fanout F keeps F partial sums; lane t accumulates columns
/// t, t+F, t+2F, ... in order and the lanes are then combined pairwise
/// (lane t += lane t+F/2, halving F until one remains). The order depends only
/// on F, so results are reproducible however rows are distributed over threads.
struct ReductionShape {
    unsigned fanout = 0; // 0 selects plain sequential order

    static constexpr ReductionShape sequential() { return {0}; }
    static constexpr ReductionShape fixed_tree(unsigned f) { return {f}; }
    bool is_sequential() const noexcept { return fanout == 0; }
};

struct GemvRequest {
    MatrixView<const float> matrix;
    std::span<const float> vector;
    PrecisionPolicy policy = PrecisionPolicy::mixed;
    ReductionShape shape = ReductionShape::sequential();
    unsigned threads = 1; // rows are split across this many threads
};

/// Result rounded to binary32. Throws InvalidArgument on dimension mismatch or
/// a non power-of-two fanout and NumericFault on non-finite entries.
std::vector<float> gemv(const GemvRequest& req);
void gemv(const GemvRequest& req, std::span<float> out);

/// Same as gemv but without validating finiteness; used on hot paths whose
/// inputs were checked once up front.
void gemv_unchecked(const GemvRequest& req, std::span<float> out);

/// Per-row accumulator before the final rounding (binary32 accumulators are widened).
std::vector<double> gemv_accumulators(const GemvRequest& req);

/// Reference product: binary64 multiply and add, sequential order.
std::vector<double> gemv_oracle(MatrixView<const float> matrix, std::span<const float> vector);

/// Worst-case mantissa bits contaminated by a sequential binary32 reduction
/// of `width` terms: the running sum can grow by a factor `width`, and every
/// doubling costs one bit of the addends, so floor(log2(width)) bits.
/// An upper-bound heuristic, not a tight error estimate.
int reduction_bits_lost(std::uint64_t width);

/// Fraction bits (out of binary32's 23) left after reduction_bits_lost.
int uncontaminated_bits(std::uint64_t width);

/// ||result - oracle||_2 / ||oracle||_2.
double relative_error(std::span<const float> result, std::span<const double> oracle);
/// max_i |result_i - oracle_i| / max_i |oracle_i|.
double max_relative_error(std::span<const float> result, std::span<const double> oracle);

/// FLOPs of one H x W product: H (2W - 1).
constexpr double gemv_flops(std::size_t rows, std::size_t cols) {
    return static_cast<double>(rows) * (2.0 * static_cast<double>(cols) - 1.0);
}

struct GemvBenchResult {
    std::string shape;
    PrecisionPolicy policy = PrecisionPolicy::mixed;
    ReductionShape reduction;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t repetitions = 0;
    double seconds_min = 0.0;
    double seconds_median = 0.0;
    double gflops = 0.0;         // at the minimum time
    double max_rel_error = 0.0;  // against gemv_oracle
};

struct GemvBenchOptions {
    std::string shape = "custom";
    std::size_t rows = 378;
    std::size_t cols = 16384;
    PrecisionPolicy policy = PrecisionPolicy::mixed;
    ReductionShape reduction = ReductionShape::fixed_tree(8);
    std::size_t repetitions = 5;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Times gemv on a random matrix with entries uniform in [-1, 1].
GemvBenchResult bench_gemv(const GemvBenchOptions& options);

} // namespace whff
