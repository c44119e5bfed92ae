#include "whff/gemv.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "whff/model.hpp"
#include "whff/parallel.hpp"

namespace whff {

namespace {

constexpr unsigned kMaxFanout = 1u << 16;

template <typename Mul, typename Acc>
Acc row_sequential(const float* m, const float* v, std::size_t width) {
    Acc sum = 0;
    for (std::size_t j = 0; j < width; ++j) {
        const Mul product = static_cast<Mul>(m[j]) * static_cast<Mul>(v[j]);
        sum += static_cast<Acc>(product);
    }
    return sum;
}

template <typename Mul, typename Acc, unsigned F>
Acc row_tree(const float* m, const float* v, std::size_t width) {
    Acc lanes[F] = {};
    std::size_t j = 0;
    for (; j + F <= width; j += F) {
        for (unsigned t = 0; t < F; ++t) {
            const Mul product = static_cast<Mul>(m[j + t]) * static_cast<Mul>(v[j + t]);
            lanes[t] += static_cast<Acc>(product);
        }
    }
    for (unsigned t = 0; j + t < width; ++t) {
        const Mul product = static_cast<Mul>(m[j + t]) * static_cast<Mul>(v[j + t]);
        lanes[t] += static_cast<Acc>(product);
    }
    for (unsigned w = F / 2; w >= 1; w /= 2) {
        for (unsigned t = 0; t < w; ++t) lanes[t] += lanes[t + w];
    }
    return lanes[0];
}

template <typename Mul, typename Acc>
Acc row_tree_dynamic(const float* m, const float* v, std::size_t width, unsigned fanout) {
    std::vector<Acc> lanes(fanout, Acc{0});
    for (std::size_t j = 0; j < width; ++j) {
        const Mul product = static_cast<Mul>(m[j]) * static_cast<Mul>(v[j]);
        lanes[j % fanout] += static_cast<Acc>(product);
    }
    for (unsigned w = fanout / 2; w >= 1; w /= 2) {
        for (unsigned t = 0; t < w; ++t) lanes[t] += lanes[t + w];
    }
    return lanes[0];
}

template <typename Mul, typename Acc>
Acc row_reduce(const float* m, const float* v, std::size_t width, ReductionShape shape) {
    switch (shape.fanout) {
    case 0: return row_sequential<Mul, Acc>(m, v, width);
    case 1: return row_tree<Mul, Acc, 1>(m, v, width);
    case 2: return row_tree<Mul, Acc, 2>(m, v, width);
    case 4: return row_tree<Mul, Acc, 4>(m, v, width);
    case 8: return row_tree<Mul, Acc, 8>(m, v, width);
    case 16: return row_tree<Mul, Acc, 16>(m, v, width);
    case 32: return row_tree<Mul, Acc, 32>(m, v, width);
    case 64: return row_tree<Mul, Acc, 64>(m, v, width);
    default: return row_tree_dynamic<Mul, Acc>(m, v, width, shape.fanout);
    }
}

void check_shape(const GemvRequest& req) {
    if (req.matrix.rows() == 0 || req.matrix.cols() == 0) {
        throw InvalidArgument("gemv: matrix must be at least 1 x 1");
    }
    if (req.vector.size() != req.matrix.cols()) {
        throw InvalidArgument("gemv: vector length " + std::to_string(req.vector.size()) +
                              " does not match matrix width " + std::to_string(req.matrix.cols()));
    }
    const auto f = req.shape.fanout;
    if (f != 0 && (!std::has_single_bit(f) || f > kMaxFanout)) {
        throw InvalidArgument("gemv: tree fanout must be a power of two up to 65536");
    }
}

void check_finite(const GemvRequest& req) {
    const auto m = req.matrix.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m[i])) throw NumericFault("gemv matrix", i);
    }
    for (std::size_t i = 0; i < req.vector.size(); ++i) {
        if (!std::isfinite(req.vector[i])) throw NumericFault("gemv vector", i);
    }
}

template <typename Out>
void run_rows(const GemvRequest& req, std::span<Out> out) {
    const auto width = req.matrix.cols();
    const float* v = req.vector.data();
    parallel_chunks(req.matrix.rows(), req.threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            const float* m = req.matrix.row(i).data();
            switch (req.policy) {
            case PrecisionPolicy::mixed:
                out[i] = static_cast<Out>(row_reduce<float, double>(m, v, width, req.shape));
                break;
            case PrecisionPolicy::single:
                out[i] = static_cast<Out>(row_reduce<float, float>(m, v, width, req.shape));
                break;
            case PrecisionPolicy::double_:
                out[i] = static_cast<Out>(row_reduce<double, double>(m, v, width, req.shape));
                break;
            }
        }
    });
}

} // namespace

const char* to_string(PrecisionPolicy p) {
    switch (p) {
    case PrecisionPolicy::mixed: return "mixed";
    case PrecisionPolicy::single: return "single";
    case PrecisionPolicy::double_: return "double";
    }
    return "unknown";
}

PrecisionPolicy parse_precision_policy(const std::string& s) {
    if (s == "mixed") return PrecisionPolicy::mixed;
    if (s == "single") return PrecisionPolicy::single;
    if (s == "double") return PrecisionPolicy::double_;
    throw InvalidArgument("unknown precision policy '" + s + "' (expected mixed, single or double)");
}

void gemv_unchecked(const GemvRequest& req, std::span<float> out) {
    check_shape(req);
    if (out.size() != req.matrix.rows()) throw InvalidArgument("gemv: output length must equal matrix height");
    run_rows(req, out);
}

void gemv(const GemvRequest& req, std::span<float> out) {
    check_shape(req);
    check_finite(req);
    gemv_unchecked(req, out);
}

std::vector<float> gemv(const GemvRequest& req) {
    std::vector<float> out(req.matrix.rows());
    gemv(req, out);
    return out;
}

std::vector<double> gemv_accumulators(const GemvRequest& req) {
    check_shape(req);
    check_finite(req);
    std::vector<double> out(req.matrix.rows());
    run_rows(req, std::span<double>(out));
    return out;
}

std::vector<double> gemv_oracle(MatrixView<const float> matrix, std::span<const float> vector) {
    GemvRequest req{matrix, vector, PrecisionPolicy::double_, ReductionShape::sequential()};
    check_shape(req);
    check_finite(req);
    std::vector<double> out(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        out[i] = row_sequential<double, double>(matrix.row(i).data(), vector.data(), matrix.cols());
    }
    return out;
}

int reduction_bits_lost(std::uint64_t width) {
    if (width == 0) throw InvalidArgument("reduction_bits_lost: width must be at least 1");
    return static_cast<int>(std::bit_width(width)) - 1;
}

int uncontaminated_bits(std::uint64_t width) { return std::max(0, 23 - reduction_bits_lost(width)); }

double relative_error(std::span<const float> result, std::span<const double> oracle) {
    if (result.size() != oracle.size()) throw InvalidArgument("relative_error: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < result.size(); ++i) {
        const double d = static_cast<double>(result[i]) - oracle[i];
        num += d * d;
        den += oracle[i] * oracle[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

double max_relative_error(std::span<const float> result, std::span<const double> oracle) {
    if (result.size() != oracle.size()) throw InvalidArgument("max_relative_error: length mismatch");
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < result.size(); ++i) {
        err = std::max(err, std::abs(static_cast<double>(result[i]) - oracle[i]));
        scale = std::max(scale, std::abs(oracle[i]));
    }
    if (scale == 0.0) return err == 0.0 ? 0.0 : INFINITY;
    return err / scale;
}

GemvBenchResult bench_gemv(const GemvBenchOptions& o) {
    if (o.repetitions == 0) throw InvalidArgument("bench_gemv: repetitions must be at least 1");
    const auto matrix = generate_noise_matrix(o.rows, o.cols, o.seed, 1.0);
    const auto vec = generate_noise_matrix(1, o.cols, o.seed ^ 0x5eedull, 1.0);
    GemvRequest req{matrix.view(), vec.values(), o.policy, o.reduction, o.threads};
    check_shape(req);
    std::vector<float> out(o.rows);

    std::vector<double> times;
    for (std::size_t r = 0; r < o.repetitions; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        gemv_unchecked(req, out);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    GemvBenchResult res;
    res.shape = o.shape;
    res.policy = o.policy;
    res.reduction = o.reduction;
    res.rows = o.rows;
    res.cols = o.cols;
    res.repetitions = o.repetitions;
    res.seconds_min = times.front();
    res.seconds_median = times[times.size() / 2];
    res.gflops = res.seconds_min > 0.0 ? gemv_flops(o.rows, o.cols) / res.seconds_min / 1e9 : 0.0;
    res.max_rel_error = max_relative_error(out, gemv_oracle(matrix.view(), vec.values()));
    return res;
}

} // namespace whff
