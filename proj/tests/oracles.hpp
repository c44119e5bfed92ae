#pragma once

// Reference computations written independently of the library kernels.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <vector>

#include "whff/matrix.hpp"

namespace oracle {

using Dense64 = std::vector<std::vector<double>>;

inline Dense64 densify(const whff::CsrMatrix& m) {
    Dense64 d(m.rows, std::vector<double>(m.cols, 0.0));
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (auto k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) d[i][m.col_indices[k]] = m.values[k];
    }
    return d;
}

/// A t + diag(b) u with every operation in binary64.
inline std::vector<double> thermal_step(const Dense64& a, const std::vector<float>& b, const std::vector<float>& t,
                                        const std::vector<float>& u) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) s += a[i][j] * static_cast<double>(t[j]);
        out[i] = s + static_cast<double>(b[i]) * static_cast<double>(u[i]);
    }
    return out;
}

inline std::vector<double> matvec64(const Dense64& a, const std::vector<float>& x) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) out[i] += a[i][j] * static_cast<double>(x[j]);
    }
    return out;
}

/// Row-major dense product in binary64, sequential order.
inline std::vector<double> gemv64(const std::vector<float>& m, std::size_t rows, std::size_t cols,
                                  const std::vector<float>& v) {
    std::vector<double> out(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) out[i] += double(m[i * cols + j]) * double(v[j]);
    }
    return out;
}

/// Binary32 multiply and add in sequential order.
inline std::vector<float> gemv32(const std::vector<float>& m, std::size_t rows, std::size_t cols,
                                 const std::vector<float>& v) {
    std::vector<float> out(rows, 0.0f);
    for (std::size_t i = 0; i < rows; ++i) {
        float s = 0.0f;
        for (std::size_t j = 0; j < cols; ++j) {
            const float p = m[i * cols + j] * v[j];
            s = s + p;
        }
        out[i] = s;
    }
    return out;
}

/// Bound on |mixed - exact| for one row: product rounding (2^-24 each),
/// binary64 accumulation (n 2^-53) and the final rounding to binary32.
inline double mixed_row_bound(const float* m, const float* v, std::size_t n, double exact) {
    double abs_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) abs_sum += std::abs(double(m[j]) * double(v[j]));
    const double half_ulp32 = std::ldexp(1.0, std::ilogb(std::max(std::abs(exact), 1e-300)) - 24);
    return (std::ldexp(1.0, -24) + double(n) * std::ldexp(1.0, -53)) * abs_sum * 1.0000001 + half_ulp32 +
           std::numeric_limits<float>::denorm_min();
}

struct CostShape {
    std::uint64_t T, S, M, nnz_a, nnz_b, t_l, t_d;
};

/// Walks the per-field loop of the model and tallies one multiply and one
/// add per inner-product term, less one add per dot product.
inline std::uint64_t count_flops(const CostShape& c, bool deformation_on_light_steps) {
    std::uint64_t flops = 0;
    const auto steps = c.t_l + c.t_d;
    for (std::uint64_t k = 0; k < steps; ++k) {
        for (std::uint64_t row = 0; row < c.T; ++row) {
            std::uint64_t terms = 0;
            for (std::uint64_t j = 0; j < c.nnz_a; ++j) ++terms; // A(row, j) * T_k(j)
            for (std::uint64_t j = 0; j < c.nnz_b; ++j) ++terms; // B(row, j) * u_k(j)
            flops += 2 * terms - 1;
        }
    }
    const auto deformation_steps = deformation_on_light_steps ? c.t_l : c.t_d;
    for (std::uint64_t k = 0; k < deformation_steps; ++k) {
        for (int axis = 0; axis < 3; ++axis) {
            for (std::uint64_t row = 0; row < c.M; ++row) {
                std::uint64_t terms = 0;
                for (std::uint64_t j = 0; j < c.S; ++j) ++terms;
                flops += 2 * terms - 1;
            }
        }
    }
    return flops;
}

/// Values read or written per field with A and B treated as dense, following the closed form as printed.
inline std::uint64_t count_io(const CostShape& c) {
    std::uint64_t values = 0;
    for (std::uint64_t k = 0; k < c.t_l + c.t_d; ++k) {
        values += c.T * c.T; // A
        values += c.T * c.T; // B
        values += c.T;       // T_k
        values += c.T;       // u_k
        values += c.T;       // T_{k+1}
    }
    for (std::uint64_t k = 0; k < c.t_d; ++k) {
        for (int axis = 0; axis < 3; ++axis) values += c.M * c.S + c.S + c.M;
    }
    return values;
}

inline std::vector<float> uniform_floats(std::mt19937_64& rng, std::size_t n, float lo, float hi) {
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> out(n);
    for (auto& x : out) x = d(rng);
    return out;
}

} // namespace oracle
