#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "whff/matrix.hpp"

namespace whff {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };
inline constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};
inline constexpr const char* axis_name(Axis a) { return a == Axis::x ? "x" : a == Axis::y ? "y" : "z"; }

/// Half-open row range [first, last).
struct RowWindow {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t width() const noexcept { return last - first; }
    bool operator==(const RowWindow&) const = default;
};

/// Shape of the deformation operator rows.
enum class ResponseKind : std::uint8_t { smooth, noise };

struct ModelSpec {
    std::size_t grid_rows = 4;
    std::size_t grid_cols = 4;
    std::size_t S = 8;     // interpolated points (columns of C)
    std::size_t K = 16;    // deformation points (rows of C)
    std::size_t M = 2;     // slit window height
    std::size_t nnz_target = 5;
    std::uint64_t seed = 1;
    std::size_t fields = 2;
    ResponseKind response = ResponseKind::smooth;
    double response_scale = 1e-8;
    std::size_t memory_cap_bytes = std::size_t{4} << 30;
};

/// Thermal and deformation operators of one wafer, immutable once built.
struct WaferModel {
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    CsrMatrix A;                          // T x T thermal propagation
    DiagonalMatrix B;                     // T x T input scaling
    CsrMatrix P;                          // S x T thermal interpolation
    std::array<DenseMatrix<float>, 3> C;  // K x S per axis
    std::vector<RowWindow> field_windows; // absolute rows of C
    std::vector<std::vector<RowWindow>> slit_windows; // relative to the owning field window

    std::size_t temperature_points() const noexcept { return grid_rows * grid_cols; }
    std::size_t interpolated_points() const noexcept { return P.rows; }
    std::size_t deformation_points() const noexcept { return C[0].rows(); }
    std::size_t field_count() const noexcept { return field_windows.size(); }
    std::size_t slit_count(std::size_t field) const { return slit_windows.at(field).size(); }
    const DenseMatrix<float>& response(Axis a) const { return C[static_cast<std::size_t>(a)]; }

    /// Checks every structural invariant; throws InvalidArgument naming the first violation.
    void validate() const;

    bool operator==(const WaferModel&) const = default;
};

/// Bytes of one binary32 slit sub-matrix (M x S).
constexpr std::uint64_t slit_matrix_bytes(std::uint64_t M, std::uint64_t S) { return M * S * 4; }

/// Bytes the dense operators and sparse matrices of `spec` would occupy.
std::uint64_t model_footprint_bytes(const ModelSpec& spec);

WaferModel generate_model(const ModelSpec& spec);

/// Dense K x S matrix with entries uniform in [-scale, scale].
DenseMatrix<float> generate_noise_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale);

/// Rows of the field window; the view aliases `model`.
MatrixView<const float> fetch_field_submatrix(const WaferModel& model, Axis axis, std::size_t field);
/// Rows of slit `slit` inside an already fetched field view.
MatrixView<const float> fetch_slit_submatrix(MatrixView<const float> field_view, const WaferModel& model,
                                             std::size_t field, std::size_t slit);

/// Writes A/B/P/C container files and manifest.json into `dir`; returns the manifest path.
std::filesystem::path save_model(const WaferModel& model, const std::filesystem::path& dir);
WaferModel load_model(const std::filesystem::path& manifest);

/// Deterministic uniform doubles in [0, 1) independent of the standard library's distributions.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double next() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next(); }

private:
    std::uint64_t state_;
};

} // namespace whff
