#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "whff/matrix.hpp"
#include "whff/schedule.hpp"

namespace whff {

struct WaferModel;

/// Temperatures on the mesh and their interpolation onto the deformation input grid.
/// Loads and temperatures are dimensionless.
struct ThermalState {
    std::size_t k = 0;
    std::vector<float> temperatures;  // length T
    std::vector<float> interpolated;  // length S

    static ThermalState zeros(std::size_t T, std::size_t S) {
        return {0, std::vector<float>(T, 0.0f), std::vector<float>(S, 0.0f)};
    }
};

struct HeatLoad {
    std::vector<float> dark_load;                      // length T, may be negative (cooling)
    std::vector<std::vector<std::vector<float>>> light; // [field][slit] -> footprint of length T, nonnegative
    float dose_scale = 1.0f;

    std::size_t size() const noexcept { return dark_load.size(); }
    void validate(std::size_t T) const;
};

struct HeatLoadOptions {
    float dose_scale = 1.0f;
    float dark_level = 0.0f; // uniform dark load
};

/// Footprints cover the mesh strip each slit illuminates: fields are vertical
/// bands of the mesh and slits split a band into horizontal strips.
HeatLoad synthesize_heat_load(const WaferModel& model, const HeatLoadOptions& options = {});

/// u_k for one scan millisecond.
void source_term(const HeatLoad& load, std::size_t field, const ScheduleStep& step, std::span<float> u);
std::vector<float> source_term(const HeatLoad& load, std::size_t field, const ScheduleStep& step);

/// T_{k+1} = A T_k + B u_k, accumulated in binary64 per row.
void thermal_step(const CsrMatrix& A, const DiagonalMatrix& B, std::span<const float> t,
                  std::span<const float> u, std::span<float> next);
std::vector<float> thermal_step(const CsrMatrix& A, const DiagonalMatrix& B, std::span<const float> t,
                                std::span<const float> u);

/// S = P T, accumulated in binary64 per row.
void thermal_interpolate(const CsrMatrix& P, std::span<const float> t, std::span<float> s);
std::vector<float> thermal_interpolate(const CsrMatrix& P, std::span<const float> t);

} // namespace whff
