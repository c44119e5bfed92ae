#include "whff/thermal.hpp"

#include <algorithm>
#include <cmath>

#include "whff/model.hpp"

namespace whff {

namespace {

void require_finite(std::span<const float> v, const char* where) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw NumericFault(where, i);
    }
}

} // namespace

void HeatLoad::validate(std::size_t T) const {
    if (dark_load.size() != T) throw InvalidArgument("heat load: dark load length must equal T");
    require_finite(dark_load, "heat load dark_load");
    if (!std::isfinite(dose_scale)) throw InvalidArgument("heat load: dose scale must be finite");
    for (const auto& field : light) {
        for (const auto& fp : field) {
            if (fp.size() != T) throw InvalidArgument("heat load: footprint length must equal T");
            for (std::size_t i = 0; i < T; ++i) {
                if (!(fp[i] >= 0.0f) || !std::isfinite(fp[i])) {
                    throw InvalidArgument("heat load: footprint entries must be finite and nonnegative");
                }
            }
        }
    }
}

HeatLoad synthesize_heat_load(const WaferModel& model, const HeatLoadOptions& options) {
    const auto rows = model.grid_rows, cols = model.grid_cols, T = rows * cols;
    HeatLoad load;
    load.dose_scale = options.dose_scale;
    load.dark_load.assign(T, options.dark_level);
    const auto n_fields = model.field_count();
    for (std::size_t f = 0; f < n_fields; ++f) {
        const std::size_t c0 = f * cols / n_fields;
        const std::size_t c1 = std::max(c0 + 1, (f + 1) * cols / n_fields);
        const auto n_slits = model.slit_count(f);
        std::vector<std::vector<float>> slits;
        for (std::size_t s = 0; s < n_slits; ++s) {
            const std::size_t r0 = s * rows / n_slits;
            const std::size_t r1 = std::max(r0 + 1, (s + 1) * rows / n_slits);
            std::vector<float> fp(T, 0.0f);
            for (std::size_t i = r0; i < std::min(r1, rows); ++i) {
                for (std::size_t j = c0; j < std::min(c1, cols); ++j) fp[i * cols + j] = 1.0f;
            }
            slits.push_back(std::move(fp));
        }
        load.light.push_back(std::move(slits));
    }
    load.validate(T);
    return load;
}

void source_term(const HeatLoad& load, std::size_t field, const ScheduleStep& step, std::span<float> u) {
    if (u.size() != load.size()) throw InvalidArgument("source_term: output length must equal T");
    if (step.phase == Phase::dark) {
        std::copy(load.dark_load.begin(), load.dark_load.end(), u.begin());
        return;
    }
    if (field >= load.light.size() || step.slit >= load.light[field].size()) {
        throw LookupError("source_term: no footprint for field " + std::to_string(field) + " slit " +
                          std::to_string(step.slit));
    }
    const auto& fp = load.light[field][step.slit];
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = load.dose_scale * fp[i] + load.dark_load[i];
}

std::vector<float> source_term(const HeatLoad& load, std::size_t field, const ScheduleStep& step) {
    std::vector<float> u(load.size());
    source_term(load, field, step, u);
    return u;
}

void thermal_step(const CsrMatrix& A, const DiagonalMatrix& B, std::span<const float> t,
                  std::span<const float> u, std::span<float> next) {
    const auto n = A.rows;
    if (A.cols != n || B.size() != n || t.size() != n || u.size() != n || next.size() != n) {
        throw InvalidArgument("thermal_step: dimension mismatch");
    }
    require_finite(t, "thermal_step T_k");
    require_finite(u, "thermal_step u_k");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (auto k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) {
            sum += static_cast<double>(A.values[k]) * static_cast<double>(t[A.col_indices[k]]);
        }
        sum += static_cast<double>(B.diagonal[i]) * static_cast<double>(u[i]);
        next[i] = static_cast<float>(sum);
    }
}

std::vector<float> thermal_step(const CsrMatrix& A, const DiagonalMatrix& B, std::span<const float> t,
                                std::span<const float> u) {
    std::vector<float> next(A.rows);
    thermal_step(A, B, t, u, next);
    return next;
}

void thermal_interpolate(const CsrMatrix& P, std::span<const float> t, std::span<float> s) {
    if (t.size() != P.cols || s.size() != P.rows) throw InvalidArgument("thermal_interpolate: dimension mismatch");
    for (std::size_t i = 0; i < P.rows; ++i) {
        double sum = 0.0;
        for (auto k = P.row_offsets[i]; k < P.row_offsets[i + 1]; ++k) {
            sum += static_cast<double>(P.values[k]) * static_cast<double>(t[P.col_indices[k]]);
        }
        s[i] = static_cast<float>(sum);
    }
}

std::vector<float> thermal_interpolate(const CsrMatrix& P, std::span<const float> t) {
    std::vector<float> s(P.rows);
    thermal_interpolate(P, t, s);
    return s;
}

} // namespace whff
