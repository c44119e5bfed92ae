#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace whff {

struct WaferModel;

enum class ScanKind { fast, slow };
enum class Phase { light, dark };

inline const char* to_string(Phase p) { return p == Phase::light ? "light" : "dark"; }
ScanKind parse_scan_kind(const std::string& s);

struct ScanDefaults {
    std::size_t light_ms;
    std::size_t dark_ms;
    double budget_ms;
};

/// Light/dark split and budget per scan kind. The splits are chosen so the
/// per-field FLOP requirement lands on the published totals; only the sums
/// (70 ms fast, 110 ms slow) and the budgets are fixed by the machine.
constexpr ScanDefaults scan_defaults(ScanKind kind) {
    return kind == ScanKind::fast ? ScanDefaults{34, 36, 50.0} : ScanDefaults{80, 30, 80.0};
}

struct ScheduleStep {
    Phase phase = Phase::dark;
    std::size_t slit = 0; // meaningful for light steps only
};

struct FieldSchedule {
    std::size_t field_id = 0;
    std::size_t light_ms = 0;
    std::size_t dark_ms = 0;
    double time_budget_ms = 0.0;
    std::vector<std::size_t> light_slits; // one slit index per light millisecond

    std::size_t duration_ms() const noexcept { return light_ms + dark_ms; }
    /// Exposure first, then the dark interval before the next field.
    std::vector<ScheduleStep> steps() const;
};

struct ScanSchedule {
    ScanKind kind = ScanKind::fast;
    std::vector<FieldSchedule> fields;

    void validate() const;
};

struct ScheduleOverrides {
    std::optional<std::size_t> light_ms;
    std::optional<std::size_t> dark_ms;
    std::optional<double> budget_ms;
    std::size_t slits_per_field = 1;
    std::size_t model_fields = 0; // field ids cycle through this many model fields when non-zero
};

ScanSchedule build_scan_schedule(ScanKind kind, std::size_t n_fields, const ScheduleOverrides& overrides = {});

/// Schedule whose slit indices and field ids fit `model`.
ScanSchedule build_scan_schedule(const WaferModel& model, ScanKind kind, std::size_t n_fields,
                                 ScheduleOverrides overrides = {});

} // namespace whff
