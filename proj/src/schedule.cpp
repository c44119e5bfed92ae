#include "whff/schedule.hpp"

#include <algorithm>

#include "whff/error.hpp"
#include "whff/model.hpp"

namespace whff {

ScanKind parse_scan_kind(const std::string& s) {
    if (s == "fast") return ScanKind::fast;
    if (s == "slow") return ScanKind::slow;
    throw InvalidArgument("unknown scan kind '" + s + "' (expected fast or slow)");
}

std::vector<ScheduleStep> FieldSchedule::steps() const {
    std::vector<ScheduleStep> out;
    out.reserve(duration_ms());
    for (std::size_t j = 0; j < light_ms; ++j) out.push_back({Phase::light, light_slits.at(j)});
    for (std::size_t j = 0; j < dark_ms; ++j) out.push_back({Phase::dark, 0});
    return out;
}

void ScanSchedule::validate() const {
    for (const auto& f : fields) {
        if (f.duration_ms() == 0) throw InvalidArgument("schedule: field has no light or dark steps");
        if (f.light_ms == 0) throw InvalidArgument("schedule: field needs at least one light step");
        if (!(f.time_budget_ms > 0.0)) throw InvalidArgument("schedule: time budget must be positive");
        if (f.light_slits.size() != f.light_ms) {
            throw InvalidArgument("schedule: every light millisecond needs exactly one slit");
        }
    }
}

ScanSchedule build_scan_schedule(ScanKind kind, std::size_t n_fields, const ScheduleOverrides& o) {
    if (n_fields == 0) throw InvalidArgument("schedule: n_fields must be at least 1");
    if (o.slits_per_field == 0) throw InvalidArgument("schedule: slits_per_field must be at least 1");
    const auto d = scan_defaults(kind);
    const auto light = o.light_ms.value_or(d.light_ms);
    const auto dark = o.dark_ms.value_or(d.dark_ms);
    const auto budget = o.budget_ms.value_or(d.budget_ms);
    if (light + dark == 0) throw InvalidArgument("schedule: light + dark milliseconds must be positive");

    ScanSchedule s;
    s.kind = kind;
    for (std::size_t i = 0; i < n_fields; ++i) {
        FieldSchedule f;
        f.field_id = o.model_fields ? i % o.model_fields : i;
        f.light_ms = light;
        f.dark_ms = dark;
        f.time_budget_ms = budget;
        // The slit sweeps across the field once per exposure.
        for (std::size_t j = 0; j < light; ++j) f.light_slits.push_back(j * o.slits_per_field / light);
        s.fields.push_back(std::move(f));
    }
    s.validate();
    return s;
}

ScanSchedule build_scan_schedule(const WaferModel& model, ScanKind kind, std::size_t n_fields,
                                 ScheduleOverrides overrides) {
    if (model.field_count() == 0) throw InvalidArgument("schedule: model has no fields");
    std::size_t slits = model.slit_count(0);
    for (std::size_t f = 1; f < model.field_count(); ++f) slits = std::min(slits, model.slit_count(f));
    overrides.slits_per_field = slits;
    overrides.model_fields = model.field_count();
    return build_scan_schedule(kind, n_fields, overrides);
}

} // namespace whff
