#pragma once

// Two-stage scan executor.
//
// Stage 1 (transfer) copies the per-axis operator rows of one field into an
// owned buffer, either dense or as codec streams, and hands it to stage 2
// through a bounded queue. Stage 2 (compute) decodes compressed buffers and
// runs the per-millisecond thermal loop; on light steps it evaluates the slit
// rows of every axis against the interpolated temperatures.
//
// Field i is released at r_i (the cumulative scan time of earlier fields, or
// 0 when saturated). Its latency is the time from release until the last
// deformation of the field is delivered. Deadlines are firm: a miss is
// recorded and the scan continues.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "whff/codec.hpp"
#include "whff/error.hpp"
#include "whff/gemv.hpp"
#include "whff/model.hpp"
#include "whff/schedule.hpp"
#include "whff/thermal.hpp"

namespace whff {

enum class Stage { transfer, compute };
enum class TimeSource { simulated, real };
enum class ReleaseMode { periodic, saturated };

const char* to_string(Stage s);

/// Extra delay charged to one stage of one field (index into the schedule).
struct Stall {
    std::size_t field = 0;
    Stage stage = Stage::compute;
    double seconds = 0.0;
};

/// Maps the raw slit deformations of one axis to actuator positions. Must be
/// safe to call concurrently for different axes.
using Resampler =
    std::function<std::vector<float>(Axis axis, std::size_t model_field, std::size_t slit, std::span<const float>)>;

struct PipelineConfig {
    double interconnect_bandwidth = 16e9; // bytes/s
    bool use_compression = false;
    CodecMode codec = FixedAccuracy{1e-12};
    std::optional<double> decode_throughput_override; // decoded bytes/s
    double compute_throughput = 200e9;                 // FLOP/s charged per simulated step
    std::size_t queue_depth = 2;                       // field buffers in flight
    unsigned axis_workers = 3;
    bool overlap = true; // false runs both stages in the calling thread, one field at a time
    TimeSource time_source = TimeSource::simulated;
    ReleaseMode release = ReleaseMode::periodic;
    PrecisionPolicy policy = PrecisionPolicy::mixed;
    ReductionShape reduction = ReductionShape::fixed_tree(8);
    // Per-field stage times replacing the modelled ones (simulated time only).
    std::optional<double> forced_transfer_s;
    std::optional<double> forced_decode_s;
    std::optional<double> forced_compute_s;
    std::vector<Stall> stalls;
    Resampler resampler; // empty selects pass-through

    static constexpr double kDefaultDecodeThroughput = 33e9;

    double decode_throughput() const { return decode_throughput_override.value_or(kDefaultDecodeThroughput); }
    void validate() const;
};

/// One scan millisecond. Times are seconds since the start of the scan.
struct StepRecord {
    std::size_t field = 0; // schedule index
    std::size_t k = 0;     // millisecond within the field
    Phase phase = Phase::dark;
    std::size_t slit = 0;
    double t_compute_s = 0.0;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct FieldRecord {
    std::size_t field = 0;
    std::size_t model_field = 0;
    std::uint64_t bytes_in = 0;
    double t_transfer_s = 0.0;
    double t_decode_s = 0.0;
    double t_compute_s = 0.0;
    double release_s = 0.0;
    double transfer_start_s = 0.0;
    double transfer_end_s = 0.0;
    double compute_start_s = 0.0; // decode starts here
    double compute_end_s = 0.0;
    double latency_s = 0.0;
    double budget_s = 0.0;
    bool deadline_met = true;
};

struct PipelineTrace {
    std::vector<StepRecord> steps;
    std::vector<FieldRecord> fields;
    std::size_t thermal_steps = 0;
    std::size_t gemv_calls = 0;
};

/// Deformations of one light step.
struct DeformationSample {
    std::size_t field = 0;
    std::size_t model_field = 0;
    std::size_t k = 0;
    std::size_t slit = 0;
    std::array<std::vector<float>, 3> axes;
};

struct ScanResult {
    std::vector<DeformationSample> deformations;
    PipelineTrace trace;
    ThermalState final_state;
};

/// Codec streams of every model field, indexed [model_field][axis].
using FieldStreams = std::vector<std::array<CompressedStream, 3>>;

FieldStreams compress_fields(const WaferModel& model, const CodecMode& mode);

/// A stage-1 failure (corrupt or mismatched stream) attributed to one field.
class StageFault : public CorruptData {
public:
    StageFault(std::size_t field, Stage stage, Kind kind, const std::string& what)
        : CorruptData(kind, "field " + std::to_string(field) + " " + to_string(stage) + " stage: " + what),
          field_(field), stage_(stage) {}

    std::size_t field() const noexcept { return field_; }
    Stage stage() const noexcept { return stage_; }

private:
    std::size_t field_;
    Stage stage_;
};

/// Runs every field of `schedule`. When cfg.use_compression is set, stage 1
/// ships `precompressed` (or streams made here with cfg.codec when null).
ScanResult run_scan(const WaferModel& model, const ScanSchedule& schedule, const HeatLoad& load,
                    const PipelineConfig& cfg, const FieldStreams* precompressed = nullptr);

struct StageTimes {
    double transfer_s = 0.0; // uncompressed transfer time
    double compute_s = 0.0;
    double decode_s = 0.0;
};

/// Steady-state interval between field completions of the two-stage pipeline.
///   uncompressed: max(T_transfer, T_compute)
///   compressed:   max(T_transfer / R, T_compute + T_decode)
double pipeline_period(const StageTimes& t, double ratio, bool compressed);
/// uncompressed: T_compute + T_transfer; compressed: T_compute + T_transfer / R + T_decode.
double pipeline_latency(const StageTimes& t, double ratio, bool compressed);
/// Compression shortens the transfer stage by more than decoding costs exactly when W_c >= B.
bool compression_beneficial(double bandwidth, double decode_throughput);

struct FieldVerdict {
    std::size_t field = 0;
    double latency_s = 0.0;
    double budget_s = 0.0;
    bool met = true;
};

struct DeadlineReport {
    std::vector<FieldVerdict> verdicts;
    std::size_t misses = 0;
    double miss_rate = 0.0;
    double worst_latency_s = 0.0;
};

DeadlineReport deadline_report(const PipelineTrace& trace);
/// Re-judges the recorded latencies against `budgets_s` (one per field).
DeadlineReport deadline_report(const PipelineTrace& trace, std::span<const double> budgets_s);

inline constexpr const char* kTraceCsvHeader =
    "field,k,phase,slit,bytes_in,t_transfer_s,t_decode_s,t_compute_s,latency_s,deadline_met";

/// One row per millisecond, then one "field" row per field carrying the
/// transfer, decode and total compute times with the deadline verdict.
void write_trace_csv(std::ostream& out, const PipelineTrace& trace);

/// Deformations of one axis stacked row-wise in light-step order.
DenseMatrix<float> stack_deformations(std::span<const DeformationSample> samples, Axis axis);
/// All deformations of each axis concatenated in light-step order.
std::array<std::vector<float>, 3> flatten_deformations(std::span<const DeformationSample> samples);

} // namespace whff
