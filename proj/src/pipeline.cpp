#include "whff/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "whff/bounded_queue.hpp"
#include "whff/parallel.hpp"

namespace whff {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Operator rows of one field as handed from stage 1 to stage 2.
struct FieldBuffer {
    std::size_t index = 0;
    std::size_t model_field = 0;
    bool compressed = false;
    std::array<DenseMatrix<float>, 3> dense;
    std::array<CompressedStream, 3> streams;
    std::uint64_t bytes_in = 0;
    double transfer_start_s = 0.0; // real time only
    double transfer_end_s = 0.0;
};

/// Stage-2 outcome of one field before the timeline is laid out.
struct FieldWork {
    std::vector<StepRecord> steps;
    std::vector<DeformationSample> samples;
    double decode_s = 0.0;
    double compute_start_s = 0.0; // real time only
    double compute_end_s = 0.0;
};

double stall_for(const PipelineConfig& cfg, std::size_t field, Stage stage) {
    double total = 0.0;
    for (const auto& s : cfg.stalls) {
        if (s.field == field && s.stage == stage) total += s.seconds;
    }
    return total;
}

void check_consistency(const WaferModel& model, const ScanSchedule& schedule, const HeatLoad& load) {
    schedule.validate();
    const auto T = model.temperature_points();
    if (load.size() != T) throw InvalidArgument("run_scan: heat load length does not match the thermal mesh");
    load.validate(T);
    for (std::size_t i = 0; i < schedule.fields.size(); ++i) {
        const auto& f = schedule.fields[i];
        if (f.field_id >= model.field_count()) {
            throw InvalidArgument("run_scan: schedule field " + std::to_string(i) + " refers to unknown model field " +
                                  std::to_string(f.field_id));
        }
        if (f.field_id >= load.light.size()) {
            throw InvalidArgument("run_scan: heat load has no footprints for model field " + std::to_string(f.field_id));
        }
        for (auto slit : f.light_slits) {
            if (slit >= model.slit_count(f.field_id) || slit >= load.light[f.field_id].size()) {
                throw InvalidArgument("run_scan: schedule field " + std::to_string(i) + " uses unknown slit " +
                                      std::to_string(slit));
            }
        }
    }
}

class ScanExecutor {
public:
    ScanExecutor(const WaferModel& model, const ScanSchedule& schedule, const HeatLoad& load,
                 const PipelineConfig& cfg, const FieldStreams* streams)
        : model_(model), schedule_(schedule), load_(load), cfg_(cfg), streams_(streams),
          state_(ThermalState::zeros(model.temperature_points(), model.interpolated_points())),
          u_(model.temperature_points()), next_(model.temperature_points()) {}

    ScanResult run() {
        t0_ = Clock::now();
        const auto n = schedule_.fields.size();
        buffers_meta_.resize(n);
        work_.resize(n);
        if (cfg_.overlap) {
            run_overlapped();
        } else {
            for (std::size_t i = 0; i < n; ++i) consume(fetch(i));
        }
        return finish();
    }

private:
    FieldBuffer fetch(std::size_t i) {
        FieldBuffer buf;
        buf.index = i;
        buf.model_field = schedule_.fields[i].field_id;
        buf.compressed = cfg_.use_compression;
        buf.transfer_start_s = seconds_since(t0_);
        const auto window = model_.field_windows[buf.model_field];
        const auto S = model_.interpolated_points();
        for (auto axis : kAxes) {
            const auto a = static_cast<std::size_t>(axis);
            if (buf.compressed) {
                auto stream = (*streams_).at(buf.model_field)[a];
                try {
                    stream.validate();
                } catch (const CorruptData& e) {
                    throw StageFault(i, Stage::transfer, e.kind(), std::string(axis_name(axis)) + " stream: " + e.what());
                }
                if (stream.header.rows != window.width() || stream.header.cols != S) {
                    throw StageFault(i, Stage::transfer, CorruptData::Kind::bad_header,
                                     std::string(axis_name(axis)) + " stream shape does not match the field window");
                }
                buf.bytes_in += stream.serialized_bytes();
                buf.streams[a] = std::move(stream);
            } else {
                const auto view = fetch_field_submatrix(model_, axis, buf.model_field);
                buf.dense[a] = DenseMatrix<float>(view.rows(), view.cols(),
                                                  std::vector<float>(view.data().begin(), view.data().end()));
                buf.bytes_in += view.data().size() * sizeof(float);
            }
        }
        if (cfg_.time_source == TimeSource::real) sleep_for(stall_for(cfg_, i, Stage::transfer));
        buf.transfer_end_s = seconds_since(t0_);
        return buf;
    }

    void consume(FieldBuffer buf) {
        const auto i = buf.index;
        auto& work = work_[i];
        buffers_meta_[i] = {buf.model_field, buf.bytes_in, buf.transfer_start_s, buf.transfer_end_s};
        work.compute_start_s = seconds_since(t0_);

        if (buf.compressed) {
            const auto d0 = Clock::now();
            for (auto axis : kAxes) {
                const auto a = static_cast<std::size_t>(axis);
                try {
                    buf.dense[a] = decompress(buf.streams[a]);
                } catch (const CorruptData& e) {
                    throw StageFault(i, Stage::transfer, e.kind(),
                                     std::string(axis_name(axis)) + " stream decode: " + e.what());
                }
                buf.streams[a] = {};
            }
            work.decode_s = seconds_since_point(d0);
        }
        for (auto axis : kAxes) {
            const auto values = buf.dense[static_cast<std::size_t>(axis)].values();
            for (std::size_t j = 0; j < values.size(); ++j) {
                if (!std::isfinite(values[j])) throw NumericFault("field " + std::to_string(i) + " operator rows", j);
            }
        }
        if (cfg_.time_source == TimeSource::real) sleep_for(stall_for(cfg_, i, Stage::compute));

        const auto& field = schedule_.fields[i];
        const auto steps = field.steps();
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const auto s0 = Clock::now();
            const double start = seconds_since(t0_);
            run_step(buf, k, steps[k], work);
            work.steps.push_back({i, k, steps[k].phase, steps[k].slit, seconds_since_point(s0), start,
                                  seconds_since(t0_)});
        }
        work.compute_end_s = seconds_since(t0_);
    }

    void run_step(const FieldBuffer& buf, std::size_t k, const ScheduleStep& step, FieldWork& work) {
        source_term(load_, buf.model_field, step, u_);
        thermal_step(model_.A, model_.B, state_.temperatures, u_, next_);
        std::swap(state_.temperatures, next_);
        thermal_interpolate(model_.P, state_.temperatures, state_.interpolated);
        ++state_.k;
        ++thermal_steps_;
        if (step.phase != Phase::light) return;

        DeformationSample sample{buf.index, buf.model_field, k, step.slit, {}};
        parallel_chunks(kAxes.size(), cfg_.axis_workers, [&](std::size_t first, std::size_t last) {
            for (std::size_t a = first; a < last; ++a) {
                const auto slit_rows = fetch_slit_submatrix(buf.dense[a].view(), model_, buf.model_field, step.slit);
                std::vector<float> out(slit_rows.rows());
                gemv_unchecked({slit_rows, state_.interpolated, cfg_.policy, cfg_.reduction, 1}, out);
                if (cfg_.resampler) out = cfg_.resampler(kAxes[a], buf.model_field, step.slit, out);
                sample.axes[a] = std::move(out);
            }
        });
        gemv_calls_ += kAxes.size();
        work.samples.push_back(std::move(sample));
    }

    void run_overlapped() {
        BoundedQueue<FieldBuffer> queue(cfg_.queue_depth - 1);
        std::exception_ptr producer_error;
        std::thread producer([&] {
            try {
                for (std::size_t i = 0; i < schedule_.fields.size(); ++i) {
                    if (!queue.push(fetch(i))) return;
                }
            } catch (...) {
                producer_error = std::current_exception();
            }
            queue.close();
        });
        std::exception_ptr consumer_error;
        try {
            while (auto buf = queue.pop()) consume(std::move(*buf));
        } catch (...) {
            consumer_error = std::current_exception();
            queue.close();
        }
        producer.join();
        if (producer_error) std::rethrow_exception(producer_error);
        if (consumer_error) std::rethrow_exception(consumer_error);
    }

    /// FLOPs of one millisecond: A T + B u, P T and, on light steps, one slit product per axis.
    double thermal_flops() const {
        const auto T = static_cast<double>(model_.temperature_points());
        const auto S = static_cast<double>(model_.interpolated_points());
        return 2.0 * static_cast<double>(model_.A.nnz()) + T + 2.0 * static_cast<double>(model_.P.nnz()) - S;
    }

    double simulated_step_seconds(std::size_t model_field, const ScheduleStep& step) const {
        double t = thermal_flops() / cfg_.compute_throughput;
        if (step.phase == Phase::light) {
            const auto rows = model_.slit_windows[model_field][step.slit].width();
            const auto waves = (kAxes.size() + cfg_.axis_workers - 1) / cfg_.axis_workers;
            t += static_cast<double>(waves) * gemv_flops(rows, model_.interpolated_points()) / cfg_.compute_throughput;
        }
        return t;
    }

    ScanResult finish() {
        ScanResult result;
        auto& trace = result.trace;
        trace.thermal_steps = thermal_steps_;
        trace.gemv_calls = gemv_calls_;
        const bool simulated = cfg_.time_source == TimeSource::simulated;

        double release = 0.0;
        for (std::size_t i = 0; i < work_.size(); ++i) {
            const auto& field = schedule_.fields[i];
            const auto& meta = buffers_meta_[i];
            auto& work = work_[i];
            FieldRecord rec;
            rec.field = i;
            rec.model_field = meta.model_field;
            rec.bytes_in = meta.bytes_in;
            rec.budget_s = field.time_budget_ms / 1000.0;

            if (simulated) {
                const auto steps = field.steps();
                std::vector<double> step_s(steps.size());
                if (cfg_.forced_compute_s) {
                    std::fill(step_s.begin(), step_s.end(), *cfg_.forced_compute_s / static_cast<double>(steps.size()));
                } else {
                    for (std::size_t k = 0; k < steps.size(); ++k) step_s[k] = simulated_step_seconds(meta.model_field, steps[k]);
                }
                step_s.front() += stall_for(cfg_, i, Stage::compute);

                rec.t_transfer_s = cfg_.forced_transfer_s.value_or(static_cast<double>(meta.bytes_in) /
                                                                   cfg_.interconnect_bandwidth) +
                                   stall_for(cfg_, i, Stage::transfer);
                if (cfg_.use_compression) {
                    const double decoded = 3.0 * static_cast<double>(model_.field_windows[meta.model_field].width()) *
                                           static_cast<double>(model_.interpolated_points()) * sizeof(float);
                    rec.t_decode_s = cfg_.forced_decode_s.value_or(decoded / cfg_.decode_throughput());
                }
                for (double s : step_s) rec.t_compute_s += s;

                rec.release_s = cfg_.release == ReleaseMode::periodic ? release : 0.0;
                const double prev_transfer_end = i > 0 ? trace.fields[i - 1].transfer_end_s : 0.0;
                const double prev_compute_end = i > 0 ? trace.fields[i - 1].compute_end_s : 0.0;
                // A field buffer is reusable once the field queue_depth places earlier has been computed.
                const double buffer_free = i >= cfg_.queue_depth ? trace.fields[i - cfg_.queue_depth].compute_end_s : 0.0;
                rec.transfer_start_s = cfg_.overlap ? std::max({rec.release_s, prev_transfer_end, buffer_free})
                                                    : std::max(rec.release_s, prev_compute_end);
                rec.transfer_end_s = rec.transfer_start_s + rec.t_transfer_s;
                rec.compute_start_s = std::max(rec.transfer_end_s, prev_compute_end);

                double t = rec.compute_start_s + rec.t_decode_s;
                for (std::size_t k = 0; k < work.steps.size(); ++k) {
                    work.steps[k].t_compute_s = step_s[k];
                    work.steps[k].start_s = t;
                    t += step_s[k];
                    work.steps[k].end_s = t;
                }
                rec.compute_end_s = t;
            } else {
                rec.release_s = meta.transfer_start_s;
                rec.transfer_start_s = meta.transfer_start_s;
                rec.transfer_end_s = meta.transfer_end_s;
                rec.t_transfer_s = meta.transfer_end_s - meta.transfer_start_s;
                rec.t_decode_s = work.decode_s;
                rec.compute_start_s = work.compute_start_s;
                rec.compute_end_s = work.compute_end_s;
                rec.t_compute_s = work.compute_end_s - work.compute_start_s - work.decode_s;
            }
            rec.latency_s = rec.compute_end_s - rec.release_s;
            rec.deadline_met = rec.latency_s <= rec.budget_s;
            release += static_cast<double>(field.duration_ms()) / 1000.0;

            trace.fields.push_back(rec);
            for (auto& s : work.steps) trace.steps.push_back(s);
            for (auto& d : work.samples) result.deformations.push_back(std::move(d));
        }
        result.final_state = std::move(state_);
        return result;
    }

    static double seconds_since_point(Clock::time_point t) { return seconds_since(t); }

    static void sleep_for(double seconds) {
        if (seconds > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

    struct BufferMeta {
        std::size_t model_field = 0;
        std::uint64_t bytes_in = 0;
        double transfer_start_s = 0.0;
        double transfer_end_s = 0.0;
    };

    const WaferModel& model_;
    const ScanSchedule& schedule_;
    const HeatLoad& load_;
    const PipelineConfig& cfg_;
    const FieldStreams* streams_;
    Clock::time_point t0_;

    // Owned by stage 2.
    ThermalState state_;
    std::vector<float> u_;
    std::vector<float> next_;
    std::vector<BufferMeta> buffers_meta_;
    std::vector<FieldWork> work_;
    std::size_t thermal_steps_ = 0;
    std::size_t gemv_calls_ = 0;
};

} // namespace

const char* to_string(Stage s) { return s == Stage::transfer ? "transfer" : "compute"; }

void PipelineConfig::validate() const {
    if (!(interconnect_bandwidth > 0.0)) throw InvalidArgument("pipeline: interconnect bandwidth must be positive");
    if (queue_depth < 2) throw InvalidArgument("pipeline: queue depth must be at least 2");
    if (axis_workers < 1 || axis_workers > 3) throw InvalidArgument("pipeline: axis workers must be 1..3");
    if (!(compute_throughput > 0.0)) throw InvalidArgument("pipeline: compute throughput must be positive");
    if (decode_throughput_override && !(*decode_throughput_override > 0.0)) {
        throw InvalidArgument("pipeline: decode throughput must be positive");
    }
    for (const auto& forced : {forced_transfer_s, forced_decode_s, forced_compute_s}) {
        if (forced && !(*forced >= 0.0)) throw InvalidArgument("pipeline: forced stage times must be nonnegative");
    }
    for (const auto& s : stalls) {
        if (!(s.seconds >= 0.0)) throw InvalidArgument("pipeline: stall durations must be nonnegative");
    }
    if (use_compression) validate_mode(codec);
}

FieldStreams compress_fields(const WaferModel& model, const CodecMode& mode) {
    FieldStreams out(model.field_count());
    for (std::size_t f = 0; f < model.field_count(); ++f) {
        for (auto axis : kAxes) out[f][static_cast<std::size_t>(axis)] = compress(fetch_field_submatrix(model, axis, f), mode);
    }
    return out;
}

ScanResult run_scan(const WaferModel& model, const ScanSchedule& schedule, const HeatLoad& load,
                    const PipelineConfig& cfg, const FieldStreams* precompressed) {
    cfg.validate();
    check_consistency(model, schedule, load);
    FieldStreams own;
    if (cfg.use_compression && !precompressed) {
        own = compress_fields(model, cfg.codec);
        precompressed = &own;
    }
    if (cfg.use_compression && precompressed->size() != model.field_count()) {
        throw InvalidArgument("run_scan: one stream set per model field required");
    }
    ScanExecutor exec(model, schedule, load, cfg, precompressed);
    return exec.run();
}

double pipeline_period(const StageTimes& t, double ratio, bool compressed) {
    if (!(ratio >= 1.0)) throw InvalidArgument("pipeline_period: compression ratio must be at least 1");
    if (t.transfer_s < 0.0 || t.compute_s < 0.0 || t.decode_s < 0.0) {
        throw InvalidArgument("pipeline_period: stage times must be nonnegative");
    }
    return compressed ? std::max(t.transfer_s / ratio, t.compute_s + t.decode_s) : std::max(t.transfer_s, t.compute_s);
}

double pipeline_latency(const StageTimes& t, double ratio, bool compressed) {
    if (!(ratio >= 1.0)) throw InvalidArgument("pipeline_latency: compression ratio must be at least 1");
    if (t.transfer_s < 0.0 || t.compute_s < 0.0 || t.decode_s < 0.0) {
        throw InvalidArgument("pipeline_latency: stage times must be nonnegative");
    }
    return compressed ? t.compute_s + t.transfer_s / ratio + t.decode_s : t.compute_s + t.transfer_s;
}

bool compression_beneficial(double bandwidth, double decode_throughput) { return decode_throughput >= bandwidth; }

DeadlineReport deadline_report(const PipelineTrace& trace) {
    std::vector<double> budgets;
    for (const auto& f : trace.fields) budgets.push_back(f.budget_s);
    return deadline_report(trace, budgets);
}

DeadlineReport deadline_report(const PipelineTrace& trace, std::span<const double> budgets_s) {
    if (budgets_s.size() != trace.fields.size()) throw InvalidArgument("deadline_report: one budget per field required");
    DeadlineReport r;
    for (std::size_t i = 0; i < trace.fields.size(); ++i) {
        const auto& f = trace.fields[i];
        const bool met = f.latency_s <= budgets_s[i];
        r.verdicts.push_back({f.field, f.latency_s, budgets_s[i], met});
        if (!met) ++r.misses;
        r.worst_latency_s = std::max(r.worst_latency_s, f.latency_s);
    }
    r.miss_rate = r.verdicts.empty() ? 0.0 : static_cast<double>(r.misses) / static_cast<double>(r.verdicts.size());
    return r;
}

void write_trace_csv(std::ostream& out, const PipelineTrace& trace) {
    const auto old_precision = out.precision(9);
    out << kTraceCsvHeader << '\n';
    std::size_t s = 0;
    for (const auto& f : trace.fields) {
        for (; s < trace.steps.size() && trace.steps[s].field == f.field; ++s) {
            const auto& st = trace.steps[s];
            out << st.field << ',' << st.k << ',' << to_string(st.phase) << ',' << st.slit << ",0,0,0,"
                << st.t_compute_s << ',' << (st.end_s - f.release_s) << ','
                << ((st.end_s - f.release_s) <= f.budget_s ? 1 : 0) << '\n';
        }
        out << f.field << ',' << (s > 0 ? trace.steps[s - 1].k + 1 : 0) << ",field,," << f.bytes_in << ','
            << f.t_transfer_s << ',' << f.t_decode_s << ',' << f.t_compute_s << ',' << f.latency_s << ','
            << (f.deadline_met ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

DenseMatrix<float> stack_deformations(std::span<const DeformationSample> samples, Axis axis) {
    const auto a = static_cast<std::size_t>(axis);
    if (samples.empty()) throw InvalidArgument("stack_deformations: no samples");
    const auto width = samples.front().axes[a].size();
    std::vector<float> values;
    values.reserve(samples.size() * width);
    for (const auto& s : samples) {
        if (s.axes[a].size() != width) throw InvalidArgument("stack_deformations: slit widths differ");
        values.insert(values.end(), s.axes[a].begin(), s.axes[a].end());
    }
    return DenseMatrix<float>(samples.size(), width, std::move(values));
}

std::array<std::vector<float>, 3> flatten_deformations(std::span<const DeformationSample> samples) {
    std::array<std::vector<float>, 3> out;
    for (const auto& s : samples) {
        for (std::size_t a = 0; a < 3; ++a) out[a].insert(out[a].end(), s.axes[a].begin(), s.axes[a].end());
    }
    return out;
}

} // namespace whff
