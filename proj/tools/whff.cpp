// whff: model generation, scan execution, benchmarks, codec and cost analysis.
//
// Exit status: 0 success, 1 usage or argument error, 2 corrupt input data.
// Errors are written to stderr as one line: whff: error kind=<k> message="<m>".

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "whff/analysis.hpp"
#include "whff/codec.hpp"
#include "whff/container.hpp"
#include "whff/error.hpp"
#include "whff/gemv.hpp"
#include "whff/model.hpp"
#include "whff/pipeline.hpp"
#include "whff/schedule.hpp"
#include "whff/thermal.hpp"

namespace {

using namespace whff;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string full(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

/// Rows of (csv text, table text) cells rendered as CSV or an aligned table.
class Report {
public:
    explicit Report(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::pair<std::string, std::string>> cells) { rows_.push_back(std::move(cells)); }

    void write(std::ostream& out, bool csv, const std::string& what) const {
        if (csv) {
            out << "# whff " << what << " generated " << utc_timestamp() << '\n';
            for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
            out << '\n';
            for (const auto& row : rows_) {
                for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c].first;
                out << '\n';
            }
            return;
        }
        std::vector<std::size_t> width(columns_.size());
        for (std::size_t c = 0; c < columns_.size(); ++c) width[c] = columns_[c].size();
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].second.size());
        }
        for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << columns_[c];
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << row[c].second;
            out << '\n';
        }
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::pair<std::string, std::string>>> rows_;
};

std::pair<std::string, std::string> cell(const std::string& s) { return {s, s}; }
std::pair<std::string, std::string> cell(double v, int table_digits) { return {full(v), fixed(v, table_digits)}; }

struct OutputOptions {
    std::string format = "table";
    std::string out;

    void add_to(CLI::App* app) {
        app->add_option("--format", format, "csv or table")->check(CLI::IsMember({"csv", "table"}));
        app->add_option("--out", out, "write the report to this file instead of stdout");
    }

    void emit(const Report& r, const std::string& what) const {
        if (out.empty()) {
            r.write(std::cout, format == "csv", what);
            return;
        }
        std::ofstream f(out, std::ios::trunc);
        if (!f) throw InvalidArgument("cannot open " + out + " for writing");
        r.write(f, format == "csv", what);
    }
};

struct CodecOptions {
    std::string mode = "accuracy";
    unsigned bpv = 8;
    unsigned planes = 16;
    double tolerance = 1e-12;

    void add_to(CLI::App* app) {
        app->add_option("--mode", mode, "rate, precision or accuracy")
            ->check(CLI::IsMember({"rate", "precision", "accuracy"}));
        app->add_option("--bpv", bpv, "bits per value for --mode rate");
        app->add_option("--planes", planes, "bit planes for --mode precision");
        app->add_option("--tolerance", tolerance, "absolute error bound for --mode accuracy");
    }

    CodecMode get() const {
        CodecMode m = mode == "rate"        ? CodecMode{FixedRate{bpv}}
                      : mode == "precision" ? CodecMode{FixedPrecision{planes}}
                                            : CodecMode{FixedAccuracy{tolerance}};
        validate_mode(m);
        return m;
    }
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t used_r = 0, used_c = 0;
        const auto r = std::stoul(s.substr(0, x), &used_r);
        const auto c = std::stoul(s.substr(x + 1), &used_c);
        if (used_r != x || used_c != s.size() - x - 1) throw std::invalid_argument(s);
        return {r, c};
    } catch (const std::logic_error&) {
        throw InvalidArgument("--grid expects ROWSxCOLS, got '" + s + "'");
    }
}

ReductionShape parse_reduction(const std::string& s) {
    if (s == "sequential") return ReductionShape::sequential();
    if (s.rfind("tree", 0) == 0) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) return ReductionShape::fixed_tree(8);
        try {
            return ReductionShape::fixed_tree(static_cast<unsigned>(std::stoul(s.substr(colon + 1))));
        } catch (const std::logic_error&) {
        }
    }
    throw InvalidArgument("--reduction expects sequential or tree:F, got '" + s + "'");
}

Stall parse_stall(const std::string& s) {
    // FIELD:STAGE:SECONDS
    const auto a = s.find(':');
    const auto b = a == std::string::npos ? a : s.find(':', a + 1);
    try {
        if (b == std::string::npos) throw std::invalid_argument(s);
        Stall st;
        st.field = std::stoul(s.substr(0, a));
        const auto stage = s.substr(a + 1, b - a - 1);
        if (stage == "transfer") {
            st.stage = Stage::transfer;
        } else if (stage == "compute") {
            st.stage = Stage::compute;
        } else {
            throw std::invalid_argument(stage);
        }
        st.seconds = std::stod(s.substr(b + 1));
        return st;
    } catch (const std::logic_error&) {
        throw InvalidArgument("--stall expects FIELD:transfer|compute:SECONDS, got '" + s + "'");
    }
}

std::filesystem::path stream_path(const std::filesystem::path& dir, std::size_t field, Axis axis) {
    return dir / ("field" + std::to_string(field) + "_" + axis_name(axis) + ".whfz");
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string grid = "16x16";
    ModelSpec spec;
    std::string response = "smooth";
    std::string out = "model";
    double memory_cap_gib = 4.0;
};

void cmd_gen(const GenArgs& a, std::uint64_t seed) {
    auto spec = a.spec;
    std::tie(spec.grid_rows, spec.grid_cols) = parse_grid(a.grid);
    spec.seed = seed;
    spec.response = a.response == "noise" ? ResponseKind::noise : ResponseKind::smooth;
    spec.memory_cap_bytes = static_cast<std::size_t>(a.memory_cap_gib * double(std::size_t{1} << 30));
    const auto model = generate_model(spec);
    const auto manifest = save_model(model, a.out);
    std::cout << "model " << manifest.string() << " T=" << model.temperature_points()
              << " S=" << model.interpolated_points() << " K=" << model.deformation_points()
              << " fields=" << model.field_count() << " slits/field=" << model.slit_count(0)
              << " nnz(A)=" << model.A.nnz() << '\n';
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string model;
    std::string scan = "fast";
    std::size_t fields = 1;
    std::optional<std::size_t> light_ms;
    std::optional<std::size_t> dark_ms;
    std::optional<double> budget_ms;
    bool compress = false;
    CodecOptions codec;
    std::string streams;
    double bandwidth = 16e9;
    std::optional<double> decode_throughput;
    double compute_throughput = 200e9;
    std::size_t queue_depth = 2;
    unsigned workers = 3;
    std::string time = "simulated";
    std::string release = "periodic";
    bool sequential = false;
    std::string policy = "mixed";
    std::string reduction = "tree:8";
    std::optional<double> forced_transfer;
    std::optional<double> forced_decode;
    std::optional<double> forced_compute;
    std::vector<std::string> stalls;
    float dose = 1.0f;
    float dark_level = 0.0f;
    std::string out = "run";
};

void cmd_run(const RunArgs& a) {
    const auto model = load_model(a.model);
    ScheduleOverrides ov;
    ov.light_ms = a.light_ms;
    ov.dark_ms = a.dark_ms;
    ov.budget_ms = a.budget_ms;
    const auto schedule = build_scan_schedule(model, parse_scan_kind(a.scan), a.fields, ov);
    const auto load = synthesize_heat_load(model, {a.dose, a.dark_level});

    PipelineConfig cfg;
    cfg.interconnect_bandwidth = a.bandwidth;
    cfg.use_compression = a.compress || !a.streams.empty();
    cfg.codec = a.codec.get();
    cfg.decode_throughput_override = a.decode_throughput;
    cfg.compute_throughput = a.compute_throughput;
    cfg.queue_depth = a.queue_depth;
    cfg.axis_workers = a.workers;
    cfg.overlap = !a.sequential;
    cfg.time_source = a.time == "real" ? TimeSource::real : TimeSource::simulated;
    cfg.release = a.release == "saturated" ? ReleaseMode::saturated : ReleaseMode::periodic;
    cfg.policy = parse_precision_policy(a.policy);
    cfg.reduction = parse_reduction(a.reduction);
    cfg.forced_transfer_s = a.forced_transfer;
    cfg.forced_decode_s = a.forced_decode;
    cfg.forced_compute_s = a.forced_compute;
    for (const auto& s : a.stalls) cfg.stalls.push_back(parse_stall(s));

    FieldStreams streams;
    const FieldStreams* pre = nullptr;
    if (!a.streams.empty()) {
        streams.resize(model.field_count());
        for (std::size_t f = 0; f < model.field_count(); ++f) {
            for (auto axis : kAxes) streams[f][static_cast<std::size_t>(axis)] = load_stream(stream_path(a.streams, f, axis));
        }
        pre = &streams;
    }

    const auto result = run_scan(model, schedule, load, cfg, pre);
    std::filesystem::create_directories(a.out);
    {
        std::ofstream trace(std::filesystem::path(a.out) / "trace.csv", std::ios::trunc);
        if (!trace) throw InvalidArgument("cannot write trace into " + a.out);
        trace << "# whff run generated " << utc_timestamp() << '\n';
        write_trace_csv(trace, result.trace);
    }
    for (auto axis : kAxes) {
        save_matrix(std::filesystem::path(a.out) / (std::string("deform_") + axis_name(axis) + ".whfm"),
                    stack_deformations(result.deformations, axis));
    }
    const auto report = deadline_report(result.trace);
    std::cout << "fields=" << report.verdicts.size() << " misses=" << report.misses
              << " miss_rate=" << full(report.miss_rate) << " worst_latency_s=" << full(report.worst_latency_s)
              << " thermal_steps=" << result.trace.thermal_steps << " gemv_calls=" << result.trace.gemv_calls
              << " out=" << a.out << '\n';
}

// ---------------------------------------------------------------- bench

struct BenchGemvArgs {
    std::vector<std::string> shapes{"378x16384"};
    std::vector<std::string> policies{"mixed", "single", "double"};
    std::string reduction = "tree:8";
    std::size_t reps = 5;
};

void cmd_bench_gemv(const BenchGemvArgs& a, std::uint64_t seed, unsigned threads, const OutputOptions& out) {
    Report r({"shape", "rows", "cols", "policy", "reduction", "threads", "reps", "seconds_min", "seconds_median",
              "gflops", "max_rel_error"});
    for (const auto& shape : a.shapes) {
        const auto [rows, cols] = parse_grid(shape);
        for (const auto& p : a.policies) {
            GemvBenchOptions o;
            o.shape = shape;
            o.rows = rows;
            o.cols = cols;
            o.policy = parse_precision_policy(p);
            o.reduction = parse_reduction(a.reduction);
            o.repetitions = a.reps;
            o.seed = seed;
            o.threads = threads;
            const auto res = bench_gemv(o);
            r.add({cell(shape), cell(std::to_string(rows)), cell(std::to_string(cols)), cell(p), cell(a.reduction),
                   cell(std::to_string(threads)), cell(std::to_string(a.reps)), cell(res.seconds_min, 6),
                   cell(res.seconds_median, 6), cell(res.gflops, 2), {full(res.max_rel_error), full(res.max_rel_error)}});
        }
    }
    out.emit(r, "bench gemv");
}

struct BenchDecodeArgs {
    std::string shape = "1024x1024";
    CodecOptions codec;
    std::string input = "smooth";
    std::size_t reps = 3;
};

void cmd_bench_decode(const BenchDecodeArgs& a, std::uint64_t seed, unsigned threads, const OutputOptions& out) {
    const auto [rows, cols] = parse_grid(a.shape);
    if (a.reps == 0) throw InvalidArgument("--reps must be at least 1");
    DenseMatrix<float> data;
    if (a.input == "noise") {
        data = generate_noise_matrix(rows, cols, seed, 1e-8);
    } else {
        ModelSpec spec;
        const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cols))));
        spec.grid_rows = spec.grid_cols = std::max<std::size_t>(side, 2);
        spec.S = cols;
        spec.K = rows;
        spec.M = std::min<std::size_t>(rows, 16);
        spec.fields = 1;
        spec.seed = seed;
        data = generate_model(spec).response(Axis::x);
    }
    const auto mode = a.codec.get();
    const auto stream = compress(data.view(), mode);
    std::vector<double> times;
    DenseMatrix<float> decoded;
    for (std::size_t i = 0; i < a.reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        decoded = decompress(stream, threads);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const auto m = codec_metrics(data.view(), decoded.view(), stream);
    const double bytes = static_cast<double>(rows * cols * sizeof(float));
    Report r({"shape", "input", "mode", "threads", "reps", "seconds_min", "decoded_bytes_per_s", "ratio", "psnr_db",
              "max_error"});
    r.add({cell(a.shape), cell(a.input), cell(describe(mode)), cell(std::to_string(threads)),
           cell(std::to_string(a.reps)), cell(times.front(), 6), cell(bytes / times.front(), 0), cell(m.ratio, 3),
           cell(m.psnr, 2), {full(m.max_pointwise_error), full(m.max_pointwise_error)}});
    out.emit(r, "bench decode");
}

// ---------------------------------------------------------------- codec

void cmd_codec_compress(const std::string& in, const std::string& out, const CodecOptions& c) {
    const auto m = load_dense(in);
    const auto stream = compress(m.view(), c.get());
    save_stream(out, stream);
    std::cout << "stream " << out << " mode=" << describe(stream.header.mode) << " bytes=" << stream.serialized_bytes()
              << '\n';
}

void cmd_codec_compress_model(const std::string& manifest, const std::string& out, const CodecOptions& c) {
    const auto model = load_model(manifest);
    const auto streams = compress_fields(model, c.get());
    std::filesystem::create_directories(out);
    std::uint64_t bytes = 0;
    for (std::size_t f = 0; f < streams.size(); ++f) {
        for (auto axis : kAxes) {
            const auto& s = streams[f][static_cast<std::size_t>(axis)];
            save_stream(stream_path(out, f, axis), s);
            bytes += s.serialized_bytes();
        }
    }
    std::cout << "streams " << out << " fields=" << streams.size() << " bytes=" << bytes << '\n';
}

void cmd_codec_decompress(const std::string& in, const std::string& out, unsigned threads) {
    const auto stream = load_stream(in);
    save_matrix(out, decompress(stream, threads));
    std::cout << "matrix " << out << " rows=" << stream.header.rows << " cols=" << stream.header.cols << '\n';
}

void cmd_codec_stats(const std::string& in, const std::string& original, unsigned threads, const OutputOptions& out) {
    const auto stream = load_stream(in);
    const double bpv = static_cast<double>(stream.payload_bits) / static_cast<double>(stream.header.padded_values());
    Report r({"stream", "mode", "rows", "cols", "bytes", "bits_per_value", "ratio", "rmse", "nrmse", "max_error",
              "psnr_db"});
    std::vector<std::pair<std::string, std::string>> row{
        cell(in), cell(describe(stream.header.mode)), cell(std::to_string(stream.header.rows)),
        cell(std::to_string(stream.header.cols)), cell(std::to_string(stream.serialized_bytes())), cell(bpv, 3),
        cell(32.0 / bpv, 3)};
    if (original.empty()) {
        for (int i = 0; i < 4; ++i) row.push_back(cell(""));
    } else {
        const auto m = load_dense(original);
        const auto decoded = decompress(stream, threads);
        const auto met = codec_metrics(m.view(), decoded.view(), stream);
        row.push_back({full(met.rmse), full(met.rmse)});
        row.push_back({full(met.nrmse), full(met.nrmse)});
        row.push_back({full(met.max_pointwise_error), full(met.max_pointwise_error)});
        row.push_back(cell(met.psnr, 2));
    }
    r.add(std::move(row));
    out.emit(r, "codec stats");
}

// ---------------------------------------------------------------- analyze

struct CostArgs {
    std::string preset;
    CostParams params{370000, 256000, 378, 7, 1, 34, 36, 50.0};
    std::string multiplier;

    void add_to(CLI::App* app) {
        app->add_option("--preset", preset, "paper-fast or paper-slow");
        app->add_option("--T", params.T, "temperature points");
        app->add_option("--S", params.S, "interpolated points");
        app->add_option("--M", params.M, "slit rows");
        app->add_option("--nnz-a", params.nnz_a, "nonzeros per row of A");
        app->add_option("--nnz-b", params.nnz_b, "nonzeros per row of B");
        app->add_option("--t-l", params.t_l, "light milliseconds");
        app->add_option("--t-d", params.t_d, "dark milliseconds");
        app->add_option("--budget-ms", params.budget_ms, "time budget");
        app->add_option("--multiplier", multiplier, "as-printed or light-steps")
            ->check(CLI::IsMember({"as-printed", "light-steps"}));
    }

    std::vector<std::pair<std::string, CostPreset>> resolve() const {
        std::vector<std::pair<std::string, CostPreset>> out;
        if (!preset.empty()) {
            auto p = cost_preset(preset);
            if (!multiplier.empty()) p.multiplier = parse_deformation_multiplier(multiplier);
            out.emplace_back(preset, p);
            return out;
        }
        CostPreset custom{"custom", params,
                          multiplier.empty() ? DeformationMultiplier::as_printed : parse_deformation_multiplier(multiplier),
                          0.0, 0.0};
        out.emplace_back("custom", custom);
        return out;
    }
};

void cmd_analyze_flops(const CostArgs& a, const OutputOptions& out) {
    Report r({"preset", "multiplier", "total_flop", "gflops_required", "gflops_per_axis", "reference_gflops",
              "reference_per_axis", "deviation_pct"});
    for (const auto& [name, p] : a.resolve()) {
        const auto c = flop_cost(p.params, p.multiplier);
        const bool has_ref = p.reference_gflops > 0.0;
        const double dev = has_ref ? 100.0 * (c.gflops_required - p.reference_gflops) / p.reference_gflops : 0.0;
        r.add({cell(name), cell(to_string(p.multiplier)), cell(c.total_flop, 0), cell(c.gflops_required, 1),
               cell(c.gflops_per_axis, 1), has_ref ? cell(p.reference_gflops, 1) : cell(""),
               has_ref ? cell(p.reference_gflops_per_axis, 1) : cell(""), has_ref ? cell(dev, 2) : cell("")});
    }
    out.emit(r, "analyze flops");
}

void cmd_analyze_io(const CostArgs& a, const OutputOptions& out) {
    Report r({"preset", "values_per_field", "bytes_per_s", "bytes_per_s_per_axis"});
    for (const auto& [name, p] : a.resolve()) {
        const double bw = io_bandwidth(p.params);
        r.add({cell(name), cell(io_cost(p.params), 0), cell(bw, 0), cell(bw / 3.0, 0)});
    }
    out.emit(r, "analyze io");
}

void cmd_analyze_roofline(const std::string& platforms, const std::vector<double>& ais, const OutputOptions& out) {
    const auto pls = load_platforms(platforms);
    Report r({"platform", "ai_flop_per_byte", "attainable_gflops", "gflops_per_kusd", "bound"});
    for (const auto& pl : pls) {
        for (double ai : ais) {
            const double att = roofline_attainable(pl, ai);
            const bool bw_bound = ai * pl.mem_bandwidth < pl.peak_sp_flops;
            r.add({cell(pl.name), cell(ai, 4), cell(att / 1e9, 1), cell(normalized_roofline(pl, ai) * 1e3 / 1e9, 4),
                   cell(bw_bound ? "bandwidth" : "compute")});
        }
    }
    out.emit(r, "analyze roofline");
}

// Default times are the published breakdown in milliseconds; --bytes derives seconds.
struct PipelineArgs {
    StageTimes times{83.16, 16.84, 28.12};
    bool compute_given = false;
    double ratio = 10.0;
    std::optional<double> bytes;
    std::optional<double> bandwidth;
    std::optional<double> decode_throughput;
};

void cmd_analyze_pipeline(PipelineArgs a, const OutputOptions& out) {
    if (a.bytes) {
        if (!a.bandwidth || !a.decode_throughput) {
            throw InvalidArgument("--bytes needs --bandwidth and --decode-throughput");
        }
        if (!a.compute_given) throw InvalidArgument("--bytes needs --compute in seconds");
        a.times.transfer_s = *a.bytes / *a.bandwidth;
        a.times.decode_s = *a.bytes / *a.decode_throughput;
    }
    const double p_u = pipeline_period(a.times, 1.0, false);
    const double l_u = pipeline_latency(a.times, 1.0, false);
    const double p_c = pipeline_period(a.times, a.ratio, true);
    const double l_c = pipeline_latency(a.times, a.ratio, true);
    Report r({"transfer", "compute", "decode", "ratio", "period_uncompressed", "latency_uncompressed",
              "period_compressed", "latency_compressed", "latency_reduction_pct", "beneficial"});
    const bool beneficial = a.bandwidth && a.decode_throughput ? compression_beneficial(*a.bandwidth, *a.decode_throughput)
                                                               : l_c < l_u;
    r.add({cell(a.times.transfer_s, 4), cell(a.times.compute_s, 4), cell(a.times.decode_s, 4), cell(a.ratio, 2),
           cell(p_u, 4), cell(l_u, 4), cell(p_c, 4), cell(l_c, 4), cell(100.0 * (l_u - l_c) / l_u, 1),
           cell(beneficial ? "yes" : "no")});
    out.emit(r, "analyze pipeline");
}

// ---------------------------------------------------------------- errors

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const CorruptData*>(&e)) return "corrupt_data";
    if (dynamic_cast<const CapacityError*>(&e)) return "capacity";
    if (dynamic_cast<const NumericFault*>(&e)) return "numeric_fault";
    if (dynamic_cast<const LookupError*>(&e)) return "lookup";
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
    return "error";
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '"', '\'');
    return s;
}

int report_error(const std::string& kind, const std::string& message, int code) {
    std::cerr << "whff: error kind=" << kind << " message=\"" << one_line(message) << "\"\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wafer heat feed-forward model: generation, scan execution, benchmarks, codec and cost analysis"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    unsigned threads = 1;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::Range(1u, 256u));

    std::function<void()> action;

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic wafer model");
    gen_cmd->add_option("--grid", gen.grid, "thermal mesh ROWSxCOLS");
    gen_cmd->add_option("--S", gen.spec.S, "interpolated points");
    gen_cmd->add_option("--K", gen.spec.K, "deformation points");
    gen_cmd->add_option("--M", gen.spec.M, "slit rows");
    gen_cmd->add_option("--nnz", gen.spec.nnz_target, "nonzeros per row of A");
    gen_cmd->add_option("--fields", gen.spec.fields, "field windows");
    gen_cmd->add_option("--response", gen.response, "smooth or noise")->check(CLI::IsMember({"smooth", "noise"}));
    gen_cmd->add_option("--response-scale", gen.spec.response_scale, "amplitude of the deformation operator");
    gen_cmd->add_option("--memory-cap-gib", gen.memory_cap_gib, "refuse models larger than this");
    gen_cmd->add_option("--seed", seed, "random seed");
    gen_cmd->add_option("--out", gen.out, "output directory");
    gen_cmd->callback([&] { action = [&] { cmd_gen(gen, seed); }; });

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "execute a scan through the two-stage pipeline");
    run_cmd->add_option("--model", run.model, "model manifest.json")->required();
    run_cmd->add_option("--scan", run.scan, "fast or slow")->check(CLI::IsMember({"fast", "slow"}));
    run_cmd->add_option("--fields", run.fields, "fields to scan");
    run_cmd->add_option("--light-ms", run.light_ms, "light milliseconds per field");
    run_cmd->add_option("--dark-ms", run.dark_ms, "dark milliseconds per field");
    run_cmd->add_option("--budget-ms", run.budget_ms, "per-field deadline");
    run_cmd->add_flag("--compress", run.compress, "ship codec streams instead of dense rows");
    run.codec.add_to(run_cmd);
    run_cmd->add_option("--streams", run.streams, "directory written by 'codec compress-model' (implies --compress)");
    run_cmd->add_option("--bandwidth", run.bandwidth, "interconnect bytes/s");
    run_cmd->add_option("--decode-throughput", run.decode_throughput, "decoded bytes/s");
    run_cmd->add_option("--compute-throughput", run.compute_throughput, "FLOP/s charged per simulated step");
    run_cmd->add_option("--queue-depth", run.queue_depth, "field buffers in flight (>= 2)");
    run_cmd->add_option("--workers", run.workers, "concurrent axis evaluations (1..3)");
    run_cmd->add_option("--time", run.time, "simulated or real")->check(CLI::IsMember({"simulated", "real"}));
    run_cmd->add_option("--release", run.release, "periodic or saturated")
        ->check(CLI::IsMember({"periodic", "saturated"}));
    run_cmd->add_flag("--sequential", run.sequential, "run both stages in one thread without overlap");
    run_cmd->add_option("--policy", run.policy, "mixed, single or double");
    run_cmd->add_option("--reduction", run.reduction, "sequential or tree:F");
    run_cmd->add_option("--forced-transfer-s", run.forced_transfer, "per-field transfer time");
    run_cmd->add_option("--forced-decode-s", run.forced_decode, "per-field decode time");
    run_cmd->add_option("--forced-compute-s", run.forced_compute, "per-field compute time");
    run_cmd->add_option("--stall", run.stalls, "FIELD:transfer|compute:SECONDS");
    run_cmd->add_option("--dose", run.dose, "light footprint scale");
    run_cmd->add_option("--dark-level", run.dark_level, "uniform dark load");
    run_cmd->add_option("--seed", seed, "random seed");
    run_cmd->add_option("--out", run.out, "output directory");
    run_cmd->callback([&] { action = [&] { cmd_run(run); }; });

    auto* bench_cmd = app.add_subcommand("bench", "measure kernel throughput");
    bench_cmd->require_subcommand(1);
    BenchGemvArgs bg;
    OutputOptions bg_out;
    bg_out.format = "csv";
    auto* bg_cmd = bench_cmd->add_subcommand("gemv", "time the matrix-vector kernel");
    bg_cmd->add_option("--shape", bg.shapes, "ROWSxCOLS, repeatable");
    bg_cmd->add_option("--policy", bg.policies, "mixed, single or double, repeatable");
    bg_cmd->add_option("--reduction", bg.reduction, "sequential or tree:F");
    bg_cmd->add_option("--reps", bg.reps, "repetitions");
    bg_cmd->add_option("--seed", seed, "random seed");
    bg_cmd->add_option("--threads", threads, "worker threads");
    bg_out.add_to(bg_cmd);
    bg_cmd->callback([&] { action = [&] { cmd_bench_gemv(bg, seed, threads, bg_out); }; });

    BenchDecodeArgs bd;
    OutputOptions bd_out;
    bd_out.format = "csv";
    auto* bd_cmd = bench_cmd->add_subcommand("decode", "time stream decompression");
    bd_cmd->add_option("--shape", bd.shape, "ROWSxCOLS");
    bd_cmd->add_option("--input", bd.input, "smooth or noise")->check(CLI::IsMember({"smooth", "noise"}));
    bd_cmd->add_option("--reps", bd.reps, "repetitions");
    bd_cmd->add_option("--seed", seed, "random seed");
    bd_cmd->add_option("--threads", threads, "worker threads");
    bd.codec.add_to(bd_cmd);
    bd_out.add_to(bd_cmd);
    bd_cmd->callback([&] { action = [&] { cmd_bench_decode(bd, seed, threads, bd_out); }; });

    auto* codec_cmd = app.add_subcommand("codec", "compress, decompress and inspect streams");
    codec_cmd->require_subcommand(1);
    std::string c_in, c_out, c_orig, c_model;
    CodecOptions c_opts;
    c_opts.mode = "rate";
    OutputOptions c_stats_out;
    auto* cc = codec_cmd->add_subcommand("compress", "compress a dense binary32 container");
    cc->add_option("--in", c_in, "input .whfm")->required();
    cc->add_option("--out", c_out, "output .whfz")->required();
    c_opts.add_to(cc);
    cc->add_option("--seed", seed, "random seed");
    cc->callback([&] { action = [&] { cmd_codec_compress(c_in, c_out, c_opts); }; });
    auto* cm = codec_cmd->add_subcommand("compress-model", "compress every field window of a model");
    cm->add_option("--model", c_model, "model manifest.json")->required();
    cm->add_option("--out", c_out, "output directory")->required();
    c_opts.add_to(cm);
    cm->callback([&] { action = [&] { cmd_codec_compress_model(c_model, c_out, c_opts); }; });
    auto* cd = codec_cmd->add_subcommand("decompress", "decode a stream into a dense container");
    cd->add_option("--in", c_in, "input .whfz")->required();
    cd->add_option("--out", c_out, "output .whfm")->required();
    cd->add_option("--threads", threads, "worker threads");
    cd->callback([&] { action = [&] { cmd_codec_decompress(c_in, c_out, threads); }; });
    auto* cs = codec_cmd->add_subcommand("stats", "report size and, given the original, error metrics");
    cs->add_option("--in", c_in, "input .whfz")->required();
    cs->add_option("--original", c_orig, "original .whfm for error metrics");
    cs->add_option("--threads", threads, "worker threads");
    c_stats_out.add_to(cs);
    cs->callback([&] { action = [&] { cmd_codec_stats(c_in, c_orig, threads, c_stats_out); }; });

    auto* an_cmd = app.add_subcommand("analyze", "evaluate the analytic cost models");
    an_cmd->require_subcommand(1);
    CostArgs fl_args, io_args;
    OutputOptions fl_out, io_out, rf_out, pp_out;
    auto* fl = an_cmd->add_subcommand("flops", "FLOP requirement per field");
    fl_args.add_to(fl);
    fl_out.add_to(fl);
    fl->callback([&] { action = [&] { cmd_analyze_flops(fl_args, fl_out); }; });
    auto* io = an_cmd->add_subcommand("io", "value traffic per field");
    io_args.add_to(io);
    io_out.add_to(io);
    io->callback([&] { action = [&] { cmd_analyze_io(io_args, io_out); }; });
    std::string platforms = "data/platforms.json";
    std::vector<double> ais{1.0 / 6.0, 0.25, 0.5};
    auto* rf = an_cmd->add_subcommand("roofline", "attainable and price-normalized throughput");
    rf->add_option("--platforms", platforms, "platform JSON file");
    rf->add_option("--ai", ais, "arithmetic intensities in FLOP/byte");
    rf_out.add_to(rf);
    rf->callback([&] { action = [&] { cmd_analyze_roofline(platforms, ais, rf_out); }; });
    PipelineArgs pp;
    auto* pl = an_cmd->add_subcommand("pipeline", "period and latency with and without compression");
    pl->add_option("--transfer", pp.times.transfer_s, "uncompressed transfer time");
    pl->add_option("--compute", pp.times.compute_s, "compute time")->each([&](const std::string&) {
        pp.compute_given = true;
    });
    pl->add_option("--decode", pp.times.decode_s, "decode time");
    pl->add_option("--ratio", pp.ratio, "compression ratio");
    pl->add_option("--bytes", pp.bytes, "uncompressed bytes; derives transfer and decode times");
    pl->add_option("--bandwidth", pp.bandwidth, "interconnect bytes/s");
    pl->add_option("--decode-throughput", pp.decode_throughput, "decoded bytes/s");
    pp_out.add_to(pl);
    pl->callback([&] { action = [&] { cmd_analyze_pipeline(pp, pp_out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), 1);
    }

    try {
        if (action) action();
        return 0;
    } catch (const CorruptData& e) {
        return report_error(error_kind(e), e.what(), 2);
    } catch (const std::exception& e) {
        return report_error(error_kind(e), e.what(), 1);
    }
}
