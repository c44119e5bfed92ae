#include "whff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "whff/error.hpp"

namespace whff {

void CostParams::validate() const {
    if (T == 0 || S == 0 || M == 0 || nnz_a == 0 || nnz_b == 0 || t_l == 0) {
        throw InvalidArgument("cost parameters: T, S, M, nnz_a, nnz_b and t_l must be positive");
    }
    if (!(budget_ms > 0.0) || !std::isfinite(budget_ms)) throw InvalidArgument("cost parameters: budget must be positive");
}

const char* to_string(DeformationMultiplier m) {
    return m == DeformationMultiplier::as_printed ? "as-printed" : "light-steps";
}

DeformationMultiplier parse_deformation_multiplier(const std::string& s) {
    if (s == "as-printed") return DeformationMultiplier::as_printed;
    if (s == "light-steps") return DeformationMultiplier::light_steps;
    throw InvalidArgument("unknown deformation multiplier '" + s + "' (expected as-printed or light-steps)");
}

FlopCost flop_cost(const CostParams& p, DeformationMultiplier mult) {
    p.validate();
    const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    const double steps_with_deformation = mult == DeformationMultiplier::as_printed ? d(p.t_d) : d(p.t_l);
    FlopCost c;
    c.deformation_flop = 3.0 * steps_with_deformation * d(p.M) * (2.0 * d(p.S) - 1.0);
    c.thermal_flop = d(p.T) * d(p.t_l + p.t_d) * (2.0 * d(p.nnz_a) + 2.0 * d(p.nnz_b) - 1.0);
    c.total_flop = c.deformation_flop + c.thermal_flop;
    c.gflops_required = c.total_flop / (p.budget_ms / 1000.0) / 1e9;
    c.gflops_per_axis = c.gflops_required / 3.0;
    return c;
}

double io_cost(const CostParams& p) {
    p.validate();
    const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    return d(p.t_l + p.t_d) * d(p.T) * (2.0 * d(p.T) + 3.0) + 3.0 * d(p.t_d) * (d(p.M) * d(p.S) + d(p.S) + d(p.M));
}

double io_bandwidth(const CostParams& p) { return io_cost(p) * 4.0 / (p.budget_ms / 1000.0); }

void Platform::validate() const {
    if (name.empty()) throw InvalidArgument("platform: name required");
    for (double v : {peak_sp_flops, peak_dp_flops, mem_bandwidth, price_usd}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("platform " + name + ": values must be positive");
    }
}

std::vector<Platform> parse_platforms(const std::string& json_text) {
    std::vector<Platform> out;
    try {
        const auto j = nlohmann::json::parse(json_text);
        if (!j.is_array()) throw InvalidArgument("platform file: expected a JSON array");
        for (const auto& e : j) {
            Platform p{e.at("name").get<std::string>(), e.at("peak_sp").get<double>(), e.at("peak_dp").get<double>(),
                       e.at("bandwidth").get<double>(), e.at("price").get<double>()};
            p.validate();
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("platform file: ") + e.what());
    }
    return out;
}

std::vector<Platform> load_platforms(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_platforms(ss.str());
}

double roofline_attainable(const Platform& pl, double ai) {
    if (!(ai > 0.0)) throw InvalidArgument("roofline: arithmetic intensity must be positive");
    if (std::isinf(ai)) return pl.peak_sp_flops;
    return std::min(pl.peak_sp_flops, ai * pl.mem_bandwidth);
}

double normalized_roofline(const Platform& pl, double ai) {
    if (!(pl.price_usd > 0.0)) throw InvalidArgument("roofline: platform " + pl.name + " has no positive price");
    return roofline_attainable(pl, ai) / pl.price_usd;
}

double QoiError::worst() const noexcept { return std::max({relative[0], relative[1], relative[2]}); }

QoiError qoi_error(const std::array<std::vector<float>, 3>& reference, const std::array<std::vector<float>, 3>& test) {
    QoiError e;
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& r = reference[a];
        const auto& t = test[a];
        if (r.size() != t.size()) throw InvalidArgument("qoi_error: axis " + std::to_string(a) + " lengths differ");
        double num = 0.0, den = 0.0, worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double diff = static_cast<double>(r[i]) - static_cast<double>(t[i]);
            num += diff * diff;
            den += static_cast<double>(r[i]) * static_cast<double>(r[i]);
            worst = std::max(worst, std::abs(diff));
            scale = std::max(scale, std::abs(static_cast<double>(r[i])));
        }
        if (den == 0.0) throw InvalidArgument("qoi_error: reference deformation of axis " + std::to_string(a) + " is zero");
        e.relative[a] = std::sqrt(num / den);
        e.max_relative[a] = worst / scale;
    }
    return e;
}

const std::vector<CostPreset>& cost_presets() {
    // Mesh and operator sizes reproduce the published per-field requirements
    // when deformations are charged to light milliseconds.
    static const std::vector<CostPreset> presets{
        {"paper-fast", {370000, 256000, 378, 7, 1, 34, 36, 50.0}, DeformationMultiplier::light_steps, 398.7, 150.0},
        {"paper-slow", {370000, 256000, 378, 7, 1, 80, 30, 80.0}, DeformationMultiplier::light_steps, 587.2, 195.0},
    };
    return presets;
}

const CostPreset& cost_preset(const std::string& name) {
    for (const auto& p : cost_presets()) {
        if (p.name == name) return p;
    }
    throw InvalidArgument("unknown preset '" + name + "' (expected paper-fast or paper-slow)");
}

} // namespace whff
