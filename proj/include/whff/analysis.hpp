#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace whff {

/// Per-field cost model inputs. nnz_a and nnz_b are nonzeros per row.
struct CostParams {
    std::uint64_t T = 1;
    std::uint64_t S = 1;
    std::uint64_t M = 1;
    std::uint64_t nnz_a = 1;
    std::uint64_t nnz_b = 1;
    std::uint64_t t_l = 1;
    std::uint64_t t_d = 0;
    double budget_ms = 1.0;

    /// Throws InvalidArgument unless every count is positive (t_d may be 0).
    void validate() const;
};

/// Which millisecond count multiplies the deformation term of the FLOP cost.
///   as_printed  - dark milliseconds, the closed form as usually quoted
///   light_steps - light milliseconds, the steps that actually evaluate deformations
enum class DeformationMultiplier { as_printed, light_steps };

const char* to_string(DeformationMultiplier m);
DeformationMultiplier parse_deformation_multiplier(const std::string& s);

struct FlopCost {
    double total_flop = 0.0;
    double deformation_flop = 0.0;
    double thermal_flop = 0.0;
    double gflops_required = 0.0;          // total / budget
    double gflops_per_axis = 0.0;          // gflops_required / 3
};

/// 3 t_x M (2S - 1) + T (t_l + t_d)(2 nnz_a + 2 nnz_b - 1).
FlopCost flop_cost(const CostParams& p, DeformationMultiplier mult = DeformationMultiplier::as_printed);

/// Values moved per field: (t_l + t_d) T (2T + 3) + 3 t_d (M S + S + M).
double io_cost(const CostParams& p);
/// io_cost as bytes/s of binary32 values over the budget.
double io_bandwidth(const CostParams& p);

struct Platform {
    std::string name;
    double peak_sp_flops = 0.0;
    double peak_dp_flops = 0.0;
    double mem_bandwidth = 0.0; // bytes/s
    double price_usd = 0.0;

    void validate() const;
};

/// Reads a JSON array of {name, peak_sp, peak_dp, bandwidth, price}.
std::vector<Platform> load_platforms(const std::filesystem::path& path);
std::vector<Platform> parse_platforms(const std::string& json_text);

/// min(peak_sp_flops, ai * mem_bandwidth); ai may be +inf.
double roofline_attainable(const Platform& pl, double arithmetic_intensity);
/// roofline_attainable / price_usd.
double normalized_roofline(const Platform& pl, double arithmetic_intensity);

struct QoiError {
    std::array<double, 3> relative{};     // ||ref - test||_2 / ||ref||_2
    std::array<double, 3> max_relative{}; // max |ref - test| / max |ref|
    double worst() const noexcept;
};

/// Per-axis deformation error. Throws InvalidArgument on shape mismatch or a zero reference.
QoiError qoi_error(const std::array<std::vector<float>, 3>& reference, const std::array<std::vector<float>, 3>& test);

struct CostPreset {
    std::string name;
    CostParams params;
    DeformationMultiplier multiplier = DeformationMultiplier::light_steps;
    double reference_gflops = 0.0;         // published requirement
    double reference_gflops_per_axis = 0.0;
};

/// "paper-fast" and "paper-slow".
const std::vector<CostPreset>& cost_presets();
const CostPreset& cost_preset(const std::string& name);

} // namespace whff
