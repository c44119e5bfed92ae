#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "whff/analysis.hpp"
#include "whff/error.hpp"

using namespace whff;

namespace {

CostParams unit_params() {
    return {1, 1, 1, 1, 1, 1, 1, 1.0};
}

Platform platform(const std::string& name, double peak, double bandwidth, double price) {
    return {name, peak, peak / 2.0, bandwidth, price};
}

} // namespace

TEST_CASE("unit parameters cost nine FLOPs and nineteen values") {
    const auto c = flop_cost(unit_params());
    CHECK(c.total_flop == 9.0);
    CHECK(c.deformation_flop == 3.0);
    CHECK(c.thermal_flop == 6.0);
    // (1 + 1) * 1 * (2 + 3) + 3 * 1 * (1 + 1 + 1)
    CHECK(io_cost(unit_params()) == 19.0);
    CHECK(io_bandwidth(unit_params()) == 19.0 * 4.0 * 1000.0);

    auto twice_dark = unit_params();
    twice_dark.t_d = 2;
    CHECK(io_cost(twice_dark) == 3.0 * 5.0 + 2.0 * 9.0);
}

TEST_CASE("closed forms agree with loop-walking counts") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::uint64_t> small(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        const CostParams p{small(rng), small(rng), small(rng), small(rng), small(rng), small(rng), small(rng) - 1, 7.0};
        const oracle::CostShape c{p.T, p.S, p.M, p.nnz_a, p.nnz_b, p.t_l, p.t_d};
        CHECK(flop_cost(p, DeformationMultiplier::as_printed).total_flop == double(oracle::count_flops(c, false)));
        CHECK(flop_cost(p, DeformationMultiplier::light_steps).total_flop == double(oracle::count_flops(c, true)));
        CHECK(io_cost(p) == double(oracle::count_io(c)));
    }
}

TEST_CASE("costs scale linearly in their factors") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> dist(1, 1000);
    for (int trial = 0; trial < 100; ++trial) {
        const CostParams p{dist(rng), dist(rng), dist(rng), dist(rng) % 9 + 1, dist(rng) % 3 + 1, dist(rng) % 90 + 1,
                           dist(rng) % 90, 50.0};
        const auto base = flop_cost(p);

        auto twice_m = p;
        twice_m.M *= 2;
        CHECK(flop_cost(twice_m).deformation_flop == 2.0 * base.deformation_flop);
        CHECK(flop_cost(twice_m).thermal_flop == base.thermal_flop);

        auto twice_t = p;
        twice_t.T *= 2;
        CHECK(flop_cost(twice_t).thermal_flop == 2.0 * base.thermal_flop);
        CHECK(flop_cost(twice_t).deformation_flop == base.deformation_flop);

        auto twice_budget = p;
        twice_budget.budget_ms *= 2.0;
        CHECK(flop_cost(twice_budget).gflops_required == doctest::Approx(base.gflops_required / 2.0));
        CHECK(base.gflops_per_axis * 3.0 == doctest::Approx(base.gflops_required));
    }
}

TEST_CASE("published scan requirements") {
    const CostParams fast{370000, 256000, 378, 7, 1, 34, 36, 50.0};
    const auto f = flop_cost(fast, DeformationMultiplier::light_steps);
    CHECK(f.gflops_required == doctest::Approx(402.6).epsilon(1e-3));
    CHECK(std::abs(f.gflops_required / 398.7 - 1.0) <= 0.01);

    const CostParams slow{370000, 256000, 378, 7, 1, 80, 30, 80.0};
    const auto s = flop_cost(slow, DeformationMultiplier::light_steps);
    CHECK(s.gflops_required == doctest::Approx(588.2).epsilon(1e-3));
    CHECK(std::abs(s.gflops_required / 587.2 - 1.0) <= 0.02);
    CHECK(std::abs(s.gflops_per_axis / 195.0 - 1.0) <= 0.02);

    for (const auto& preset : cost_presets()) {
        const auto c = flop_cost(preset.params, preset.multiplier);
        CHECK(std::abs(c.gflops_required / preset.reference_gflops - 1.0) <= 0.02);
    }
    CHECK(cost_preset("paper-slow").params.t_l == 80);
    CHECK_THROWS_AS(cost_preset("paper-medium"), InvalidArgument);
}

TEST_CASE("deformation traffic lands in the hundreds of GB/s per axis") {
    // With a single mesh point the thermal term is negligible.
    auto p = cost_preset("paper-fast").params;
    p.T = 1;
    const double per_axis = io_bandwidth(p) / 3.0;
    CHECK(per_axis > 100e9);
    CHECK(per_axis < 1000e9);
    // Dense A and B dominate the full closed form.
    CHECK(io_bandwidth(cost_preset("paper-fast").params) > 1e3 * per_axis);
}

TEST_CASE("invalid cost parameters are rejected") {
    auto p = unit_params();
    p.S = 0;
    CHECK_THROWS_AS(flop_cost(p), InvalidArgument);
    p = unit_params();
    p.budget_ms = 0.0;
    CHECK_THROWS_AS(io_cost(p), InvalidArgument);
    CHECK(parse_deformation_multiplier("light-steps") == DeformationMultiplier::light_steps);
    CHECK_THROWS_AS(parse_deformation_multiplier("dark"), InvalidArgument);
}

TEST_CASE("roofline") {
    const auto p100 = platform("p100", 9.3e12, 732e9, 4500);
    CHECK(roofline_attainable(p100, 0.25) == doctest::Approx(183e9));
    CHECK(roofline_attainable(p100, std::numeric_limits<double>::infinity()) == 9.3e12);
    CHECK(roofline_attainable(p100, 1e6) == 9.3e12);
    CHECK_THROWS_AS(roofline_attainable(p100, 0.0), InvalidArgument);

    double previous = 0.0;
    for (double ai = 1.0 / 64; ai < 1024.0; ai *= 1.5) {
        const double v = roofline_attainable(p100, ai);
        CHECK(v >= previous);
        CHECK(v <= p100.peak_sp_flops);
        previous = v;
    }
}

TEST_CASE("normalized roofline") {
    const auto a = platform("a", 10e12, 500e9, 1000);
    auto b = a;
    b.price_usd = 2000;
    CHECK(normalized_roofline(b, 0.5) == doctest::Approx(normalized_roofline(a, 0.5) / 2.0));
    b.price_usd = 0.0;
    CHECK_THROWS_AS(normalized_roofline(b, 0.5), InvalidArgument);

    // Below both ridge points the ordering is that of bandwidth per dollar.
    const auto cheap = platform("cheap", 5e12, 300e9, 1000);
    const auto fast = platform("fast", 20e12, 900e9, 5000);
    for (double ai : {1.0 / 6, 0.25, 0.5}) {
        CHECK(roofline_attainable(fast, ai) > roofline_attainable(cheap, ai));
        CHECK(normalized_roofline(cheap, ai) > normalized_roofline(fast, ai));
    }
}

TEST_CASE("bundled platforms are bandwidth bound for matrix-vector products and show the price inversion") {
    const auto platforms = load_platforms(std::string(WHFF_DATA_DIR) + "/platforms.json");
    REQUIRE(platforms.size() >= 2);
    for (const auto& p : platforms) {
        for (double ai : {1.0 / 6, 0.5}) CHECK(roofline_attainable(p, ai) == doctest::Approx(ai * p.mem_bandwidth));
    }
    const Platform* p100 = nullptr;
    const Platform* v100 = nullptr;
    for (const auto& p : platforms) {
        if (p.name == "tesla-p100") p100 = &p;
        if (p.name == "tesla-v100") v100 = &p;
    }
    REQUIRE(p100);
    REQUIRE(v100);
    CHECK(v100->price_usd >= 2.0 * p100->price_usd);
    CHECK(roofline_attainable(*v100, 0.25) > roofline_attainable(*p100, 0.25));
    CHECK(normalized_roofline(*v100, 0.25) < normalized_roofline(*p100, 0.25));
}

TEST_CASE("platform files are validated") {
    CHECK_THROWS_AS(parse_platforms("{}"), InvalidArgument);
    CHECK_THROWS_AS(parse_platforms("[{\"name\": \"x\"}]"), InvalidArgument);
    CHECK_THROWS_AS(parse_platforms(R"([{"name":"x","peak_sp":1,"peak_dp":1,"bandwidth":-1,"price":1}])"),
                    InvalidArgument);
    CHECK_THROWS_AS(load_platforms("/nonexistent/platforms.json"), InvalidArgument);
    const auto ok = parse_platforms(R"([{"name":"x","peak_sp":2e12,"peak_dp":1e12,"bandwidth":1e11,"price":10}])");
    CHECK(ok.at(0).mem_bandwidth == 1e11);
}

TEST_CASE("deformation error") {
    const std::array<std::vector<float>, 3> ref{std::vector<float>{1, -2, 3}, std::vector<float>{0.5f, 0.25f},
                                                std::vector<float>{-4, 4}};
    const auto zero = qoi_error(ref, ref);
    CHECK(zero.worst() == 0.0);

    auto scaled = ref;
    for (auto& axis : scaled) {
        for (auto& v : axis) v = static_cast<float>(double(v) * 1.001);
    }
    const auto e = qoi_error(ref, scaled);
    for (std::size_t a = 0; a < 3; ++a) {
        CHECK(e.relative[a] == doctest::Approx(1e-3).epsilon(1e-3));
        CHECK(e.max_relative[a] == doctest::Approx(1e-3).epsilon(1e-3));
    }

    auto short_axis = ref;
    short_axis[1].pop_back();
    CHECK_THROWS_AS(qoi_error(ref, short_axis), InvalidArgument);
    auto zero_ref = ref;
    zero_ref[2] = {0.0f, 0.0f};
    CHECK_THROWS_AS(qoi_error(zero_ref, ref), InvalidArgument);
}
