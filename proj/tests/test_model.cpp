#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "whff/model.hpp"
#include "whff/schedule.hpp"

using namespace whff;

namespace {

ModelSpec tiny_spec() {
    ModelSpec s;
    s.grid_rows = 4;
    s.grid_cols = 4;
    s.S = 8;
    s.K = 16;
    s.M = 2;
    s.nnz_target = 5;
    s.seed = 1;
    return s;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("tiny model has the requested shapes and satisfies its invariants") {
    const auto m = generate_model(tiny_spec());
    CHECK(m.A.rows == 16);
    CHECK(m.A.cols == 16);
    for (std::size_t i = 0; i < m.A.rows; ++i) CHECK(m.A.row_nnz(i) <= 5);
    CHECK(m.B.size() == 16);
    CHECK(m.P.rows == 8);
    CHECK(m.P.cols == 16);
    for (auto a : kAxes) {
        CHECK(m.response(a).rows() == 16);
        CHECK(m.response(a).cols() == 8);
    }
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("generated models are stable across a range of specs") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ModelSpec s = tiny_spec();
        s.seed = seed;
        s.grid_rows = 3 + seed % 5;
        s.grid_cols = 4 + seed % 3;
        s.S = 1 + seed % (s.grid_rows * s.grid_cols);
        s.K = 8 + seed;
        s.M = 1 + seed % 3;
        s.fields = 1 + seed % 2;
        s.nnz_target = 1 + seed % 9;
        s.response = seed % 2 ? ResponseKind::smooth : ResponseKind::noise;
        const auto m = generate_model(s);
        CHECK_NOTHROW(m.validate());
        CHECK(m.field_count() == s.fields);
        for (std::size_t f = 0; f < m.field_count(); ++f) {
            CHECK(m.slit_count(f) >= 1);
            for (const auto& w : m.slit_windows[f]) CHECK(w.width() == s.M);
        }
    }
}

TEST_CASE("same spec and seed give bit-identical saved models") {
    const auto base = std::filesystem::temp_directory_path() / "whff_test_model";
    std::filesystem::remove_all(base);
    const auto m1 = save_model(generate_model(tiny_spec()), base / "a");
    const auto m2 = save_model(generate_model(tiny_spec()), base / "b");
    for (const char* name : {"A.whfm", "B.whfm", "P.whfm", "C_x.whfm", "C_y.whfm", "C_z.whfm"}) {
        CAPTURE(name);
        const auto a = file_bytes(base / "a" / name);
        CHECK(!a.empty());
        CHECK(a == file_bytes(base / "b" / name));
    }
    CHECK(load_model(m1) == generate_model(tiny_spec()));
    CHECK(load_model(m1) == load_model(m2));

    ModelSpec other = tiny_spec();
    other.seed = 2;
    CHECK_FALSE(generate_model(other) == generate_model(tiny_spec()));
    std::filesystem::remove_all(base);
}

TEST_CASE("field and slit windows nest") {
    const auto m = generate_model(tiny_spec());
    const auto field = fetch_field_submatrix(m, Axis::z, 0);
    CHECK(field.rows() == 8);
    CHECK(field.cols() == 8);
    const auto slit = fetch_slit_submatrix(field, m, 0, 1);
    CHECK(slit.rows() == 2);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(slit(0, j) == m.response(Axis::z)(2, j));
        CHECK(slit(1, j) == m.response(Axis::z)(3, j));
    }
    const auto second = fetch_field_submatrix(m, Axis::x, 1);
    CHECK(second(0, 0) == m.response(Axis::x)(8, 0));
}

TEST_CASE("unknown fields and slits raise lookup errors") {
    auto m = generate_model(tiny_spec());
    CHECK_THROWS_AS(fetch_field_submatrix(m, Axis::x, 2), LookupError);
    const auto field = fetch_field_submatrix(m, Axis::x, 0);
    CHECK_THROWS_AS(fetch_slit_submatrix(field, m, 0, 4), LookupError);

    // A slit window reaching past its field is a structural violation.
    m.slit_windows[0].push_back({7, 9});
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    CHECK_THROWS_AS(fetch_slit_submatrix(field, m, 0, 4), LookupError);
}

TEST_CASE("a full-size slit operator occupies 387,072,000 bytes") {
    CHECK(slit_matrix_bytes(378, 256000) == 387'072'000u);
    CHECK(static_cast<double>(slit_matrix_bytes(378, 256000)) / (1 << 20) == doctest::Approx(369.1).epsilon(1e-3));
}

TEST_CASE("oversized dense operators are refused with a size report") {
    ModelSpec s = tiny_spec();
    s.grid_rows = 608;
    s.grid_cols = 608;
    s.S = 256000;
    s.K = 378;
    s.M = 378;
    s.fields = 1;
    s.memory_cap_bytes = std::size_t{64} << 20;
    try {
        generate_model(s);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.requested() >= 3 * slit_matrix_bytes(378, 256000));
        CHECK(e.cap() == s.memory_cap_bytes);
        CHECK(std::string(e.what()).find("bytes") != std::string::npos);
    }
}

TEST_CASE("invalid specs are rejected") {
    ModelSpec s = tiny_spec();
    s.S = 17;
    CHECK_THROWS_AS(generate_model(s), InvalidArgument);
    s = tiny_spec();
    s.M = 9; // two fields of 8 rows cannot hold a 9-row slit
    CHECK_THROWS_AS(generate_model(s), InvalidArgument);
    s = tiny_spec();
    s.nnz_target = 0;
    CHECK_THROWS_AS(generate_model(s), InvalidArgument);
}

TEST_CASE("noise matrices are deterministic and bounded") {
    const auto a = generate_noise_matrix(5, 7, 3, 2.0);
    CHECK(a == generate_noise_matrix(5, 7, 3, 2.0));
    for (float v : a.values()) {
        CHECK(v >= -2.0f);
        CHECK(v <= 2.0f);
    }
}

TEST_CASE("scan defaults") {
    const auto fast = build_scan_schedule(ScanKind::fast, 1);
    CHECK(fast.fields[0].duration_ms() == 70);
    CHECK(fast.fields[0].time_budget_ms == 50.0);
    CHECK(fast.fields[0].light_ms == 34);
    const auto slow = build_scan_schedule(ScanKind::slow, 1);
    CHECK(slow.fields[0].duration_ms() == 110);
    CHECK(slow.fields[0].time_budget_ms == 80.0);
    CHECK(parse_scan_kind("slow") == ScanKind::slow);
    CHECK_THROWS_AS(parse_scan_kind("medium"), InvalidArgument);
}

TEST_CASE("steps expose light milliseconds first, each with a slit") {
    ScheduleOverrides o;
    o.light_ms = 4;
    o.dark_ms = 2;
    o.slits_per_field = 2;
    const auto s = build_scan_schedule(ScanKind::fast, 3, o);
    CHECK(s.fields.size() == 3);
    const auto steps = s.fields[1].steps();
    REQUIRE(steps.size() == 6);
    CHECK(steps[0].phase == Phase::light);
    CHECK(steps[0].slit == 0);
    CHECK(steps[3].phase == Phase::light);
    CHECK(steps[3].slit == 1);
    CHECK(steps[4].phase == Phase::dark);
    CHECK(steps[5].phase == Phase::dark);
}

TEST_CASE("model-aware schedules cycle through model fields and fit slit counts") {
    const auto m = generate_model(tiny_spec());
    const auto s = build_scan_schedule(m, ScanKind::fast, 5);
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        CHECK(s.fields[i].field_id == i % 2);
        for (auto slit : s.fields[i].light_slits) CHECK(slit < m.slit_count(s.fields[i].field_id));
    }
}

TEST_CASE("empty schedules are rejected") {
    ScheduleOverrides o;
    o.light_ms = 0;
    o.dark_ms = 0;
    CHECK_THROWS_AS(build_scan_schedule(ScanKind::fast, 1, o), InvalidArgument);
    CHECK_THROWS_AS(build_scan_schedule(ScanKind::fast, 0), InvalidArgument);
}
