#include "whff/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <utility>

#include <json.hpp>

#include "whff/container.hpp"

namespace whff {

namespace {

// Neighbour offsets in order of preference; a row keeps the first nnz_target-1 that fall inside the mesh.
constexpr std::array<std::pair<int, int>, 24> kStencil{{
    {0, -1}, {0, 1}, {-1, 0}, {1, 0},
    {-1, -1}, {-1, 1}, {1, -1}, {1, 1},
    {0, -2}, {0, 2}, {-2, 0}, {2, 0},
    {-1, -2}, {-1, 2}, {1, -2}, {1, 2}, {-2, -1}, {-2, 1}, {2, -1}, {2, 1},
    {-2, -2}, {-2, 2}, {2, -2}, {2, 2},
}};

void check_spec(const ModelSpec& s) {
    const auto T = s.grid_rows * s.grid_cols;
    if (s.grid_rows == 0 || s.grid_cols == 0 || T < 4) {
        throw InvalidArgument("generate_model: grid must hold at least 4 points");
    }
    if (s.S == 0 || s.S > T) {
        throw InvalidArgument("generate_model: need 1 <= S <= T (S=" + std::to_string(s.S) +
                              ", T=" + std::to_string(T) + ")");
    }
    if (s.K == 0 || s.M == 0 || s.M > s.K) {
        throw InvalidArgument("generate_model: need 1 <= M <= K");
    }
    if (s.nnz_target == 0) {
        throw InvalidArgument("generate_model: nnz_target must be at least 1");
    }
    if (s.fields == 0 || s.K / s.fields < s.M) {
        throw InvalidArgument("generate_model: each of " + std::to_string(s.fields) +
                              " field windows must hold at least one slit of " + std::to_string(s.M) + " rows");
    }
    if (!(s.response_scale > 0.0) || !std::isfinite(s.response_scale)) {
        throw InvalidArgument("generate_model: response_scale must be positive");
    }
}

/// Factor S into a coarse grid whose aspect ratio follows the mesh.
std::pair<std::size_t, std::size_t> coarse_grid(std::size_t S, std::size_t rows, std::size_t cols) {
    const double ideal = std::sqrt(static_cast<double>(S) * static_cast<double>(rows) / static_cast<double>(cols));
    std::size_t best = 1;
    double best_gap = std::abs(1.0 - ideal);
    for (std::size_t d = 1; d * d <= S; ++d) {
        if (S % d != 0) continue;
        for (std::size_t cand : {d, S / d}) {
            const double gap = std::abs(static_cast<double>(cand) - ideal);
            if (gap < best_gap) {
                best = cand;
                best_gap = gap;
            }
        }
    }
    return {best, S / best};
}

CsrMatrix build_thermal_operator(const ModelSpec& s, UniformSource& rng, std::vector<float>& leak) {
    const auto rows = s.grid_rows, cols = s.grid_cols, T = rows * cols;
    const std::size_t neighbours = std::min<std::size_t>(s.nnz_target - 1, kStencil.size());

    CsrMatrix A;
    A.rows = A.cols = T;
    A.row_offsets.reserve(T + 1);
    leak.resize(T);
    std::vector<std::pair<std::uint32_t, float>> entries;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const auto self = static_cast<std::uint32_t>(i * cols + j);
            const double diffusivity = rng.uniform(0.10, 0.20);
            const float gamma = static_cast<float>(rng.uniform(0.01, 0.04));
            entries.clear();
            double off_sum = 0.0;
            for (std::size_t n = 0; n < neighbours; ++n) {
                const auto ni = static_cast<long>(i) + kStencil[n].first;
                const auto nj = static_cast<long>(j) + kStencil[n].second;
                if (ni < 0 || nj < 0 || ni >= static_cast<long>(rows) || nj >= static_cast<long>(cols)) continue;
                const auto w = static_cast<float>(diffusivity / static_cast<double>(std::max<std::size_t>(neighbours, 1)));
                entries.emplace_back(static_cast<std::uint32_t>(ni * static_cast<long>(cols) + nj), w);
                off_sum += w;
            }
            // Row absolute sum plus the input weight stays at or below one.
            auto diag = static_cast<float>(1.0 - static_cast<double>(gamma) - off_sum);
            while (static_cast<double>(diag) + off_sum + static_cast<double>(gamma) > 1.0) {
                diag = std::nextafter(diag, 0.0f);
            }
            entries.emplace_back(self, diag);
            std::sort(entries.begin(), entries.end());
            for (const auto& [c, v] : entries) {
                A.col_indices.push_back(c);
                A.values.push_back(v);
            }
            A.row_offsets.push_back(A.values.size());
            leak[self] = gamma;
        }
    }
    return A;
}

CsrMatrix build_interpolation(const ModelSpec& s) {
    const auto rows = s.grid_rows, cols = s.grid_cols;
    const auto [sr, sc] = coarse_grid(s.S, rows, cols);
    CsrMatrix P;
    P.rows = s.S;
    P.cols = rows * cols;
    P.row_offsets.reserve(s.S + 1);

    auto axis_weights = [](std::size_t a, std::size_t coarse, std::size_t fine) {
        double f = (static_cast<double>(a) + 0.5) / static_cast<double>(coarse) * static_cast<double>(fine) - 0.5;
        f = std::clamp(f, 0.0, static_cast<double>(fine - 1));
        const auto lo = static_cast<std::size_t>(std::floor(f));
        const auto hi = std::min(lo + 1, fine - 1);
        const double w = f - static_cast<double>(lo);
        return std::array<std::pair<std::size_t, double>, 2>{{{lo, 1.0 - w}, {hi, w}}};
    };

    std::map<std::uint32_t, double> row;
    for (std::size_t a = 0; a < sr; ++a) {
        const auto wy = axis_weights(a, sr, rows);
        for (std::size_t b = 0; b < sc; ++b) {
            const auto wx = axis_weights(b, sc, cols);
            row.clear();
            for (const auto& [iy, py] : wy) {
                for (const auto& [ix, px] : wx) {
                    const double w = py * px;
                    if (w > 0.0) row[static_cast<std::uint32_t>(iy * cols + ix)] += w;
                }
            }
            for (const auto& [c, w] : row) {
                P.col_indices.push_back(c);
                P.values.push_back(static_cast<float>(w));
            }
            P.row_offsets.push_back(P.values.size());
        }
    }
    return P;
}

struct RowCentre {
    double y, x, sigma, amplitude;
};

std::vector<RowCentre> response_centres(const ModelSpec& s, UniformSource& rng) {
    const std::size_t L = s.K / s.fields;
    const std::size_t lc = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(L) / static_cast<double>(s.fields)))));
    const std::size_t lr = (L + lc - 1) / lc;

    // Kernel width and strength vary smoothly over the wafer, so neighbouring rows stay correlated.
    constexpr double kTwoPi = 6.283185307179586;
    const double sfy = rng.uniform(0.5, 1.5), sfx = rng.uniform(0.5, 1.5), sphase = rng.uniform(0.0, kTwoPi);
    const double afy = rng.uniform(0.5, 1.5), afx = rng.uniform(0.5, 1.5), aphase = rng.uniform(0.0, kTwoPi);
    const auto centre = [&](double cy, double cx) {
        const double sigma = 0.15 * (1.0 + 0.15 * std::sin(kTwoPi * (sfy * cy + sfx * cx) + sphase));
        const double amp = s.response_scale * (0.75 + 0.25 * std::sin(kTwoPi * (afy * cy + afx * cx) + aphase));
        return RowCentre{cy, cx, sigma, amp};
    };

    std::vector<RowCentre> out(s.K);
    for (std::size_t r = 0; r < s.K; ++r) {
        const std::size_t f = r / L;
        if (f < s.fields) {
            // Fields are vertical bands of the wafer; rows inside a band run in scan order.
            const std::size_t local = r % L;
            const double cy = (static_cast<double>(local / lc) + 0.5) / static_cast<double>(lr);
            const double cx =
                (static_cast<double>(f) + (static_cast<double>(local % lc) + 0.5) / static_cast<double>(lc)) /
                static_cast<double>(s.fields);
            out[r] = centre(cy, cx);
        } else {
            const double cy = rng.next();
            out[r] = centre(cy, rng.next());
        }
    }
    return out;
}

std::array<DenseMatrix<float>, 3> build_response(const ModelSpec& s, UniformSource& rng) {
    std::array<DenseMatrix<float>, 3> C;
    if (s.response == ResponseKind::noise) {
        for (std::size_t a = 0; a < 3; ++a) {
            C[a] = generate_noise_matrix(s.K, s.S, rng.next_u64(), s.response_scale);
        }
        return C;
    }
    const auto [sr, sc] = coarse_grid(s.S, s.grid_rows, s.grid_cols);
    const auto centres = response_centres(s, rng);
    for (auto& m : C) m = DenseMatrix<float>(s.K, s.S);
    for (std::size_t r = 0; r < s.K; ++r) {
        const auto& c = centres[r];
        const double inv2s2 = 1.0 / (2.0 * c.sigma * c.sigma);
        for (std::size_t a = 0; a < sr; ++a) {
            const double dy = (static_cast<double>(a) + 0.5) / static_cast<double>(sr) - c.y;
            for (std::size_t b = 0; b < sc; ++b) {
                const double dx = (static_cast<double>(b) + 0.5) / static_cast<double>(sc) - c.x;
                const double g = c.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
                const std::size_t col = a * sc + b;
                // In-plane response follows the gradient of the out-of-plane bump.
                C[0](r, col) = static_cast<float>(g * dx / c.sigma);
                C[1](r, col) = static_cast<float>(g * dy / c.sigma);
                C[2](r, col) = static_cast<float>(g);
            }
        }
    }
    return C;
}

void check_window_list(const std::vector<RowWindow>& ws, std::size_t lo, std::size_t hi, const std::string& what) {
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (ws[i].first >= ws[i].last || ws[i].first < lo || ws[i].last > hi) {
            throw InvalidArgument(what + " window " + std::to_string(i) + " [" + std::to_string(ws[i].first) + ", " +
                                  std::to_string(ws[i].last) + ") outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + ")");
        }
    }
}

} // namespace

std::uint64_t model_footprint_bytes(const ModelSpec& s) {
    const std::uint64_t T = s.grid_rows * s.grid_cols;
    const std::uint64_t dense = 3 * static_cast<std::uint64_t>(s.K) * s.S * 4;
    const std::uint64_t thermal = T * std::min<std::uint64_t>(s.nnz_target, kStencil.size() + 1) * 8 + (T + 1) * 8 + T * 4;
    const std::uint64_t interp = static_cast<std::uint64_t>(s.S) * 4 * 8 + (s.S + 1) * 8;
    return dense + thermal + interp;
}

WaferModel generate_model(const ModelSpec& spec) {
    check_spec(spec);
    const auto bytes = model_footprint_bytes(spec);
    if (bytes > spec.memory_cap_bytes) {
        throw CapacityError(bytes, spec.memory_cap_bytes,
                            "generate_model: 3 x " + std::to_string(spec.K) + " x " + std::to_string(spec.S) +
                                " binary32 deformation operators");
    }

    UniformSource rng(spec.seed);
    WaferModel m;
    m.grid_rows = spec.grid_rows;
    m.grid_cols = spec.grid_cols;
    m.A = build_thermal_operator(spec, rng, m.B.diagonal);
    m.P = build_interpolation(spec);
    m.C = build_response(spec, rng);

    const std::size_t L = spec.K / spec.fields;
    const std::size_t slits = L / spec.M;
    for (std::size_t f = 0; f < spec.fields; ++f) {
        m.field_windows.push_back({f * L, (f + 1) * L});
        std::vector<RowWindow> sw;
        for (std::size_t s = 0; s < slits; ++s) sw.push_back({s * spec.M, (s + 1) * spec.M});
        m.slit_windows.push_back(std::move(sw));
    }
    return m;
}

DenseMatrix<float> generate_noise_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
    UniformSource rng(seed);
    DenseMatrix<float> out(rows, cols);
    for (auto& v : out.values()) v = static_cast<float>(rng.uniform(-scale, scale));
    return out;
}

void WaferModel::validate() const {
    const auto T = temperature_points();
    if (A.rows != T || A.cols != T) throw InvalidArgument("model: A must be T x T");
    A.validate();
    for (std::size_t i = 0; i < T; ++i) {
        if (A.row_nnz(i) == 0) throw InvalidArgument("model: A row " + std::to_string(i) + " is empty");
        double abs_sum = 0.0;
        for (auto k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) abs_sum += std::abs(double(A.values[k]));
        if (abs_sum > 1.0) throw InvalidArgument("model: A row " + std::to_string(i) + " absolute sum exceeds 1");
    }
    if (B.size() != T) throw InvalidArgument("model: B must hold T diagonal values");
    if (P.cols != T) throw InvalidArgument("model: P must have T columns");
    P.validate();
    for (std::size_t i = 0; i < P.rows; ++i) {
        double sum = 0.0;
        for (auto k = P.row_offsets[i]; k < P.row_offsets[i + 1]; ++k) {
            if (P.values[k] < 0.0f) throw InvalidArgument("model: P has a negative weight in row " + std::to_string(i));
            sum += P.values[k];
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw InvalidArgument("model: P row " + std::to_string(i) + " does not sum to one");
        }
    }
    for (const auto& c : C) {
        if (c.rows() != C[0].rows() || c.cols() != P.rows) {
            throw InvalidArgument("model: every C must be K x S");
        }
    }
    if (slit_windows.size() != field_windows.size()) {
        throw InvalidArgument("model: one slit list per field required");
    }
    check_window_list(field_windows, 0, deformation_points(), "field");
    for (std::size_t f = 0; f < field_windows.size(); ++f) {
        check_window_list(slit_windows[f], 0, field_windows[f].width(), "field " + std::to_string(f) + " slit");
    }
}

MatrixView<const float> fetch_field_submatrix(const WaferModel& model, Axis axis, std::size_t field) {
    if (field >= model.field_windows.size()) {
        throw LookupError("unknown field " + std::to_string(field));
    }
    const auto& w = model.field_windows[field];
    return model.response(axis).view().row_range(w.first, w.width());
}

MatrixView<const float> fetch_slit_submatrix(MatrixView<const float> field_view, const WaferModel& model,
                                             std::size_t field, std::size_t slit) {
    if (field >= model.slit_windows.size() || slit >= model.slit_windows[field].size()) {
        throw LookupError("unknown slit " + std::to_string(slit) + " of field " + std::to_string(field));
    }
    const auto& w = model.slit_windows[field][slit];
    return field_view.row_range(w.first, w.width());
}

namespace {

nlohmann::json windows_to_json(const std::vector<RowWindow>& ws) {
    auto out = nlohmann::json::array();
    for (const auto& w : ws) out.push_back({w.first, w.last});
    return out;
}

std::vector<RowWindow> windows_from_json(const nlohmann::json& j) {
    std::vector<RowWindow> out;
    for (const auto& w : j) out.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>()});
    return out;
}

} // namespace

std::filesystem::path save_model(const WaferModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_matrix(dir / "A.whfm", model.A);
    save_matrix(dir / "B.whfm", model.B);
    save_matrix(dir / "P.whfm", model.P);
    nlohmann::json files = {{"A", "A.whfm"}, {"B", "B.whfm"}, {"P", "P.whfm"}};
    for (auto a : kAxes) {
        const std::string name = std::string("C_") + axis_name(a) + ".whfm";
        save_matrix(dir / name, model.response(a));
        files[std::string("C_") + axis_name(a)] = name;
    }
    nlohmann::json slits = nlohmann::json::array();
    for (const auto& sw : model.slit_windows) slits.push_back(windows_to_json(sw));

    nlohmann::json manifest = {
        {"format", "whff-model"},
        {"version", 1},
        {"grid", {model.grid_rows, model.grid_cols}},
        {"T", model.temperature_points()},
        {"S", model.interpolated_points()},
        {"K", model.deformation_points()},
        {"files", files},
        {"field_windows", windows_to_json(model.field_windows)},
        {"slit_windows", slits},
    };
    const auto path = dir / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw Error("save_model: cannot write " + path.string());
    return path;
}

WaferModel load_model(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw InvalidArgument("cannot open model manifest " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData(CorruptData::Kind::bad_header, "model manifest: " + std::string(e.what()));
    }
    const auto dir = manifest_path.parent_path();
    try {
        if (j.at("format") != "whff-model") {
            throw CorruptData(CorruptData::Kind::bad_header, "model manifest: unexpected format tag");
        }
        WaferModel m;
        m.grid_rows = j.at("grid").at(0).get<std::size_t>();
        m.grid_cols = j.at("grid").at(1).get<std::size_t>();
        const auto& files = j.at("files");
        m.A = load_csr(dir / files.at("A").get<std::string>());
        m.B = load_diagonal(dir / files.at("B").get<std::string>());
        m.P = load_csr(dir / files.at("P").get<std::string>());
        for (auto a : kAxes) {
            m.C[static_cast<std::size_t>(a)] =
                load_dense(dir / files.at(std::string("C_") + axis_name(a)).get<std::string>());
        }
        m.field_windows = windows_from_json(j.at("field_windows"));
        for (const auto& sw : j.at("slit_windows")) m.slit_windows.push_back(windows_from_json(sw));
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptData(CorruptData::Kind::bad_header, "model manifest: " + std::string(e.what()));
    }
}

} // namespace whff
