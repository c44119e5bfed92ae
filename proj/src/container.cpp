#include "whff/container.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <limits>

#include "whff/byteio.hpp"

namespace whff {

namespace {

constexpr std::array<char, 4> kMagic{'W', 'H', 'F', 'M'};

// Upper bound on element counts accepted from a header before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 36;

void put_header(std::ostream& out, const ContainerHeader& h) {
    out.write(kMagic.data(), kMagic.size());
    byteio::put_uint<std::uint16_t>(out, h.version);
    byteio::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(h.kind));
    byteio::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(h.element));
    byteio::put_uint<std::uint64_t>(out, h.rows);
    byteio::put_uint<std::uint64_t>(out, h.cols);
}

template <typename T>
std::vector<T> get_values(std::istream& in, std::uint64_t count) {
    if (count > kMaxElements) {
        throw CorruptData(CorruptData::Kind::bad_header, "matrix container: element count too large");
    }
    std::vector<T> out(count);
    for (auto& v : out) {
        if constexpr (std::is_same_v<T, float>) {
            v = byteio::get_f32(in, "matrix values");
        } else {
            v = byteio::get_f64(in, "matrix values");
        }
    }
    return out;
}

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kMaxElements / a) {
        throw CorruptData(CorruptData::Kind::bad_header, "matrix container: dimensions too large");
    }
    return a * b;
}

void check_stream(const std::ostream& out) {
    if (!out) {
        throw Error("matrix container: write failed");
    }
}

} // namespace

void CsrMatrix::validate() const {
    if (row_offsets.size() != rows + 1 || row_offsets.front() != 0 || row_offsets.back() != values.size() ||
        col_indices.size() != values.size()) {
        throw InvalidArgument("CsrMatrix: inconsistent offsets or array lengths");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_offsets[i] > row_offsets[i + 1]) {
            throw InvalidArgument("CsrMatrix: row offsets decrease at row " + std::to_string(i));
        }
        for (auto k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
            if (col_indices[k] >= cols) {
                throw InvalidArgument("CsrMatrix: column index out of range in row " + std::to_string(i));
            }
            if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1]) {
                throw InvalidArgument("CsrMatrix: column indices not strictly increasing in row " +
                                      std::to_string(i));
            }
        }
    }
}

void write_matrix(std::ostream& out, const DenseMatrix<float>& m) {
    put_header(out, {kContainerVersion, ContainerKind::dense, ElementType::binary32, m.rows(), m.cols()});
    for (float v : m.values()) byteio::put_f32(out, v);
    check_stream(out);
}

void write_matrix(std::ostream& out, const DenseMatrix<double>& m) {
    put_header(out, {kContainerVersion, ContainerKind::dense, ElementType::binary64, m.rows(), m.cols()});
    for (double v : m.values()) byteio::put_f64(out, v);
    check_stream(out);
}

void write_matrix(std::ostream& out, const CsrMatrix& m) {
    put_header(out, {kContainerVersion, ContainerKind::csr, ElementType::binary32, m.rows, m.cols});
    byteio::put_uint<std::uint64_t>(out, m.nnz());
    for (auto off : m.row_offsets) byteio::put_uint<std::uint64_t>(out, off);
    for (auto c : m.col_indices) byteio::put_uint<std::uint32_t>(out, c);
    for (float v : m.values) byteio::put_f32(out, v);
    check_stream(out);
}

void write_matrix(std::ostream& out, const DiagonalMatrix& m) {
    put_header(out, {kContainerVersion, ContainerKind::diagonal, ElementType::binary32, m.size(), m.size()});
    for (float v : m.diagonal) byteio::put_f32(out, v);
    check_stream(out);
}

void write_vector(std::ostream& out, std::span<const float> v) {
    put_header(out, {kContainerVersion, ContainerKind::dense, ElementType::binary32, v.size(), 1});
    for (float x : v) byteio::put_f32(out, x);
    check_stream(out);
}

ContainerHeader read_header(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4) {
        throw CorruptData(CorruptData::Kind::truncated, "matrix container: missing magic");
    }
    if (magic != kMagic) {
        throw CorruptData(CorruptData::Kind::bad_magic, "matrix container: bad magic");
    }
    ContainerHeader h;
    h.version = byteio::get_uint<std::uint16_t>(in, "version");
    if (h.version != kContainerVersion) {
        throw CorruptData(CorruptData::Kind::bad_header,
                          "matrix container: unsupported version " + std::to_string(h.version));
    }
    auto kind = byteio::get_uint<std::uint8_t>(in, "kind");
    auto elem = byteio::get_uint<std::uint8_t>(in, "element type");
    if (kind > 2 || elem > 1) {
        throw CorruptData(CorruptData::Kind::bad_header, "matrix container: unknown kind or element type");
    }
    h.kind = static_cast<ContainerKind>(kind);
    h.element = static_cast<ElementType>(elem);
    h.rows = byteio::get_uint<std::uint64_t>(in, "rows");
    h.cols = byteio::get_uint<std::uint64_t>(in, "cols");
    return h;
}

AnyMatrix read_matrix(std::istream& in) {
    const auto h = read_header(in);
    switch (h.kind) {
    case ContainerKind::dense: {
        const auto n = checked_product(h.rows, h.cols);
        if (h.element == ElementType::binary32) {
            return DenseMatrix<float>(h.rows, h.cols, get_values<float>(in, n));
        }
        return DenseMatrix<double>(h.rows, h.cols, get_values<double>(in, n));
    }
    case ContainerKind::csr: {
        if (h.element != ElementType::binary32) {
            throw CorruptData(CorruptData::Kind::bad_header, "matrix container: csr values must be binary32");
        }
        CsrMatrix m;
        m.rows = h.rows;
        m.cols = h.cols;
        const auto nnz = byteio::get_uint<std::uint64_t>(in, "nnz");
        if (h.rows >= kMaxElements || nnz > kMaxElements) {
            throw CorruptData(CorruptData::Kind::bad_header, "matrix container: csr sizes too large");
        }
        m.row_offsets.resize(h.rows + 1);
        for (auto& off : m.row_offsets) off = byteio::get_uint<std::uint64_t>(in, "row offsets");
        m.col_indices.resize(nnz);
        for (auto& c : m.col_indices) c = byteio::get_uint<std::uint32_t>(in, "column indices");
        m.values = get_values<float>(in, nnz);
        try {
            m.validate();
        } catch (const InvalidArgument& e) {
            throw CorruptData(CorruptData::Kind::bad_offset, std::string("matrix container: ") + e.what());
        }
        return m;
    }
    case ContainerKind::diagonal: {
        if (h.element != ElementType::binary32 || h.rows != h.cols) {
            throw CorruptData(CorruptData::Kind::bad_header, "matrix container: malformed diagonal header");
        }
        return DiagonalMatrix{get_values<float>(in, h.rows)};
    }
    }
    throw CorruptData(CorruptData::Kind::bad_header, "matrix container: unknown kind");
}

template <typename M>
void save_matrix(const std::filesystem::path& path, const M& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InvalidArgument("cannot open " + path.string() + " for writing");
    }
    write_matrix(out, m);
}

template void save_matrix(const std::filesystem::path&, const DenseMatrix<float>&);
template void save_matrix(const std::filesystem::path&, const DenseMatrix<double>&);
template void save_matrix(const std::filesystem::path&, const CsrMatrix&);
template void save_matrix(const std::filesystem::path&, const DiagonalMatrix&);

void save_vector(const std::filesystem::path& path, std::span<const float> v) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InvalidArgument("cannot open " + path.string() + " for writing");
    }
    write_vector(out, v);
}

AnyMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open " + path.string());
    }
    return read_matrix(in);
}

namespace {
template <typename M>
M load_as(const std::filesystem::path& path, const char* expected) {
    auto any = load_matrix(path);
    if (auto* m = std::get_if<M>(&any)) {
        return std::move(*m);
    }
    throw InvalidArgument(path.string() + ": expected " + expected + " matrix");
}
} // namespace

DenseMatrix<float> load_dense(const std::filesystem::path& path) {
    return load_as<DenseMatrix<float>>(path, "dense binary32");
}
CsrMatrix load_csr(const std::filesystem::path& path) { return load_as<CsrMatrix>(path, "csr"); }
DiagonalMatrix load_diagonal(const std::filesystem::path& path) {
    return load_as<DiagonalMatrix>(path, "diagonal");
}

} // namespace whff
