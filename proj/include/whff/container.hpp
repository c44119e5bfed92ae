#pragma once

// Matrix container file ("WHFM"), little-endian:
//   magic "WHFM" | version u16 | kind u8 | element type u8 | rows u64 | cols u64
//   dense: rows*cols values, row-major
//   csr:   nnz u64 | (rows+1) x u64 offsets | nnz x u32 columns | nnz values
//   diag:  rows values

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>

#include "whff/matrix.hpp"

namespace whff {

inline constexpr std::uint16_t kContainerVersion = 1;

enum class ContainerKind : std::uint8_t { dense = 0, csr = 1, diagonal = 2 };
enum class ElementType : std::uint8_t { binary32 = 0, binary64 = 1 };

struct ContainerHeader {
    std::uint16_t version = kContainerVersion;
    ContainerKind kind = ContainerKind::dense;
    ElementType element = ElementType::binary32;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

using AnyMatrix = std::variant<DenseMatrix<float>, DenseMatrix<double>, CsrMatrix, DiagonalMatrix>;

void write_matrix(std::ostream& out, const DenseMatrix<float>& m);
void write_matrix(std::ostream& out, const DenseMatrix<double>& m);
void write_matrix(std::ostream& out, const CsrMatrix& m);
void write_matrix(std::ostream& out, const DiagonalMatrix& m);
/// Dense rows x 1 column vector.
void write_vector(std::ostream& out, std::span<const float> v);

ContainerHeader read_header(std::istream& in);
AnyMatrix read_matrix(std::istream& in);

template <typename M>
void save_matrix(const std::filesystem::path& path, const M& m);
void save_vector(const std::filesystem::path& path, std::span<const float> v);

AnyMatrix load_matrix(const std::filesystem::path& path);
DenseMatrix<float> load_dense(const std::filesystem::path& path);
CsrMatrix load_csr(const std::filesystem::path& path);
DiagonalMatrix load_diagonal(const std::filesystem::path& path);

} // namespace whff
