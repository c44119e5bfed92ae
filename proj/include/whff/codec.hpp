#pragma once

// Block transform codec for 2D binary32 arrays.
//
// The array is cut into 4x4 blocks (edge blocks replicate their last row and
// column). Each block is converted to 30-bit fixed point relative to its
// largest exponent, decorrelated with an integer lifting transform along rows
// and columns, reordered by total sequency, mapped to negabinary and written
// as bit planes from the most significant down, with group-tested run-length
// coding of each plane. The mode decides where the plane sequence is cut:
//
//   FixedRate{b}       exactly 16*b bits per block
//   FixedPrecision{p}  the top p of 32 planes
//   FixedAccuracy{t}   enough planes for |x - x'| <= t on every value of the
//                      block; the encoder decodes each candidate and adds
//                      planes until the bound holds, falling back to storing
//                      the block verbatim. t = 0 therefore reproduces the
//                      input bit for bit.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "whff/matrix.hpp"

namespace whff {

struct FixedRate {
    unsigned bits_per_value = 8; // 1..32
    bool operator==(const FixedRate&) const = default;
};
struct FixedPrecision {
    unsigned planes = 16; // 1..32
    bool operator==(const FixedPrecision&) const = default;
};
struct FixedAccuracy {
    double tolerance = 0.0; // >= 0; 0 selects lossless reproduction
    bool operator==(const FixedAccuracy&) const = default;
};

using CodecMode = std::variant<FixedRate, FixedPrecision, FixedAccuracy>;

/// Throws InvalidArgument when the mode parameter is out of range.
void validate_mode(const CodecMode& mode);
std::string describe(const CodecMode& mode);

inline constexpr std::size_t kBlockEdge = 4;
inline constexpr std::size_t kBlockValues = kBlockEdge * kBlockEdge;
inline constexpr std::uint16_t kStreamVersion = 1;

struct StreamHeader {
    std::uint16_t version = kStreamVersion;
    CodecMode mode = FixedRate{};
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint8_t block_size = kBlockEdge;

    std::uint64_t block_rows() const noexcept { return (rows + kBlockEdge - 1) / kBlockEdge; }
    std::uint64_t block_cols() const noexcept { return (cols + kBlockEdge - 1) / kBlockEdge; }
    std::uint64_t block_count() const noexcept { return block_rows() * block_cols(); }
    std::uint64_t padded_values() const noexcept { return block_count() * kBlockValues; }
    bool operator==(const StreamHeader&) const = default;
};

/// Self-describing compressed array. Block b covers rows 4*(b / block_cols())
/// and columns 4*(b % block_cols()); its bits start at block_index[b].
struct CompressedStream {
    StreamHeader header;
    std::vector<std::uint64_t> block_index;
    std::vector<std::uint64_t> payload;
    std::uint64_t payload_bits = 0;

    /// Checks block_index against the header and payload; throws CorruptData.
    void validate() const;
    /// Bytes this stream occupies when written with write_stream.
    std::uint64_t serialized_bytes() const noexcept;
    bool operator==(const CompressedStream&) const = default;
};

CompressedStream compress(MatrixView<const float> array, const CodecMode& mode);

DenseMatrix<float> decompress(const CompressedStream& stream, unsigned threads = 1);

/// Decodes one 4x4 block (row-major, padded values included) using only block_index.
std::array<float, kBlockValues> decode_block(const CompressedStream& stream, std::uint64_t block);

// Stream file ("WHFZ"), little-endian:
//   magic | version u16 | mode u8 (0 rate, 1 precision, 2 accuracy)
//   | parameter (u32 for rate/precision, binary64 for accuracy)
//   | rows u64 | cols u64 | block_size u8 | block count u64 | block bit lengths u16[count]
//   | payload bit count u64 | payload bytes (bits padded to a byte boundary)
// block_index is rebuilt from the lengths on read.
void write_stream(std::ostream& out, const CompressedStream& stream);
CompressedStream read_stream(std::istream& in);
void save_stream(const std::filesystem::path& path, const CompressedStream& stream);
CompressedStream load_stream(const std::filesystem::path& path);

struct CodecMetrics {
    double bits_per_value = 0.0; // payload bits per stored (padded) value
    double ratio = 0.0;          // 32 / bits_per_value
    double rmse = 0.0;
    double nrmse = 0.0;          // rmse / (max - min) of the original
    double max_pointwise_error = 0.0;
    double psnr = 0.0;           // 20 log10((max - min) / (2 rmse)); +inf when rmse == 0
};

/// Errors are measured over the true extent only; padding never contributes.
CodecMetrics codec_metrics(MatrixView<const float> original, MatrixView<const float> decoded,
                           const CompressedStream& stream);

inline constexpr const char* kPsnrDefinition = "psnr = 20*log10((max-min)/(2*rmse))";

} // namespace whff
