#include "whff/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "whff/bitstream.hpp"
#include "whff/byteio.hpp"
#include "whff/parallel.hpp"

namespace whff {

namespace {

using Int = std::int32_t;
using UInt = std::uint32_t;

constexpr int kIntPrec = 32;
constexpr int kExponentBits = 8;
constexpr int kExponentBias = 127;
constexpr int kMinExponent = -1074;
constexpr UInt kNegabinaryMask = 0xaaaaaaaau;
constexpr unsigned kUnlimitedBits = 1u << 30;
constexpr std::array<char, 4> kMagic{'W', 'H', 'F', 'Z'};

// Coefficient order by total sequency; entries are row * 4 + col.
constexpr std::array<std::uint8_t, kBlockValues> kSequencyOrder{
    0, 1, 4, 5, 2, 8, 6, 9, 3, 12, 10, 7, 13, 11, 14, 15,
};

using Block = std::array<float, kBlockValues>;

/// Per-block encoding parameters derived from the mode.
struct Limits {
    unsigned minbits = 0;
    unsigned maxbits = kUnlimitedBits;
    int maxprec = kIntPrec;
    int minexp = kMinExponent;
};

int exponent_of(float x) {
    if (x == 0.0f) return -kExponentBias;
    int e = 0;
    std::frexp(x, &e);
    return std::max(e, 1 - kExponentBias);
}

int block_exponent(const Block& b) {
    float m = 0.0f;
    for (float x : b) m = std::max(m, std::abs(x));
    return exponent_of(m);
}

int block_precision(int emax, int maxprec, int minexp) {
    return std::min(maxprec, std::max(0, emax - minexp + 6));
}

// Starting plane count of a fixed-accuracy block; verification adds planes as needed.
int accuracy_precision(int emax, int minexp) {
    return std::min(kIntPrec, std::max(0, emax - minexp + 3));
}

// Lifting on 64-bit lanes; forward outputs stay within 32 bits for inputs below 2^30.
void forward_lift(std::int64_t* p, std::size_t s) {
    std::int64_t x = p[0], y = p[s], z = p[2 * s], w = p[3 * s];
    x += w; x >>= 1; w -= x;
    z += y; z >>= 1; y -= z;
    x += z; x >>= 1; z -= x;
    w += y; w >>= 1; y -= w;
    w += y >> 1; y -= w >> 1;
    p[0] = x; p[s] = y; p[2 * s] = z; p[3 * s] = w;
}

void inverse_lift(std::int64_t* p, std::size_t s) {
    std::int64_t x = p[0], y = p[s], z = p[2 * s], w = p[3 * s];
    y += w >> 1; w -= y >> 1;
    y += w; w <<= 1; w -= y;
    z += x; x <<= 1; x -= z;
    y += z; z <<= 1; z -= y;
    w += x; x <<= 1; x -= w;
    p[0] = x; p[s] = y; p[2 * s] = z; p[3 * s] = w;
}

void forward_transform(std::int64_t* p) {
    for (std::size_t r = 0; r < 4; ++r) forward_lift(p + 4 * r, 1);
    for (std::size_t c = 0; c < 4; ++c) forward_lift(p + c, 4);
}

void inverse_transform(std::int64_t* p) {
    for (std::size_t c = 0; c < 4; ++c) inverse_lift(p + c, 4);
    for (std::size_t r = 0; r < 4; ++r) inverse_lift(p + 4 * r, 1);
}

UInt to_negabinary(Int x) { return (static_cast<UInt>(x) + kNegabinaryMask) ^ kNegabinaryMask; }
Int from_negabinary(UInt x) { return static_cast<Int>((x ^ kNegabinaryMask) - kNegabinaryMask); }

/// Embedded coding of 16 unsigned coefficients, most significant plane first.
/// Each plane sends the bits of already significant coefficients verbatim and
/// then run-length codes the remainder with group tests. Returns bits written.
unsigned encode_planes(BitWriter& out, unsigned maxbits, int maxprec, const std::array<UInt, kBlockValues>& data) {
    const unsigned kmin = kIntPrec > maxprec ? static_cast<unsigned>(kIntPrec - maxprec) : 0u;
    unsigned bits = maxbits;
    unsigned n = 0;
    for (unsigned k = kIntPrec; bits && k-- > kmin;) {
        std::uint64_t x = 0;
        for (unsigned i = 0; i < kBlockValues; ++i) x += static_cast<std::uint64_t>((data[i] >> k) & 1u) << i;
        const unsigned m = std::min(n, bits);
        bits -= m;
        out.write_bits(x, m);
        x >>= m;
        while (n < kBlockValues && bits) {
            --bits;
            const bool any = x != 0;
            out.write_bit(any);
            if (!any) break;
            while (n < kBlockValues - 1 && bits) {
                --bits;
                const bool one = x & 1u;
                out.write_bit(one);
                if (one) break;
                x >>= 1;
                ++n;
            }
            x >>= 1;
            ++n;
        }
    }
    return maxbits - bits;
}

void decode_planes(BitReader& in, unsigned maxbits, int maxprec, std::array<UInt, kBlockValues>& data) {
    const unsigned kmin = kIntPrec > maxprec ? static_cast<unsigned>(kIntPrec - maxprec) : 0u;
    unsigned bits = maxbits;
    unsigned n = 0;
    data.fill(0);
    for (unsigned k = kIntPrec; bits && k-- > kmin;) {
        const unsigned m = std::min(n, bits);
        bits -= m;
        std::uint64_t x = in.read_bits(m);
        while (n < kBlockValues && bits) {
            --bits;
            if (!in.read_bit()) break;
            while (n < kBlockValues - 1 && bits) {
                --bits;
                if (in.read_bit()) break;
                ++n;
            }
            x += std::uint64_t{1} << n;
            ++n;
        }
        for (unsigned i = 0; x; ++i, x >>= 1) data[i] += static_cast<UInt>(x & 1u) << k;
    }
}

std::array<UInt, kBlockValues> to_coefficients(const Block& b, int emax) {
    std::array<std::int64_t, kBlockValues> q{};
    const double scale = std::ldexp(1.0, kIntPrec - 2 - emax);
    for (std::size_t i = 0; i < kBlockValues; ++i) q[i] = static_cast<std::int64_t>(static_cast<double>(b[i]) * scale);
    forward_transform(q.data());
    std::array<UInt, kBlockValues> u{};
    for (std::size_t i = 0; i < kBlockValues; ++i) u[i] = to_negabinary(static_cast<Int>(q[kSequencyOrder[i]]));
    return u;
}

Block from_coefficients(const std::array<UInt, kBlockValues>& u, int emax) {
    std::array<std::int64_t, kBlockValues> q{};
    for (std::size_t i = 0; i < kBlockValues; ++i) q[kSequencyOrder[i]] = from_negabinary(u[i]);
    inverse_transform(q.data());
    const double scale = std::ldexp(1.0, emax - (kIntPrec - 2));
    Block b{};
    for (std::size_t i = 0; i < kBlockValues; ++i) b[i] = static_cast<float>(static_cast<double>(q[i]) * scale);
    return b;
}

/// Transform-coded block: nonzero flag, biased exponent, planes. Returns bits written.
unsigned encode_transformed(BitWriter& out, const Block& b, const Limits& lim) {
    const int emax = block_exponent(b);
    const int maxprec = block_precision(emax, lim.maxprec, lim.minexp);
    const unsigned e = maxprec ? static_cast<unsigned>(emax + kExponentBias) : 0u;
    unsigned bits = 1;
    if (e) {
        bits += kExponentBits;
        out.write_bits(2u * e + 1u, bits);
        bits += encode_planes(out, lim.maxbits - bits, maxprec, to_coefficients(b, emax));
    } else {
        out.write_bit(false);
    }
    if (bits < lim.minbits) {
        out.pad(lim.minbits - bits);
        bits = lim.minbits;
    }
    return bits;
}

Block decode_transformed(BitReader& in, const Limits& lim) {
    if (!in.read_bit()) return Block{};
    const int emax = static_cast<int>(in.read_bits(kExponentBits)) - kExponentBias;
    const int maxprec = block_precision(emax, lim.maxprec, lim.minexp);
    std::array<UInt, kBlockValues> u{};
    decode_planes(in, lim.maxbits - 1 - kExponentBits, maxprec, u);
    return from_coefficients(u, emax);
}

int accuracy_min_exponent(double tolerance) {
    if (tolerance <= 0.0) return kMinExponent;
    int e = 0;
    std::frexp(tolerance, &e);
    return e - 1;
}

bool within_tolerance(const Block& a, const Block& b, double tolerance) {
    for (std::size_t i = 0; i < kBlockValues; ++i) {
        if (tolerance == 0.0) {
            if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
        } else if (std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) > tolerance) {
            return false;
        }
    }
    return true;
}

// Fixed-accuracy blocks: [raw flag]
//   raw:  16 x 32-bit values
//   else: [nonzero flag] then, if nonzero, 8-bit exponent, unary count of
//         planes added beyond the exponent-derived precision, planes.
void write_raw(BitWriter& out, const Block& b) {
    out.write_bit(true);
    for (float x : b) out.write_bits(std::bit_cast<std::uint32_t>(x), 32);
}

void encode_accuracy_planes(BitWriter& out, const Block& b, int emax, int precision, int extra) {
    out.write_bit(false);
    out.write_bit(true);
    out.write_bits(static_cast<unsigned>(emax + kExponentBias), kExponentBits);
    for (int i = 0; i < extra; ++i) out.write_bit(true);
    out.write_bit(false);
    encode_planes(out, kUnlimitedBits, precision, to_coefficients(b, emax));
}

Block decode_accuracy(BitReader& in, int minexp) {
    if (in.read_bit()) {
        Block b{};
        for (auto& x : b) x = std::bit_cast<float>(static_cast<std::uint32_t>(in.read_bits(32)));
        return b;
    }
    if (!in.read_bit()) return Block{};
    const int emax = static_cast<int>(in.read_bits(kExponentBits)) - kExponentBias;
    int extra = 0;
    while (in.read_bit()) {
        if (++extra > kIntPrec) throw CorruptData(CorruptData::Kind::bad_header, "block precision out of range");
    }
    const int precision = std::min(kIntPrec, accuracy_precision(emax, minexp) + extra);
    std::array<UInt, kBlockValues> u{};
    decode_planes(in, kUnlimitedBits, precision, u);
    return from_coefficients(u, emax);
}

void encode_accuracy(BitWriter& out, const Block& b, double tolerance) {
    const int minexp = accuracy_min_exponent(tolerance);
    const int emax = block_exponent(b);
    const bool all_zero = std::all_of(b.begin(), b.end(), [](float x) { return std::bit_cast<std::uint32_t>(x) == 0; });
    const int base = all_zero ? 0 : accuracy_precision(emax, minexp);

    if (all_zero || (base == 0 && within_tolerance(b, Block{}, tolerance))) {
        out.write_bit(false);
        out.write_bit(false);
        return;
    }
    // Try the exponent-derived precision first, then add planes until the decoded block meets the bound.
    for (int precision = std::max(base, 1); precision <= kIntPrec; ++precision) {
        BitWriter trial;
        encode_accuracy_planes(trial, b, emax, precision, precision - base);
        BitReader reader(trial.words(), 0, trial.bit_count());
        if (within_tolerance(b, decode_accuracy(reader, minexp), tolerance)) {
            const auto& words = trial.words();
            std::uint64_t left = trial.bit_count();
            for (std::size_t w = 0; left > 0; ++w) {
                const auto n = static_cast<unsigned>(std::min<std::uint64_t>(64, left));
                out.write_bits(words[w], n);
                left -= n;
            }
            return;
        }
    }
    write_raw(out, b);
}

Limits limits_for(const CodecMode& mode) {
    Limits lim;
    if (const auto* r = std::get_if<FixedRate>(&mode)) {
        lim.minbits = lim.maxbits = static_cast<unsigned>(kBlockValues) * r->bits_per_value;
    } else if (const auto* p = std::get_if<FixedPrecision>(&mode)) {
        lim.maxprec = static_cast<int>(p->planes);
    }
    return lim;
}

Block gather_block(MatrixView<const float> a, std::size_t bi, std::size_t bj) {
    Block b{};
    for (std::size_t r = 0; r < kBlockEdge; ++r) {
        const auto row = std::min(bi * kBlockEdge + r, a.rows() - 1);
        for (std::size_t c = 0; c < kBlockEdge; ++c) {
            const auto col = std::min(bj * kBlockEdge + c, a.cols() - 1);
            b[r * kBlockEdge + c] = a(row, col);
        }
    }
    return b;
}

Block decode_one(const CompressedStream& s, std::uint64_t block) {
    const auto begin = s.block_index[block];
    const auto end = block + 1 < s.block_index.size() ? s.block_index[block + 1] : s.payload_bits;
    BitReader in(s.payload, begin, end);
    if (const auto* acc = std::get_if<FixedAccuracy>(&s.header.mode)) {
        return decode_accuracy(in, accuracy_min_exponent(acc->tolerance));
    }
    return decode_transformed(in, limits_for(s.header.mode));
}

std::uint8_t mode_tag(const CodecMode& m) { return static_cast<std::uint8_t>(m.index()); }

} // namespace

void validate_mode(const CodecMode& mode) {
    if (const auto* r = std::get_if<FixedRate>(&mode)) {
        if (r->bits_per_value < 1 || r->bits_per_value > 32) {
            throw InvalidArgument("codec: fixed rate must be 1..32 bits per value");
        }
    } else if (const auto* p = std::get_if<FixedPrecision>(&mode)) {
        if (p->planes < 1 || p->planes > 32) throw InvalidArgument("codec: fixed precision must be 1..32 planes");
    } else {
        const double t = std::get<FixedAccuracy>(mode).tolerance;
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw InvalidArgument("codec: fixed accuracy tolerance must be finite and nonnegative");
        }
    }
}

std::string describe(const CodecMode& mode) {
    std::ostringstream os;
    if (const auto* r = std::get_if<FixedRate>(&mode)) {
        os << "rate(" << r->bits_per_value << ")";
    } else if (const auto* p = std::get_if<FixedPrecision>(&mode)) {
        os << "precision(" << p->planes << ")";
    } else {
        os << "accuracy(" << std::get<FixedAccuracy>(mode).tolerance << ")";
    }
    return os.str();
}

CompressedStream compress(MatrixView<const float> array, const CodecMode& mode) {
    validate_mode(mode);
    if (array.rows() == 0 || array.cols() == 0) throw InvalidArgument("compress: array must be at least 1 x 1");
    const auto values = array.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw NumericFault("compress input", i);
    }

    CompressedStream s;
    s.header.mode = mode;
    s.header.rows = array.rows();
    s.header.cols = array.cols();
    s.block_index.reserve(s.header.block_count());

    BitWriter out;
    const auto lim = limits_for(mode);
    const auto* acc = std::get_if<FixedAccuracy>(&mode);
    for (std::size_t bi = 0; bi < s.header.block_rows(); ++bi) {
        for (std::size_t bj = 0; bj < s.header.block_cols(); ++bj) {
            s.block_index.push_back(out.bit_count());
            const auto block = gather_block(array, bi, bj);
            if (acc) {
                encode_accuracy(out, block, acc->tolerance);
            } else {
                encode_transformed(out, block, lim);
            }
        }
    }
    s.payload_bits = out.bit_count();
    s.payload = out.take_words();
    s.payload.resize((s.payload_bits + 63) / 64, 0);
    return s;
}

std::array<float, kBlockValues> decode_block(const CompressedStream& stream, std::uint64_t block) {
    if (block >= stream.block_index.size()) {
        throw LookupError("decode_block: block " + std::to_string(block) + " out of range");
    }
    return decode_one(stream, block);
}

DenseMatrix<float> decompress(const CompressedStream& s, unsigned threads) {
    s.validate();
    DenseMatrix<float> out(s.header.rows, s.header.cols);
    const auto bcols = s.header.block_cols();
    parallel_chunks(s.header.block_count(), threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t b = first; b < last; ++b) {
            const auto block = decode_one(s, b);
            const std::size_t r0 = (b / bcols) * kBlockEdge, c0 = (b % bcols) * kBlockEdge;
            for (std::size_t r = 0; r < kBlockEdge && r0 + r < out.rows(); ++r) {
                for (std::size_t c = 0; c < kBlockEdge && c0 + c < out.cols(); ++c) {
                    out(r0 + r, c0 + c) = block[r * kBlockEdge + c];
                }
            }
        }
    });
    return out;
}

void CompressedStream::validate() const {
    if (header.block_size != kBlockEdge || header.rows == 0 || header.cols == 0) {
        throw CorruptData(CorruptData::Kind::bad_header, "codec stream: invalid dimensions or block size");
    }
    if (block_index.size() != header.block_count()) {
        throw CorruptData(CorruptData::Kind::bad_header, "codec stream: block count does not match dimensions");
    }
    if (payload.size() * 64 < payload_bits) {
        throw CorruptData(CorruptData::Kind::truncated, "codec stream: payload shorter than its bit count");
    }
    for (std::size_t b = 0; b < block_index.size(); ++b) {
        if (block_index[b] > payload_bits || (b > 0 && block_index[b] < block_index[b - 1])) {
            throw CorruptData(CorruptData::Kind::bad_offset,
                              "codec stream: block offset " + std::to_string(b) + " out of bounds");
        }
    }
    if (const auto* r = std::get_if<FixedRate>(&header.mode)) {
        const std::uint64_t seg = kBlockValues * r->bits_per_value;
        for (std::size_t b = 0; b < block_index.size(); ++b) {
            if (block_index[b] != b * seg) {
                throw CorruptData(CorruptData::Kind::bad_offset, "codec stream: fixed-rate block offset mismatch");
            }
        }
        if (payload_bits != block_index.size() * seg) {
            throw CorruptData(CorruptData::Kind::truncated, "codec stream: fixed-rate payload length mismatch");
        }
    }
}

std::uint64_t CompressedStream::serialized_bytes() const noexcept {
    const std::uint64_t param = std::holds_alternative<FixedAccuracy>(header.mode) ? 8 : 4;
    return 4 + 2 + 1 + param + 8 + 8 + 1 + 8 + 2 * block_index.size() + 8 + (payload_bits + 7) / 8;
}

void write_stream(std::ostream& out, const CompressedStream& s) {
    out.write(kMagic.data(), kMagic.size());
    byteio::put_uint<std::uint16_t>(out, s.header.version);
    byteio::put_uint<std::uint8_t>(out, mode_tag(s.header.mode));
    if (const auto* r = std::get_if<FixedRate>(&s.header.mode)) {
        byteio::put_uint<std::uint32_t>(out, r->bits_per_value);
    } else if (const auto* p = std::get_if<FixedPrecision>(&s.header.mode)) {
        byteio::put_uint<std::uint32_t>(out, p->planes);
    } else {
        byteio::put_f64(out, std::get<FixedAccuracy>(s.header.mode).tolerance);
    }
    byteio::put_uint<std::uint64_t>(out, s.header.rows);
    byteio::put_uint<std::uint64_t>(out, s.header.cols);
    byteio::put_uint<std::uint8_t>(out, s.header.block_size);
    byteio::put_uint<std::uint64_t>(out, s.block_index.size());
    for (std::size_t b = 0; b < s.block_index.size(); ++b) {
        const auto end = b + 1 < s.block_index.size() ? s.block_index[b + 1] : s.payload_bits;
        const auto length = end - s.block_index[b];
        if (end < s.block_index[b] || length > 0xffff) throw Error("codec stream: block segment length out of range");
        byteio::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(length));
    }
    byteio::put_uint<std::uint64_t>(out, s.payload_bits);
    const auto bytes = (s.payload_bits + 7) / 8;
    for (std::uint64_t i = 0; i < bytes; ++i) {
        byteio::put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(s.payload[i / 8] >> (8 * (i % 8))));
    }
    if (!out) throw Error("codec stream: write failed");
}

CompressedStream read_stream(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4) throw CorruptData(CorruptData::Kind::truncated, "codec stream: missing magic");
    if (magic != kMagic) throw CorruptData(CorruptData::Kind::bad_magic, "codec stream: bad magic");

    CompressedStream s;
    s.header.version = byteio::get_uint<std::uint16_t>(in, "version");
    if (s.header.version != kStreamVersion) {
        throw CorruptData(CorruptData::Kind::bad_header,
                          "codec stream: unsupported version " + std::to_string(s.header.version));
    }
    const auto tag = byteio::get_uint<std::uint8_t>(in, "mode");
    switch (tag) {
    case 0: s.header.mode = FixedRate{byteio::get_uint<std::uint32_t>(in, "rate")}; break;
    case 1: s.header.mode = FixedPrecision{byteio::get_uint<std::uint32_t>(in, "precision")}; break;
    case 2: s.header.mode = FixedAccuracy{byteio::get_f64(in, "tolerance")}; break;
    default: throw CorruptData(CorruptData::Kind::bad_header, "codec stream: unknown mode " + std::to_string(tag));
    }
    try {
        validate_mode(s.header.mode);
    } catch (const InvalidArgument& e) {
        throw CorruptData(CorruptData::Kind::bad_header, std::string("codec stream: ") + e.what());
    }
    s.header.rows = byteio::get_uint<std::uint64_t>(in, "rows");
    s.header.cols = byteio::get_uint<std::uint64_t>(in, "cols");
    s.header.block_size = byteio::get_uint<std::uint8_t>(in, "block size");
    const auto count = byteio::get_uint<std::uint64_t>(in, "block count");
    constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;
    if (s.header.block_size != kBlockEdge || s.header.rows == 0 || s.header.cols == 0 || s.header.rows > kMaxDim ||
        s.header.cols > kMaxDim || count != s.header.block_count() || count > (std::uint64_t{1} << 34)) {
        throw CorruptData(CorruptData::Kind::bad_header, "codec stream: inconsistent dimensions or block count");
    }
    s.block_index.resize(count);
    std::uint64_t offset = 0;
    for (auto& off : s.block_index) {
        off = offset;
        offset += byteio::get_uint<std::uint16_t>(in, "block length");
    }
    s.payload_bits = byteio::get_uint<std::uint64_t>(in, "payload length");
    if (offset != s.payload_bits) {
        throw CorruptData(CorruptData::Kind::bad_offset, "codec stream: block lengths do not add up to the payload");
    }
    if (s.payload_bits > count * (kBlockValues * 33 + 64)) {
        throw CorruptData(CorruptData::Kind::bad_header, "codec stream: payload length implausible for block count");
    }
    const auto bytes = (s.payload_bits + 7) / 8;
    std::vector<unsigned char> raw(bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
        throw CorruptData(CorruptData::Kind::truncated, "codec stream: payload truncated");
    }
    s.payload.assign((s.payload_bits + 63) / 64, 0);
    for (std::uint64_t i = 0; i < bytes; ++i) s.payload[i / 8] |= static_cast<std::uint64_t>(raw[i]) << (8 * (i % 8));
    if (s.payload_bits % 64 != 0 && !s.payload.empty()) {
        s.payload.back() &= (std::uint64_t{1} << (s.payload_bits % 64)) - 1;
    }
    s.validate();
    return s;
}

void save_stream(const std::filesystem::path& path, const CompressedStream& stream) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
    write_stream(out, stream);
}

CompressedStream load_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    return read_stream(in);
}

CodecMetrics codec_metrics(MatrixView<const float> original, MatrixView<const float> decoded,
                           const CompressedStream& stream) {
    if (original.rows() != decoded.rows() || original.cols() != decoded.cols()) {
        throw InvalidArgument("codec_metrics: dimension mismatch");
    }
    CodecMetrics m;
    m.bits_per_value = static_cast<double>(stream.payload_bits) / static_cast<double>(stream.header.padded_values());
    m.ratio = m.bits_per_value > 0.0 ? 32.0 / m.bits_per_value : INFINITY;

    const auto a = original.data(), b = decoded.data();
    double lo = INFINITY, hi = -INFINITY, sq = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double d = x - static_cast<double>(b[i]);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sq += d * d;
        worst = std::max(worst, std::abs(d));
    }
    const double range = hi - lo;
    m.rmse = std::sqrt(sq / static_cast<double>(a.size()));
    m.max_pointwise_error = worst;
    if (m.rmse == 0.0) {
        m.nrmse = 0.0;
        m.psnr = INFINITY;
    } else {
        m.nrmse = range > 0.0 ? m.rmse / range : INFINITY;
        m.psnr = range > 0.0 ? 20.0 * std::log10(range / (2.0 * m.rmse)) : -INFINITY;
    }
    return m;
}

} // namespace whff
