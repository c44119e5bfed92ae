#pragma once

// Little-endian primitive I/O shared by the matrix container and codec stream formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "whff/error.hpp"

namespace whff::byteio {

template <typename U>
void put_uint(std::ostream& out, U value) {
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
    }
    out.write(bytes, sizeof(U));
}

inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_uint(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(U)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(U));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) {
        throw CorruptData(CorruptData::Kind::truncated, std::string("unexpected end of data reading ") + what);
    }
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(bytes[i]) << (8 * i);
    }
    return value;
}

inline float get_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(get_uint<std::uint32_t>(in, what));
}
inline double get_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(get_uint<std::uint64_t>(in, what));
}

} // namespace whff::byteio
