#pragma once

// LSB-first bit packing over 64-bit words. Bit i of a stream is bit (i % 8)
// of byte i / 8 once the words are laid out little-endian.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace whff {

class BitWriter {
public:
    std::uint64_t bit_count() const noexcept { return bits_; }

    void write_bit(bool bit);
    /// Writes the low `n` bits of `value` (n <= 64), least significant first.
    void write_bits(std::uint64_t value, unsigned n);
    void pad(std::uint64_t n);

    /// Words with unused high bits of the last word cleared.
    const std::vector<std::uint64_t>& words() const noexcept { return words_; }
    std::vector<std::uint64_t> take_words() { return std::move(words_); }

private:
    std::vector<std::uint64_t> words_;
    std::uint64_t bits_ = 0;
};

/// Reads bits from [begin, end) of a word buffer; throws CorruptData(truncated) on overrun.
class BitReader {
public:
    BitReader(std::span<const std::uint64_t> words, std::uint64_t begin, std::uint64_t end);

    std::uint64_t position() const noexcept { return pos_; }
    bool read_bit();
    std::uint64_t read_bits(unsigned n);

private:
    std::span<const std::uint64_t> words_;
    std::uint64_t pos_;
    std::uint64_t end_;
};

} // namespace whff
