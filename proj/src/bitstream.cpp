#include "whff/bitstream.hpp"

#include "whff/error.hpp"

namespace whff {

void BitWriter::write_bit(bool bit) {
    const auto word = bits_ / 64;
    if (word == words_.size()) words_.push_back(0);
    if (bit) words_[word] |= std::uint64_t{1} << (bits_ % 64);
    ++bits_;
}

void BitWriter::write_bits(std::uint64_t value, unsigned n) {
    if (n == 0) return;
    if (n < 64) value &= (std::uint64_t{1} << n) - 1;
    const unsigned offset = bits_ % 64;
    const auto word = bits_ / 64;
    if (word == words_.size()) words_.push_back(0);
    words_[word] |= value << offset;
    if (offset + n > 64) {
        words_.push_back(value >> (64 - offset));
    }
    bits_ += n;
}

void BitWriter::pad(std::uint64_t n) {
    bits_ += n;
    words_.resize((bits_ + 63) / 64, 0);
}

BitReader::BitReader(std::span<const std::uint64_t> words, std::uint64_t begin, std::uint64_t end)
    : words_(words), pos_(begin), end_(end) {
    if (begin > end || end > words.size() * 64) {
        throw CorruptData(CorruptData::Kind::bad_offset, "bit range outside payload");
    }
}

bool BitReader::read_bit() {
    if (pos_ >= end_) throw CorruptData(CorruptData::Kind::truncated, "read past end of block segment");
    const bool bit = (words_[pos_ / 64] >> (pos_ % 64)) & 1u;
    ++pos_;
    return bit;
}

std::uint64_t BitReader::read_bits(unsigned n) {
    if (n == 0) return 0;
    if (end_ - pos_ < n) throw CorruptData(CorruptData::Kind::truncated, "read past end of block segment");
    const unsigned offset = pos_ % 64;
    const auto word = pos_ / 64;
    std::uint64_t value = words_[word] >> offset;
    if (offset + n > 64) value |= words_[word + 1] << (64 - offset);
    if (n < 64) value &= (std::uint64_t{1} << n) - 1;
    pos_ += n;
    return value;
}

} // namespace whff
