#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace whff {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied inconsistent or out-of-range arguments.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Unknown field, slit or other named entity.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Requested allocation exceeds the configured memory cap.
class CapacityError : public Error {
public:
    CapacityError(std::size_t requested, std::size_t cap, const std::string& what)
        : Error(what + ": requires " + std::to_string(requested) + " bytes, cap is " +
                std::to_string(cap) + " bytes"),
          requested_(requested), cap_(cap) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t requested_;
    std::size_t cap_;
};

/// A NaN or infinity was found where finite data is required.
class NumericFault : public Error {
public:
    NumericFault(const std::string& where, std::size_t index)
        : Error(where + ": non-finite value at index " + std::to_string(index)), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Persisted data (matrix container or codec stream) failed validation.
class CorruptData : public Error {
public:
    enum class Kind { bad_magic, bad_header, truncated, bad_offset };

    CorruptData(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline const char* to_string(CorruptData::Kind k) {
    switch (k) {
    case CorruptData::Kind::bad_magic: return "bad_magic";
    case CorruptData::Kind::bad_header: return "bad_header";
    case CorruptData::Kind::truncated: return "truncated";
    case CorruptData::Kind::bad_offset: return "bad_offset";
    }
    return "unknown";
}

} // namespace whff
