#pragma once
// Shared vocabulary: ids, amounts, time ranges and the error hierarchy.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace ledgerscope {

using AddressId = std::uint32_t;
using EntityId = std::uint32_t;
using TxIndex = std::uint32_t;
using Satoshi = std::int64_t;
using UnixSeconds = std::int64_t;

inline constexpr Satoshi kSatoshiPerBtc = 100'000'000;
inline constexpr UnixSeconds kSecondsPerDay = 86'400;
inline constexpr EntityId kNoEntity = std::numeric_limits<EntityId>::max();

// Half-open interval [from, to) in unix seconds.
struct TimeRange {
    UnixSeconds from = 0;
    UnixSeconds to = 0;

    bool valid() const { return from < to; }
    bool contains(UnixSeconds t) const { return t >= from && t < to; }
    bool operator==(const TimeRange&) const = default;
};

// Whole-corpus range used when no explicit window is given.
inline constexpr TimeRange kAllTime{0, std::numeric_limits<UnixSeconds>::max()};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input record; line is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public ParseError {
public:
    using ParseError::ParseError;
};

class DuplicateError : public ParseError {
public:
    using ParseError::ParseError;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Operation not allowed in the current state (already split, stale result, ...).
class StateError : public Error {
public:
    using Error::Error;
};

inline void require_valid(const TimeRange& r) {
    if (!r.valid())
        throw InvalidArgument("invalid time range: from (" + std::to_string(r.from) +
                              ") must be < to (" + std::to_string(r.to) + ")");
}

// "0.02000000" style display string for a satoshi amount.
std::string format_btc(Satoshi amount);

inline UnixSeconds day_of(UnixSeconds t) {
    return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

}  // namespace ledgerscope
