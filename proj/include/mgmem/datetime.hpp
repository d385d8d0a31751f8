/*
 * mgmem - calendar time at seconds precision
 *
 * Proleptic Gregorian, no timezone. Entries either carry a known DateTime or
 * no timestamp at all (the "unknown" case is std::optional at the use site).
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mgmem {

struct CivilTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

class DateTime {
public:
    DateTime() = default;
    explicit DateTime(std::int64_t epoch_seconds) : seconds_(epoch_seconds) {}

    // Throws MalformedTimestampError on out-of-range fields.
    static DateTime from_civil(const CivilTime& c);

    std::int64_t epoch_seconds() const { return seconds_; }
    CivilTime civil() const;

    // Canonical form "YYYY-MM-DDTHH:MM:SS".
    std::string to_string() const;

    friend bool operator==(const DateTime& a, const DateTime& b) { return a.seconds_ == b.seconds_; }
    friend bool operator!=(const DateTime& a, const DateTime& b) { return a.seconds_ != b.seconds_; }
    friend bool operator<(const DateTime& a, const DateTime& b) { return a.seconds_ < b.seconds_; }

private:
    std::int64_t seconds_ = 0;
};

// Accepts the normalized forms the prompt contracts may emit:
//   "YYYY-MM-DDTHH:MM:SS", "YYYY-MM-DD HH:MM:SS",
//   "YYYY-MM-DDTHH:MM",    "YYYY-MM-DD HH:MM",    "YYYY-MM-DD"
// Anything else throws MalformedTimestampError.
DateTime parse_datetime(const std::string& text);

// True iff text is exactly the canonical "YYYY-MM-DDTHH:MM:SS" form.
bool is_canonical_datetime(const std::string& text);

// True iff parse_datetime would accept text.
bool is_normalized_datetime(const std::string& text);

// Current system time, seconds precision.
DateTime system_now();

} // namespace mgmem
