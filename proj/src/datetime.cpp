#include "mgmem/datetime.hpp"

#include "mgmem/errors.hpp"

#include <array>
#include <chrono>
#include <cstdio>

namespace mgmem {
namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[static_cast<std::size_t>(m - 1)];
}

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(const std::string& s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return false;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
}

int num(const std::string& s, std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

// Parses "YYYY-MM-DD[ T]HH:MM[:SS]" or bare "YYYY-MM-DD"; returns false on shape mismatch.
bool parse_fields(const std::string& s, CivilTime& out) {
    if (!all_digits(s, 0, 4) || s.size() < 10) return false;
    if (s[4] != '-' || s[7] != '-') return false;
    if (!all_digits(s, 5, 2) || !all_digits(s, 8, 2)) return false;
    out.year = num(s, 0, 4);
    out.month = num(s, 5, 2);
    out.day = num(s, 8, 2);
    out.hour = out.minute = out.second = 0;
    if (s.size() == 10) return true;
    if (s[10] != 'T' && s[10] != ' ') return false;
    if (s.size() != 16 && s.size() != 19) return false;
    if (!all_digits(s, 11, 2) || s[13] != ':' || !all_digits(s, 14, 2)) return false;
    out.hour = num(s, 11, 2);
    out.minute = num(s, 14, 2);
    if (s.size() == 19) {
        if (s[16] != ':' || !all_digits(s, 17, 2)) return false;
        out.second = num(s, 17, 2);
    }
    return true;
}

bool civil_in_range(const CivilTime& c) {
    return c.year >= 0 && c.year <= 9999 && c.month >= 1 && c.month <= 12 && c.day >= 1 &&
           c.day <= days_in_month(c.year, c.month) && c.hour >= 0 && c.hour <= 23 &&
           c.minute >= 0 && c.minute <= 59 && c.second >= 0 && c.second <= 59;
}

} // namespace

DateTime DateTime::from_civil(const CivilTime& c) {
    if (!civil_in_range(c)) {
        throw MalformedTimestampError("calendar fields out of range");
    }
    const std::int64_t days = days_from_civil(c.year, c.month, c.day);
    return DateTime(days * 86400 + c.hour * 3600 + c.minute * 60 + c.second);
}

CivilTime DateTime::civil() const {
    std::int64_t days = seconds_ / 86400;
    std::int64_t rem = seconds_ % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    CivilTime c;
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

std::string DateTime::to_string() const {
    const CivilTime c = civil();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day,
                  c.hour, c.minute, c.second);
    return std::string(buf);
}

DateTime parse_datetime(const std::string& text) {
    CivilTime c;
    if (!parse_fields(text, c) || !civil_in_range(c)) {
        throw MalformedTimestampError("unparseable timestamp: \"" + text + "\"");
    }
    return DateTime::from_civil(c);
}

bool is_canonical_datetime(const std::string& text) {
    if (text.size() != 19 || text[10] != 'T') return false;
    CivilTime c;
    return parse_fields(text, c) && civil_in_range(c);
}

bool is_normalized_datetime(const std::string& text) {
    CivilTime c;
    return parse_fields(text, c) && civil_in_range(c);
}

DateTime system_now() {
    const auto now = std::chrono::system_clock::now();
    return DateTime(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

} // namespace mgmem
