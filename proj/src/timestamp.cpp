#include "ehr/timestamp.hpp"

#include <cstdio>

namespace ehr {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

// Reads between min_digits and max_digits decimal digits.
bool read_number(std::string_view text, size_t& pos, int min_digits, int max_digits, int& out,
                 int* digits_read = nullptr) {
    int value = 0;
    int n = 0;
    while (n < max_digits && pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        value = value * 10 + (text[pos] - '0');
        ++pos;
        ++n;
    }
    if (n < min_digits) {
        return false;
    }
    out = value;
    if (digits_read) {
        *digits_read = n;
    }
    return true;
}

}  // namespace

Micros micros_from_civil(int year, unsigned month, unsigned day, int hour, int minute, int second,
                         int micro) {
    const std::int64_t days = days_from_civil(year, month, day);
    return days * kMicrosPerDay +
           (static_cast<Micros>(hour) * 3600 + minute * 60 + second) * kMicrosPerSecond + micro;
}

std::optional<Micros> parse_timestamp(std::string_view text, std::string_view format) {
    int year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0, micro = 0;
    size_t pos = 0;
    for (size_t i = 0; i < format.size(); ++i) {
        const char c = format[i];
        if (c != '%') {
            if (pos >= text.size() || text[pos] != c) {
                return std::nullopt;
            }
            ++pos;
            continue;
        }
        if (++i >= format.size()) {
            return std::nullopt;
        }
        bool ok = true;
        switch (format[i]) {
            case 'Y':
                ok = read_number(text, pos, 4, 4, year);
                break;
            case 'm':
                ok = read_number(text, pos, 1, 2, month);
                break;
            case 'd':
                ok = read_number(text, pos, 1, 2, day);
                break;
            case 'H':
                ok = read_number(text, pos, 1, 2, hour);
                break;
            case 'M':
                ok = read_number(text, pos, 1, 2, minute);
                break;
            case 'S':
                ok = read_number(text, pos, 1, 2, second);
                break;
            case 'f': {
                int digits = 0;
                ok = read_number(text, pos, 1, 6, micro, &digits);
                for (; ok && digits < 6; ++digits) {
                    micro *= 10;
                }
                break;
            }
            case '%':
                ok = pos < text.size() && text[pos++] == '%';
                break;
            default:
                return std::nullopt;
        }
        if (!ok) {
            return std::nullopt;
        }
    }
    if (pos != text.size()) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 ||
        static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)) ||
        hour > 23 || minute > 59 || second > 59) {
        return std::nullopt;
    }
    return micros_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour,
                             minute, second, micro);
}

std::string format_timestamp(Micros t) {
    std::int64_t days = t / kMicrosPerDay;
    Micros rem = t % kMicrosPerDay;
    if (rem < 0) {
        rem += kMicrosPerDay;
        --days;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    const Micros secs = rem / kMicrosPerSecond;
    const Micros frac = rem % kMicrosPerSecond;
    char buf[64];
    if (frac == 0) {
        std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld",
                      static_cast<long long>(y), m, d, static_cast<long long>(secs / 3600),
                      static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
    } else {
        std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld.%06lld",
                      static_cast<long long>(y), m, d, static_cast<long long>(secs / 3600),
                      static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60),
                      static_cast<long long>(frac));
    }
    return buf;
}

}  // namespace ehr
