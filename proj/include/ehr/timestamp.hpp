#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ehr {

// Microseconds since 1970-01-01T00:00:00, no timezone attached.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;
inline constexpr Micros kMicrosPerDay = 86'400 * kMicrosPerSecond;

// Parses `text` against a strftime-style pattern. Supported directives:
// %Y %m %d %H %M %S %f (1-6 fractional digits) and %%. Every other
// character must match literally. Returns nullopt on any mismatch.
std::optional<Micros> parse_timestamp(std::string_view text, std::string_view format);

// "YYYY-MM-DD HH:MM:SS" with a ".ffffff" suffix when sub-second part is non-zero.
std::string format_timestamp(Micros t);

Micros micros_from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0, int micro = 0);

}  // namespace ehr
