#pragma once

#include <cstdint>
#include <string>

namespace windsr {

// Seconds since the Unix epoch, always UTC. All series in the toolkit step
// in whole hours, so second resolution is plenty.
using UtcTime = std::int64_t;

// Parses "YYYY-MM-DDTHH:MM:SSZ" (the trailing Z optional). Throws
// errc::invalid_argument on malformed input.
UtcTime parse_iso8601(const std::string& text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(UtcTime t);

inline int hour_of_day(UtcTime t) {
    std::int64_t sec = ((t % 86400) + 86400) % 86400;
    return static_cast<int>(sec / 3600);
}

inline int minute_of_hour(UtcTime t) {
    std::int64_t sec = ((t % 3600) + 3600) % 3600;
    return static_cast<int>(sec / 60);
}

} // namespace windsr
