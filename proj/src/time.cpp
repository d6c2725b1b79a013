#include "exas/time.hpp"

#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <mutex>

#include "exas/errors.hpp"

namespace exas {

Timestamp utc_now() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string format_rfc3339(Timestamp t) {
    const std::time_t raw = t.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&raw, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

Timestamp parse_rfc3339(std::string_view text) {
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[16] != ':' || text[19] != 'Z') {
        throw ValidationError("timestamp is not RFC 3339 UTC with seconds precision: " + std::string(text));
    }
    auto field = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') {
                throw ValidationError("timestamp has a non-digit field: " + std::string(text));
            }
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    std::tm tm{};
    tm.tm_year = field(0, 4) - 1900;
    tm.tm_mon = field(5, 2) - 1;
    tm.tm_mday = field(8, 2);
    tm.tm_hour = field(11, 2);
    tm.tm_min = field(14, 2);
    tm.tm_sec = field(17, 2);
    if (tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 || tm.tm_min > 59 ||
        tm.tm_sec > 60) {
        throw ValidationError("timestamp field out of range: " + std::string(text));
    }
    const Timestamp t{std::chrono::seconds{timegm(&tm)}};
    if (format_rfc3339(t) != text) {
        throw ValidationError("timestamp is not a real calendar instant: " + std::string(text));
    }
    return t;
}

std::string utc_date_compact(Timestamp t) {
    const std::string full = format_rfc3339(t);
    return full.substr(0, 4) + full.substr(5, 2) + full.substr(8, 2);
}

SimClock::SimClock(double time_scale) : time_scale_(time_scale) {
    if (!(time_scale_ > 0.0)) {
        throw ValidationError("time_scale must be positive");
    }
}

std::chrono::nanoseconds SimClock::to_wall(double simulated_seconds) const {
    return std::chrono::nanoseconds{static_cast<long long>(simulated_seconds / time_scale_ * 1e9)};
}

bool SimClock::sleep_for(double simulated_seconds, std::stop_token stop) const {
    const auto wall = to_wall(simulated_seconds);
    if (wall <= std::chrono::nanoseconds::zero()) {
        return !stop.stop_requested();
    }
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, wall, [] { return false; });
    return !stop.stop_requested();
}

}  // namespace exas
