#pragma once

#include <chrono>
#include <functional>
#include <stop_token>
#include <string>
#include <string_view>

namespace exas {

using Timestamp = std::chrono::sys_seconds;
using WallClock = std::function<Timestamp()>;

Timestamp utc_now();

// RFC 3339, UTC, whole seconds: 2026-10-15T08:30:00Z
std::string format_rfc3339(Timestamp t);
// Throws ValidationError on anything but the exact form above.
Timestamp parse_rfc3339(std::string_view text);

// YYYYMMDD of the UTC day containing t.
std::string utc_date_compact(Timestamp t);

// Maps simulated seconds to wall time. A scale of 60 turns a two minute
// measurement into two wall seconds.
class SimClock {
  public:
    explicit SimClock(double time_scale = 60.0);

    double time_scale() const noexcept { return time_scale_; }

    std::chrono::nanoseconds to_wall(double simulated_seconds) const;

    // Sleeps for the wall equivalent of simulated_seconds. Returns false if
    // woken early by a stop request.
    bool sleep_for(double simulated_seconds, std::stop_token stop = {}) const;

  private:
    double time_scale_;
};

}  // namespace exas
