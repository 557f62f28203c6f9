#pragma once

#include <vector>

#include "pbec/errors.hpp"

namespace pbec {

/// Piecewise-constant pump schedule. Segment k holds from segments[k].start
/// until the next start time (the last segment holds indefinitely).
struct PumpSegment {
    double start = 0.0;  // 1/kappa
    double P = 0.0;      // kappa
};

struct PumpSchedule {
    std::vector<PumpSegment> segments;

    static PumpSchedule constant(double P) { return {{{0.0, P}}}; }

    void validate() const {
        if (segments.empty()) throw ConfigError("pump schedule has no segments");
        if (segments.front().start != 0.0)
            throw ConfigError("pump schedule must start at t = 0");
        for (size_t k = 0; k < segments.size(); ++k) {
            if (segments[k].P < 0) throw ConfigError("pump rate must be >= 0");
            if (k > 0 && segments[k].start <= segments[k - 1].start)
                throw ConfigError("pump schedule start times must be strictly increasing");
        }
    }

    double pump_at(double t) const {
        double P = segments.front().P;
        for (const auto& s : segments) {
            if (s.start <= t) P = s.P;
            else break;
        }
        return P;
    }

    double last_switch_time() const { return segments.back().start; }
};

} // namespace pbec
