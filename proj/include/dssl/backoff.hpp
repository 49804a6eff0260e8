#pragma once

#include <algorithm>
#include <cmath>

#include "dssl/errors.hpp"

namespace dssl {

// Maps sample means to contention backoff slots: larger mean, earlier slot.
// Decoding returns the slot's midpoint, so round-tripping is accurate to
// rate_cap / slots.
struct BackoffCodec {
    double rate_cap = 1.0; // largest encodable mean
    int slots = 1 << 16;

    BackoffCodec() = default;
    BackoffCodec(double cap, int num_slots) : rate_cap(cap), slots(num_slots) {
        if (!(rate_cap > 0.0)) throw ConfigError("backoff codec needs a positive rate cap");
        if (slots < 1) throw ConfigError("backoff codec needs at least one slot");
    }

    // `clamped`, when non-null, reports a mean outside [0, rate_cap]; the
    // caller decides how loudly to warn (estimates can transiently overshoot).
    int encode(double mean, bool* clamped = nullptr) const {
        if (clamped) *clamped = (mean > rate_cap || mean < 0.0);
        const double clipped = std::clamp(mean, 0.0, rate_cap);
        const int slot = static_cast<int>(std::floor(slots * (1.0 - clipped / rate_cap)));
        return std::clamp(slot, 0, slots - 1);
    }

    double decode(int slot) const {
        return rate_cap * (1.0 - (static_cast<double>(slot) + 0.5) / slots);
    }
};

} // namespace dssl
