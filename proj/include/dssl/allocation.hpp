#pragma once

#include <optional>
#include <vector>

#include "dssl/backoff.hpp"
#include "dssl/rng.hpp"

namespace dssl {

enum class SubPhase { S1, S2 };

// One contention on one channel during the allocation phase.
struct AllocationEvent {
    int round = 0;       // 1-based slot index within the phase
    SubPhase subphase = SubPhase::S1;
    int channel = 0;
    std::vector<int> contenders;
    int winner = -1;     // S1: the user now holding the channel; S2: the best re-contender
    bool tie_break = false;
};

struct AllocationOutcome {
    std::vector<int> channel_of;   // per user
    // Best rival decoded mean per (user, channel); negative when the user
    // never observed a rival there.
    std::vector<std::vector<double>> rival_mean;
    std::vector<std::vector<char>> contended; // (user, channel) -> took part in contention
    int rounds = 0;     // total slots consumed (S1 + S2)
    int s1_rounds = 0;
    std::vector<AllocationEvent> events;

    bool has_rival(int user, int channel) const {
        return rival_mean[static_cast<std::size_t>(user)][static_cast<std::size_t>(channel)] >= 0.0;
    }
};

// Runs the opportunistic-CSMA allocation phase on the given sample means.
// Each S1 slot: holders defend their channels, unassigned users bid on their
// best not-yet-attempted channel, and on each channel the earliest backoff
// wins. Losers read the winner's mean off its backoff slot. Each S1 slot
// with a contested channel is followed by one S2 slot in which the losers
// re-bid so the holder learns the best rival's mean. Repeats until every
// user holds a channel.
AllocationOutcome run_allocation(const std::vector<std::vector<double>>& means,
                                 const BackoffCodec& codec, Rng& tie_rng,
                                 int max_s1_rounds = 0);

} // namespace dssl
