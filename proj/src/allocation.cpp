#include "dssl/allocation.hpp"

#include <algorithm>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

namespace {

struct Bid {
    int user;
    int slot;
};

// Earliest backoff slot wins; equal slots fall to a seeded coin.
int pick_winner(const std::vector<Bid>& bids, Rng& rng, bool* tied) {
    int best = bids.front().slot;
    for (const Bid& b : bids) best = std::min(best, b.slot);
    std::vector<int> leaders;
    for (const Bid& b : bids)
        if (b.slot == best) leaders.push_back(b.user);
    *tied = leaders.size() > 1;
    if (leaders.size() == 1) return leaders.front();
    return leaders[rng.next_below(static_cast<std::uint32_t>(leaders.size()))];
}

} // namespace

AllocationOutcome run_allocation(const std::vector<std::vector<double>>& means,
                                 const BackoffCodec& codec, Rng& tie_rng, int max_s1_rounds) {
    const int users = static_cast<int>(means.size());
    if (users == 0) throw ConfigError("allocation needs at least one user");
    const int channels = static_cast<int>(means.front().size());
    for (const auto& row : means) {
        if (static_cast<int>(row.size()) != channels) {
            throw ConfigError("allocation mean table rows have unequal lengths");
        }
    }
    if (users > channels) {
        std::ostringstream msg;
        msg << "allocation needs users <= channels, got " << users << " > " << channels;
        throw ConfigError(msg.str());
    }
    if (max_s1_rounds <= 0) max_s1_rounds = users * channels;

    // Preference order over all channels, sample-mean descending; index ties
    // resolve low-first so the machine stays deterministic.
    std::vector<std::vector<int>> pref(static_cast<std::size_t>(users));
    for (int i = 0; i < users; ++i) {
        auto& p = pref[static_cast<std::size_t>(i)];
        p.resize(static_cast<std::size_t>(channels));
        for (int k = 0; k < channels; ++k) p[static_cast<std::size_t>(k)] = k;
        std::stable_sort(p.begin(), p.end(), [&](int a, int b) {
            return means[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] >
                   means[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)];
        });
    }

    AllocationOutcome out;
    out.channel_of.assign(static_cast<std::size_t>(users), -1);
    out.rival_mean.assign(static_cast<std::size_t>(users),
                          std::vector<double>(static_cast<std::size_t>(channels), -1.0));
    out.contended.assign(static_cast<std::size_t>(users),
                         std::vector<char>(static_cast<std::size_t>(channels), 0));

    std::vector<std::size_t> next_pref(static_cast<std::size_t>(users), 0);
    std::vector<std::vector<char>> attempted(static_cast<std::size_t>(users),
                                             std::vector<char>(static_cast<std::size_t>(channels), 0));
    int round = 0;

    while (true) {
        // --- S1 slot ---
        out.s1_rounds++;
        if (out.s1_rounds > max_s1_rounds) {
            std::ostringstream msg;
            msg << "allocation did not settle within " << max_s1_rounds << " contention rounds";
            throw ProtocolError(msg.str());
        }
        round++;
        std::vector<std::vector<Bid>> bids(static_cast<std::size_t>(channels));
        for (int i = 0; i < users; ++i) {
            int target = out.channel_of[static_cast<std::size_t>(i)];
            if (target < 0) {
                auto& cursor = next_pref[static_cast<std::size_t>(i)];
                while (cursor < pref[static_cast<std::size_t>(i)].size() &&
                       attempted[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(pref[static_cast<std::size_t>(i)][cursor])]) {
                    ++cursor;
                }
                if (cursor >= pref[static_cast<std::size_t>(i)].size()) {
                    throw ProtocolError("a user ran out of channels to bid on during allocation");
                }
                target = pref[static_cast<std::size_t>(i)][cursor];
                attempted[static_cast<std::size_t>(i)][static_cast<std::size_t>(target)] = 1;
            }
            bids[static_cast<std::size_t>(target)].push_back(
                {i, codec.encode(means[static_cast<std::size_t>(i)][static_cast<std::size_t>(target)])});
            out.contended[static_cast<std::size_t>(i)][static_cast<std::size_t>(target)] = 1;
        }

        std::vector<int> s2_channels;
        for (int k = 0; k < channels; ++k) {
            auto& channel_bids = bids[static_cast<std::size_t>(k)];
            if (channel_bids.empty()) continue;
            bool tied = false;
            const int winner = pick_winner(channel_bids, tie_rng, &tied);
            const int winner_slot = codec.encode(means[static_cast<std::size_t>(winner)][static_cast<std::size_t>(k)]);

            AllocationEvent ev;
            ev.round = round;
            ev.subphase = SubPhase::S1;
            ev.channel = k;
            for (const Bid& b : channel_bids) ev.contenders.push_back(b.user);
            std::sort(ev.contenders.begin(), ev.contenders.end());
            ev.winner = winner;
            ev.tie_break = tied;
            out.events.push_back(std::move(ev));

            for (const Bid& b : channel_bids) {
                if (b.user == winner) continue;
                // A displaced holder rejoins the bidders next slot.
                if (out.channel_of[static_cast<std::size_t>(b.user)] == k) {
                    out.channel_of[static_cast<std::size_t>(b.user)] = -1;
                }
                out.rival_mean[static_cast<std::size_t>(b.user)][static_cast<std::size_t>(k)] =
                    codec.decode(winner_slot);
            }
            out.channel_of[static_cast<std::size_t>(winner)] = k;
            if (channel_bids.size() >= 2) s2_channels.push_back(k);
        }

        // --- paired S2 slot, only when some channel was contested ---
        if (!s2_channels.empty()) {
            round++;
            for (int k : s2_channels) {
                const int holder = [&] {
                    for (int i = 0; i < users; ++i)
                        if (out.channel_of[static_cast<std::size_t>(i)] == k) return i;
                    return -1;
                }();
                // Re-bidders are this S1 slot's losers on channel k.
                std::vector<Bid> rebids;
                for (const Bid& b : bids[static_cast<std::size_t>(k)]) {
                    if (b.user != holder) rebids.push_back(b);
                }
                bool tied = false;
                const int best = pick_winner(rebids, tie_rng, &tied);
                const int best_slot = codec.encode(means[static_cast<std::size_t>(best)][static_cast<std::size_t>(k)]);
                out.rival_mean[static_cast<std::size_t>(holder)][static_cast<std::size_t>(k)] =
                    codec.decode(best_slot);

                AllocationEvent ev;
                ev.round = round;
                ev.subphase = SubPhase::S2;
                ev.channel = k;
                for (const Bid& b : rebids) ev.contenders.push_back(b.user);
                std::sort(ev.contenders.begin(), ev.contenders.end());
                ev.winner = best;
                ev.tie_break = tied;
                out.events.push_back(std::move(ev));
            }
        }

        bool all_assigned = true;
        for (int i = 0; i < users; ++i) {
            if (out.channel_of[static_cast<std::size_t>(i)] < 0) all_assigned = false;
        }
        if (all_assigned && s2_channels.empty()) break;
    }

    out.rounds = round;
    return out;
}

} // namespace dssl
