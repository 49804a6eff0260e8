#pragma once

#include <cstdint>
#include <vector>

namespace dssl {

// Expected-rate matrix with per-user preference orders and gap statistics.
// Entries must be finite, non-negative, and pairwise distinct within every
// row and every column; callers with tied data can apply the seeded jitter.
class RateMatrix {
public:
    explicit RateMatrix(std::vector<std::vector<double>> entries);

    int users() const { return static_cast<int>(entries_.size()); }
    int channels() const { return static_cast<int>(entries_.front().size()); }
    double at(int user, int channel) const {
        return entries_[static_cast<std::size_t>(user)][static_cast<std::size_t>(channel)];
    }
    const std::vector<std::vector<double>>& entries() const { return entries_; }

    // Channels of `user` sorted by strictly descending rate.
    const std::vector<int>& preference(int user) const {
        return preferences_[static_cast<std::size_t>(user)];
    }
    // Smallest within-row gap of `user`.
    double user_gap(int user) const { return user_gaps_[static_cast<std::size_t>(user)]; }
    // Smallest within-row gap over all users.
    double min_gap() const { return min_gap_; }
    // The user's best `m` channels by rate.
    std::vector<int> top_set(int user, int m) const;

    // Returns a copy with deterministic per-entry jitter of magnitude
    // `relative_scale * (max entry - min entry)`, for callers whose raw data
    // carries ties the validator would reject.
    static RateMatrix with_jitter(const std::vector<std::vector<double>>& entries,
                                  double relative_scale, std::uint64_t seed);

private:
    std::vector<std::vector<double>> entries_;
    std::vector<std::vector<int>> preferences_;
    std::vector<double> user_gaps_;
    double min_gap_ = 0.0;
};

std::vector<int> preference_order(const RateMatrix& rates, int user);

struct GapStats {
    std::vector<double> per_user;
    double min = 0.0;
};
GapStats gap_stats(const RateMatrix& rates);

// An injective user -> channel assignment.
struct Matching {
    std::vector<int> channel_of;  // per user
    std::vector<int> user_of;     // per channel; -1 when unassigned
    double value = 0.0;           // sum of assigned rates

    bool operator==(const Matching& other) const { return channel_of == other.channel_of; }
};

Matching make_matching(const RateMatrix& rates, const std::vector<int>& channel_of);

// Unique stable matching (user-proposing deferred acceptance). Requires
// users <= channels and distinct entries.
Matching stable_matching(const RateMatrix& rates);

// Value-maximizing assignment via a shortest-augmenting-path solver.
Matching optimal_assignment(const RateMatrix& rates);

// Difference between the best and the second-best assignment value,
// enumerated exhaustively; guarded against oversized instances.
double assignment_value_gap(const RateMatrix& rates);

// Regret after t slots: t * (stable matching value) - realized aggregate.
double regret(double realized_aggregate, const RateMatrix& rates, const Matching& stable, long t);

} // namespace dssl
