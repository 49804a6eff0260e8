#pragma once

#include <optional>
#include <vector>

#include "dssl/allocation.hpp"
#include "dssl/matching.hpp"

namespace dssl {

// Per-agent learning constants. `learning_scale` is the scenario's L (from
// the channel bank or a config override); `rate_constant` is the
// concentration-rate constant I = 7 eps^2 / (48 (r_max + 2)^2 L). The
// sampling condition uses max(coefficient, condition_floor) * log t, where
// the floor defaults to 2 / I but can be overridden per scenario (the
// analytic value of I is far too conservative to ever finish exploring at
// desk scale).
struct LearnerParams {
    double learning_scale = 1.0;  // L
    double epsilon = 0.0;
    double gap_floor = 1.0;       // lower bound on the smallest rate gap (delta_lb)
    double r_max = 1.0;
    std::optional<double> condition_floor_override;

    double rate_constant() const;   // I
    double condition_floor() const; // override, or 2 / I
    void validate() const;
};

enum class CoefficientRule {
    Adaptive,     // per-channel coefficients from sample means and rival info
    FixedUniform, // one coefficient for every channel (oversampling baseline)
};

// One user's learning state: DE-only sample sums and counts, epoch counters,
// recurrence targets, rival side information, and exploitation counters.
class Learner {
public:
    Learner(int user, int num_users, int num_channels, const std::vector<int>& states_per_channel,
            LearnerParams params, CoefficientRule rule = CoefficientRule::Adaptive,
            double fixed_coefficient = 0.0);

    int user() const { return user_; }
    const LearnerParams& params() const { return params_; }

    // --- DE sample statistics ---
    double sample_mean(int k) const;
    long de_samples(int k) const { return de_count_[static_cast<std::size_t>(k)]; }
    int epochs(int k) const { return epochs_[static_cast<std::size_t>(k)]; }
    std::vector<double> means() const;
    bool all_channels_sampled() const;

    // --- adaptive coefficients ---
    // Estimated best-M channel set, sample-mean descending (ties by index).
    std::vector<int> estimated_top_set() const;
    double row_coefficient(int k) const;
    double column_coefficient(int k) const;
    double coefficient(int k) const;

    // true = channel k has enough DE samples at time t.
    bool sampling_condition(int k, long t) const;
    // Lowest-index channel that still needs exploring, if any.
    std::optional<int> channel_needing_exploration(long t) const;

    // --- exploration epochs ---
    // Epoch n senses 4^(n-1) recorded slots; epochs after the first are
    // preceded by a recurrence wait for the previous epoch's final state so
    // the recorded path concatenates into a single chain trajectory.
    void begin_exploration(int k);
    bool exploring() const { return exploring_channel_ >= 0; }
    int exploring_channel() const { return exploring_channel_; }
    bool in_recurrence_wait() const { return recurrence_wait_; }
    long planned_de_length() const { return de_remaining_at_start_; }
    // Feeds one sensed slot; returns true when the epoch completes.
    bool exploration_step(int state, double rate);

    // --- allocation side info ---
    void apply_allocation(const AllocationOutcome& outcome);
    bool has_assignment() const { return assignment_ >= 0; }
    int assignment() const { return assignment_; }
    bool has_rival(int k) const { return rival_mean_[static_cast<std::size_t>(k)] >= 0.0; }
    double rival(int k) const { return rival_mean_[static_cast<std::size_t>(k)]; }

    // --- exploitation bookkeeping ---
    long next_exploitation_length() const; // 2 * 4^(completed phases)
    void complete_exploitation() { ++exploitation_phases_; }
    int exploitation_phases() const { return exploitation_phases_; }

    // DE transition counts per channel, including the recurrence-bridged
    // junctions between epochs; feeds the path-validity statistics.
    const std::vector<std::vector<std::vector<long>>>& de_transition_counts() const {
        return de_transitions_;
    }

private:
    int user_;
    int num_users_;
    int num_channels_;
    LearnerParams params_;
    CoefficientRule rule_;
    double fixed_coefficient_;

    std::vector<double> de_sum_;
    std::vector<long> de_count_;
    std::vector<int> epochs_;       // n_O per channel
    std::vector<int> last_de_state_; // recurrence target per channel; -1 before the first epoch
    std::vector<double> rival_mean_; // -1 = never observed
    std::vector<std::vector<std::vector<long>>> de_transitions_;

    int assignment_ = -1;
    int exploitation_phases_ = 0;   // n_I

    // live epoch
    int exploring_channel_ = -1;
    bool recurrence_wait_ = false;
    long de_remaining_ = 0;
    long de_remaining_at_start_ = 0;
    int prev_de_state_ = -1;
};

// Ground-truth exploration coefficients (row, column, combined) evaluated on
// the true rate matrix, with contention sets taken from the allocation phase
// the true means would produce. This is the table the adaptive estimates
// converge to.
std::vector<std::vector<double>> deterministic_coefficients(const RateMatrix& rates,
                                                            double learning_scale);

// The oversampling baseline's single coefficient: 4L over the squared gap
// between the best and second-best assignment values.
double uniform_exploration_coefficient(const RateMatrix& rates, double learning_scale);

} // namespace dssl
