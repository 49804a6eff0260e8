#include "dssl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

double LearnerParams::rate_constant() const {
    const double d = r_max + 2.0;
    return 7.0 * epsilon * epsilon / (48.0 * d * d * learning_scale);
}

double LearnerParams::condition_floor() const {
    if (condition_floor_override) return *condition_floor_override;
    return 2.0 / rate_constant();
}

void LearnerParams::validate() const {
    if (!(learning_scale > 0.0)) throw ConfigError("learner needs learning_scale > 0");
    if (!(epsilon > 0.0)) throw ConfigError("learner needs epsilon > 0");
    if (!(gap_floor > 0.0)) throw ConfigError("learner needs gap_floor > 0");
    if (!(r_max > 0.0)) throw ConfigError("learner needs r_max > 0");
    if (!(rate_constant() > 0.0) || !std::isfinite(2.0 / rate_constant())) {
        throw ConfigError("learner rate constant is degenerate; check epsilon and learning_scale");
    }
    if (condition_floor_override && !(*condition_floor_override > 0.0)) {
        throw ConfigError("condition_floor override must be positive");
    }
}

Learner::Learner(int user, int num_users, int num_channels,
                 const std::vector<int>& states_per_channel, LearnerParams params,
                 CoefficientRule rule, double fixed_coefficient)
    : user_(user),
      num_users_(num_users),
      num_channels_(num_channels),
      params_(params),
      rule_(rule),
      fixed_coefficient_(fixed_coefficient) {
    params_.validate();
    if (num_channels_ < 1 || num_users_ < 1) throw ConfigError("learner needs users >= 1, channels >= 1");
    if (static_cast<int>(states_per_channel.size()) != num_channels_) {
        throw ConfigError("states_per_channel must have one entry per channel");
    }
    if (rule_ == CoefficientRule::FixedUniform && !(fixed_coefficient_ > 0.0)) {
        throw ConfigError("fixed-coefficient learner needs a positive coefficient");
    }
    de_sum_.assign(static_cast<std::size_t>(num_channels_), 0.0);
    de_count_.assign(static_cast<std::size_t>(num_channels_), 0);
    epochs_.assign(static_cast<std::size_t>(num_channels_), 0);
    last_de_state_.assign(static_cast<std::size_t>(num_channels_), -1);
    rival_mean_.assign(static_cast<std::size_t>(num_channels_), -1.0);
    de_transitions_.resize(static_cast<std::size_t>(num_channels_));
    for (int k = 0; k < num_channels_; ++k) {
        const int s = states_per_channel[static_cast<std::size_t>(k)];
        de_transitions_[static_cast<std::size_t>(k)].assign(
            static_cast<std::size_t>(s), std::vector<long>(static_cast<std::size_t>(s), 0));
    }
}

double Learner::sample_mean(int k) const {
    const long n = de_count_[static_cast<std::size_t>(k)];
    if (n == 0) throw ProtocolError("sample mean requested for an unexplored channel");
    return de_sum_[static_cast<std::size_t>(k)] / static_cast<double>(n);
}

std::vector<double> Learner::means() const {
    std::vector<double> m(static_cast<std::size_t>(num_channels_));
    for (int k = 0; k < num_channels_; ++k) m[static_cast<std::size_t>(k)] = sample_mean(k);
    return m;
}

bool Learner::all_channels_sampled() const {
    return std::all_of(de_count_.begin(), de_count_.end(), [](long n) { return n > 0; });
}

std::vector<int> Learner::estimated_top_set() const {
    std::vector<int> order(static_cast<std::size_t>(num_channels_));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return sample_mean(a) > sample_mean(b);
    });
    order.resize(static_cast<std::size_t>(std::min(num_users_, num_channels_)));
    return order;
}

double Learner::row_coefficient(int k) const {
    const auto top = estimated_top_set();
    const double mk = sample_mean(k);
    double gap_sq;
    if (std::find(top.begin(), top.end(), k) != top.end()) {
        gap_sq = std::numeric_limits<double>::infinity();
        for (int l = 0; l < num_channels_; ++l) {
            if (l == k) continue;
            const double d = mk - sample_mean(l);
            gap_sq = std::min(gap_sq, d * d);
        }
        if (!std::isfinite(gap_sq)) gap_sq = 0.0; // single-channel system
    } else {
        const double d = mk - sample_mean(top.back());
        gap_sq = d * d;
    }
    const double denom = std::max(params_.gap_floor * params_.gap_floor, gap_sq - params_.epsilon);
    return 4.0 * params_.learning_scale / denom;
}

double Learner::column_coefficient(int k) const {
    const double floor_sq = params_.gap_floor * params_.gap_floor;
    if (!has_rival(k)) return 4.0 * params_.learning_scale / floor_sq;
    const double d = sample_mean(k) - rival_mean_[static_cast<std::size_t>(k)];
    const double denom = std::max(floor_sq, d * d - params_.epsilon);
    return 4.0 * params_.learning_scale / denom;
}

double Learner::coefficient(int k) const {
    if (rule_ == CoefficientRule::FixedUniform) return fixed_coefficient_;
    const double row = row_coefficient(k);
    const auto top = estimated_top_set();
    const bool in_top = std::find(top.begin(), top.end(), k) != top.end();
    // The rival term only constrains channels the user actually contends on,
    // and only once a rival has been observed there.
    if (in_top && has_rival(k)) return std::max(row, column_coefficient(k));
    return row;
}

bool Learner::sampling_condition(int k, long t) const {
    const double threshold = std::max(coefficient(k), params_.condition_floor()) *
                             std::log(static_cast<double>(t));
    return static_cast<double>(de_count_[static_cast<std::size_t>(k)]) > threshold;
}

std::optional<int> Learner::channel_needing_exploration(long t) const {
    for (int k = 0; k < num_channels_; ++k) {
        if (de_count_[static_cast<std::size_t>(k)] == 0) return k; // initial coverage
    }
    for (int k = 0; k < num_channels_; ++k) {
        if (!sampling_condition(k, t)) return k;
    }
    return std::nullopt;
}

void Learner::begin_exploration(int k) {
    if (exploring()) throw ProtocolError("begin_exploration called while an epoch is already live");
    if (k < 0 || k >= num_channels_) throw ConfigError("begin_exploration: channel out of range");
    exploring_channel_ = k;
    const int n_completed = epochs_[static_cast<std::size_t>(k)];
    de_remaining_ = 1;
    for (int e = 0; e < n_completed; ++e) de_remaining_ *= 4;
    de_remaining_at_start_ = de_remaining_;
    recurrence_wait_ = n_completed > 0;
    prev_de_state_ = -1;
}

bool Learner::exploration_step(int state, double rate) {
    if (!exploring()) throw ProtocolError("exploration_step called with no live epoch");
    const auto k = static_cast<std::size_t>(exploring_channel_);
    if (recurrence_wait_) {
        if (state == last_de_state_[k]) {
            // The recurrence sighting itself stays out of the statistics; the
            // next slot continues the recorded path from this state.
            recurrence_wait_ = false;
            prev_de_state_ = state;
        }
        return false;
    }
    de_sum_[k] += rate;
    de_count_[k] += 1;
    if (prev_de_state_ >= 0) {
        de_transitions_[k][static_cast<std::size_t>(prev_de_state_)][static_cast<std::size_t>(state)] += 1;
    }
    prev_de_state_ = state;
    if (--de_remaining_ == 0) {
        last_de_state_[k] = state;
        epochs_[k] += 1;
        exploring_channel_ = -1;
        return true;
    }
    return false;
}

void Learner::apply_allocation(const AllocationOutcome& outcome) {
    assignment_ = outcome.channel_of[static_cast<std::size_t>(user_)];
    for (int k = 0; k < num_channels_; ++k) {
        if (outcome.has_rival(user_, k)) {
            rival_mean_[static_cast<std::size_t>(k)] =
                outcome.rival_mean[static_cast<std::size_t>(user_)][static_cast<std::size_t>(k)];
        }
    }
}

long Learner::next_exploitation_length() const {
    long len = 2;
    for (int e = 0; e < exploitation_phases_; ++e) len *= 4;
    return len;
}

std::vector<std::vector<double>> deterministic_coefficients(const RateMatrix& rates,
                                                            double learning_scale) {
    const int users = rates.users();
    const int channels = rates.channels();

    // Contention sets from the allocation the true means would produce.
    double rate_hi = 0.0;
    for (int i = 0; i < users; ++i)
        for (int k = 0; k < channels; ++k) rate_hi = std::max(rate_hi, rates.at(i, k));
    Rng tie_rng(0);
    const BackoffCodec codec(rate_hi + 1.0, 1 << 16);
    const AllocationOutcome alloc = run_allocation(rates.entries(), codec, tie_rng);

    std::vector<std::vector<double>> coeff(static_cast<std::size_t>(users),
                                           std::vector<double>(static_cast<std::size_t>(channels), 0.0));
    for (int i = 0; i < users; ++i) {
        const auto top = rates.top_set(i, users);
        const int mth_best = top.back();
        for (int k = 0; k < channels; ++k) {
            double gap_sq;
            if (std::find(top.begin(), top.end(), k) != top.end()) {
                gap_sq = std::numeric_limits<double>::infinity();
                for (int l = 0; l < channels; ++l) {
                    if (l == k) continue;
                    const double d = rates.at(i, k) - rates.at(i, l);
                    gap_sq = std::min(gap_sq, d * d);
                }
            } else {
                const double d = rates.at(i, k) - rates.at(i, mth_best);
                gap_sq = d * d;
            }
            double value = 4.0 * learning_scale / gap_sq;

            // Rival term for channels the user contends on against somebody.
            if (alloc.contended[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) {
                double best_rival = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < users; ++j) {
                    if (j == i) continue;
                    if (alloc.contended[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]) {
                        best_rival = std::max(best_rival, rates.at(j, k));
                    }
                }
                if (std::isfinite(best_rival)) {
                    const double d = rates.at(i, k) - best_rival;
                    value = std::max(value, 4.0 * learning_scale / (d * d));
                }
            }
            coeff[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = value;
        }
    }
    return coeff;
}

double uniform_exploration_coefficient(const RateMatrix& rates, double learning_scale) {
    const double gap = assignment_value_gap(rates);
    return 4.0 * learning_scale / (gap * gap);
}

} // namespace dssl
