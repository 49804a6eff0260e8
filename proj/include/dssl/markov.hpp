#pragma once

#include <cstdint>
#include <vector>

#include "dssl/rng.hpp"

namespace dssl {

using TransitionMatrix = std::vector<std::vector<double>>;

// Stationary distribution of an irreducible, aperiodic, row-stochastic
// matrix, computed by a dense linear solve (one balance equation replaced by
// the normalization constraint).
std::vector<double> stationary_distribution(const TransitionMatrix& transition);

// Second-largest eigenvalue modulus of the chain's additive
// reversibilization (P + P*)/2, where P* is the time reversal under the
// stationary law, together with the gap 1 - lambda2. The reversibilized
// operator has a real spectrum; for reversible chains it equals P itself.
struct SpectralGap {
    double lambda2 = 0.0;
    double gap = 1.0;
};
SpectralGap spectral_gap(const TransitionMatrix& transition);

// Mean hitting times M[x][y] (expected steps to first reach y from x),
// solved from the first-step linear system; diagonal is zero.
std::vector<std::vector<double>> mean_hitting_times(const TransitionMatrix& transition);

// One user-channel pair: a finite-state chain whose states carry rate
// values, plus the derived spectral and first-passage quantities.
class MarkovChannel {
public:
    MarkovChannel(std::vector<double> state_rates, TransitionMatrix transition);

    int num_states() const { return static_cast<int>(states_.size()); }
    const std::vector<double>& states() const { return states_; }
    const TransitionMatrix& transition() const { return transition_; }
    const std::vector<double>& stationary() const { return stationary_; }
    double second_eigenvalue() const { return spectral_.lambda2; }
    double eigen_gap() const { return spectral_.gap; }
    const std::vector<std::vector<double>>& hitting() const { return hitting_; }
    double max_hitting() const { return max_hitting_; }
    double mean_rate() const { return mean_rate_; }
    double rate_of(int state) const { return states_[static_cast<std::size_t>(state)]; }

    // Advances one slot from `state`; deterministic given the stream.
    int step(int state, Rng& rng) const;

    // Draws an initial state from the stationary law.
    int sample_stationary(Rng& rng) const;

private:
    std::vector<double> states_;
    TransitionMatrix transition_;
    std::vector<double> stationary_;
    SpectralGap spectral_;
    std::vector<std::vector<double>> hitting_;
    double max_hitting_ = 0.0;
    double mean_rate_ = 0.0;
    std::vector<std::vector<double>> row_cumulative_;
    std::vector<double> stationary_cumulative_;
};

// Scenario-wide constants derived from the full M x K channel bank.
struct SystemBounds {
    double pi_min = 0.0;        // smallest stationary entry anywhere
    double pi_hat_max = 0.0;    // largest max(pi, 1 - pi) anywhere
    int x_cardinality_max = 0;  // largest state-space size
    double x_max = 0.0;         // largest state value
    double r_max = 0.0;         // largest per-pair sum of state values
    double lambda_max = 0.0;    // largest second eigenvalue
    double lambda_bar_min = 0.0; // 1 - lambda_max
    std::vector<std::vector<double>> hitting_max; // per pair, max off-diagonal hitting time
    double hitting_max_global = 0.0;
    double a_max = 0.0;         // max over pairs of (min stationary)^-1 * sum(states)
    double learning_scale = 0.0; // L = 28 x_max^2 r_max^2 pi_hat_max^2 / lambda_bar_min
};

SystemBounds compute_bounds(const std::vector<std::vector<MarkovChannel>>& channels);

} // namespace dssl
