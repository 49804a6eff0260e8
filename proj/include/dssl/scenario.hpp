#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dssl/backoff.hpp"
#include "dssl/learner.hpp"
#include "dssl/markov.hpp"
#include "dssl/matching.hpp"

namespace dssl {

enum class Policy {
    Dssl,
    UniformExploration,
    OracleStable,
    OracleOptimal,
    RandomAccess,
};

Policy parse_policy(const std::string& name);
std::string policy_name(Policy policy);

// A fully validated experiment: the channel bank, its derived truth, the
// learner constants, and the run configuration.
struct Scenario {
    std::string name;
    int users = 0;
    int channels = 0;
    std::vector<std::vector<MarkovChannel>> bank; // users x channels
    RateMatrix rates;                             // ground truth (jittered when enabled)
    bool jittered = false;
    double jitter_scale = 0.0;                    // relative magnitude actually applied
    SystemBounds bounds;
    LearnerParams learner;
    BackoffCodec codec;
    Policy default_policy = Policy::Dssl;
    long horizon = 0;
    int runs = 1;
    std::uint64_t seed = 1;
    std::vector<long> checkpoints;
    long livelock_budget = 0; // 0 = disabled

    Matching stable() const { return stable_matching(rates); }
};

struct ScenarioOptions {
    std::optional<double> learning_scale_override;
    std::optional<double> epsilon;
    std::optional<double> gap_floor;
    std::optional<double> condition_floor;
    std::optional<double> backoff_rate_cap;
    int backoff_slots = 1 << 16;
    bool jitter = false;
    double jitter_relative_scale = 1e-9;
    Policy default_policy = Policy::Dssl;
    long horizon = 10000;
    int runs = 1;
    std::uint64_t seed = 1;
    std::vector<long> checkpoints; // empty = geometric (powers of two + horizon)
    long livelock_budget = 0;
    std::string name;
};

// Assembles and validates a scenario from an explicit channel bank.
Scenario make_scenario(std::vector<std::vector<MarkovChannel>> bank, const ScenarioOptions& options);

// Geometric checkpoint grid: powers of two up to the horizon, plus the horizon.
std::vector<long> geometric_checkpoints(long horizon);

} // namespace dssl
