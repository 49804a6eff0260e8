#include "dssl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

Policy parse_policy(const std::string& name) {
    if (name == "dssl") return Policy::Dssl;
    if (name == "uniform-exploration") return Policy::UniformExploration;
    if (name == "oracle-stable") return Policy::OracleStable;
    if (name == "oracle-optimal") return Policy::OracleOptimal;
    if (name == "random-access") return Policy::RandomAccess;
    throw ConfigError("unknown policy '" + name +
                      "' (expected dssl, uniform-exploration, oracle-stable, oracle-optimal, "
                      "random-access)");
}

std::string policy_name(Policy policy) {
    switch (policy) {
        case Policy::Dssl: return "dssl";
        case Policy::UniformExploration: return "uniform-exploration";
        case Policy::OracleStable: return "oracle-stable";
        case Policy::OracleOptimal: return "oracle-optimal";
        case Policy::RandomAccess: return "random-access";
    }
    return "?";
}

std::vector<long> geometric_checkpoints(long horizon) {
    std::vector<long> cp;
    for (long t = 1; t < horizon; t *= 2) cp.push_back(t);
    cp.push_back(horizon);
    return cp;
}

Scenario make_scenario(std::vector<std::vector<MarkovChannel>> bank, const ScenarioOptions& options) {
    if (bank.empty() || bank.front().empty()) throw ConfigError("scenario needs a non-empty channel bank");
    const int users = static_cast<int>(bank.size());
    const int channels = static_cast<int>(bank.front().size());
    for (const auto& row : bank) {
        if (static_cast<int>(row.size()) != channels) {
            throw ConfigError("scenario channel bank rows have unequal channel counts");
        }
    }
    if (users > channels) {
        std::ostringstream msg;
        msg << "scenario needs users <= channels, got " << users << " > " << channels;
        throw ConfigError(msg.str());
    }
    if (options.horizon < 1) throw ConfigError("scenario horizon must be >= 1");
    if (options.runs < 1) throw ConfigError("scenario runs must be >= 1");

    std::vector<std::vector<double>> means(static_cast<std::size_t>(users),
                                           std::vector<double>(static_cast<std::size_t>(channels), 0.0));
    for (int i = 0; i < users; ++i)
        for (int k = 0; k < channels; ++k)
            means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].mean_rate();

    RateMatrix rates = options.jitter
                           ? RateMatrix::with_jitter(means, options.jitter_relative_scale, options.seed)
                           : RateMatrix(means);

    Scenario s{.name = options.name,
               .users = users,
               .channels = channels,
               .bank = std::move(bank),
               .rates = std::move(rates),
               .jittered = options.jitter,
               .jitter_scale = options.jitter ? options.jitter_relative_scale : 0.0,
               .bounds = {},
               .learner = {},
               .codec = {},
               .default_policy = options.default_policy,
               .horizon = options.horizon,
               .runs = options.runs,
               .seed = options.seed,
               .checkpoints = {},
               .livelock_budget = options.livelock_budget};
    s.bounds = compute_bounds(s.bank);

    s.learner.learning_scale = options.learning_scale_override.value_or(s.bounds.learning_scale);
    s.learner.gap_floor = options.gap_floor.value_or(s.rates.min_gap());
    if (s.learner.gap_floor > s.rates.min_gap() + 1e-12) {
        std::ostringstream msg;
        msg << "gap_floor " << s.learner.gap_floor << " exceeds the true smallest gap "
            << s.rates.min_gap() << "; the learning guarantees need gap_floor <= min gap";
        throw ConfigError(msg.str());
    }
    s.learner.epsilon = options.epsilon.value_or(0.25 * s.learner.gap_floor * s.learner.gap_floor);
    s.learner.r_max = s.bounds.r_max;
    s.learner.condition_floor_override = options.condition_floor;
    s.learner.validate();

    const double cap = options.backoff_rate_cap.value_or(s.bounds.x_max);
    s.codec = BackoffCodec(cap, options.backoff_slots);

    s.checkpoints = options.checkpoints.empty() ? geometric_checkpoints(s.horizon) : options.checkpoints;
    std::sort(s.checkpoints.begin(), s.checkpoints.end());
    s.checkpoints.erase(std::unique(s.checkpoints.begin(), s.checkpoints.end()), s.checkpoints.end());
    for (long cp : s.checkpoints) {
        if (cp < 1 || cp > s.horizon) throw ConfigError("checkpoints must lie in [1, horizon]");
    }

    // The ground-truth matrix must agree with the chains it came from, up to
    // deliberate jitter.
    const double spread_tol = s.jittered ? 2.0 * options.jitter_relative_scale *
                                               (s.bounds.x_max + 1.0) * (users + channels)
                                         : 1e-10;
    for (int i = 0; i < users; ++i) {
        for (int k = 0; k < channels; ++k) {
            const double diff = std::abs(s.rates.at(i, k) -
                                         s.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].mean_rate());
            if (diff > std::max(spread_tol, 1e-10)) {
                throw ConfigError("rate matrix diverged from the channel means during scenario assembly");
            }
        }
    }
    return s;
}

} // namespace dssl
