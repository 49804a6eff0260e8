#include "dssl/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dssl/allocation.hpp"
#include "dssl/errors.hpp"

namespace dssl {

namespace {

double log4(double x) { return std::log(x) / std::log(4.0); }

} // namespace

RegretBound regret_upper_bound(const Scenario& scenario, double t) {
    if (!(t >= 1.0)) throw ConfigError("regret bound needs t >= 1");
    const int users = scenario.users;
    const int channels = scenario.channels;
    const RateMatrix& rates = scenario.rates;
    const SystemBounds& bounds = scenario.bounds;
    const LearnerParams& lp = scenario.learner;
    const double big_l = lp.learning_scale;
    const double eps = lp.epsilon;
    const double floor = lp.condition_floor();
    const double min_gap_sq = rates.min_gap() * rates.min_gap();
    const Matching stable = stable_matching(rates);
    const double stable_sum = stable.value;
    const double log_t = std::log(t);

    // Contention sets under the allocation the true means would produce.
    Rng tie_rng(0);
    const AllocationOutcome alloc = run_allocation(rates.entries(), scenario.codec, tie_rng);

    RegretBound rb;
    rb.coefficient_cap.assign(static_cast<std::size_t>(users),
                              std::vector<double>(static_cast<std::size_t>(channels), 0.0));
    rb.well_separated.assign(static_cast<std::size_t>(users),
                             std::vector<char>(static_cast<std::size_t>(channels), 0));

    for (int i = 0; i < users; ++i) {
        for (int k = 0; k < channels; ++k) {
            double margin = std::numeric_limits<double>::infinity();
            for (int l = 0; l < channels; ++l) {
                if (l == k) continue;
                const double d = rates.at(i, k) - rates.at(i, l);
                margin = std::min(margin, d * d);
            }
            if (alloc.contended[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] && users > 1) {
                double best_rival = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < users; ++j) {
                    if (j != i) best_rival = std::max(best_rival, rates.at(j, k));
                }
                const double d = rates.at(i, k) - best_rival;
                margin = std::min(margin, d * d);
            }
            // A pair whose margin clears the floor when epsilon vanishes must
            // keep a positive denominator at the configured epsilon.
            if (margin > min_gap_sq && margin - 2.0 * eps <= 0.0) {
                std::ostringstream msg;
                msg << "epsilon " << eps << " too large: squared-gap margin " << margin
                    << " of user " << i << ", channel " << k
                    << " leaves a non-positive denominator " << (margin - 2.0 * eps)
                    << "; choose epsilon below " << margin / 2.0;
                throw ConfigError(msg.str());
            }
            const bool separated = margin - 2.0 * eps > min_gap_sq;
            rb.well_separated[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = separated;
            const double cap = separated ? 4.0 * big_l / (margin - 2.0 * eps)
                                         : 4.0 * big_l / min_gap_sq;
            rb.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                std::max(floor, cap);
        }
    }

    double epoch_cap_sum = 0.0; // sum over pairs of the epoch-count cap
    for (int i = 0; i < users; ++i) {
        for (int k = 0; k < channels; ++k) {
            const double cap = rb.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            epoch_cap_sum += std::floor(log4(3.0 * cap * log_t + 1.0)) + 1.0;
        }
    }

    rb.exploration_transient = bounds.a_max * epoch_cap_sum;

    rb.exploration_suboptimal = 0.0;
    for (int i = 0; i < users; ++i) {
        for (int k = 0; k < channels; ++k) {
            const double cap = rb.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            const double epochs = std::floor(log4(3.0 * cap * log_t + 1.0)) + 1.0;
            const double slots = 4.0 * cap * log_t + 1.0 +
                                 bounds.hitting_max[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * epochs;
            const int occupant = stable.user_of[static_cast<std::size_t>(k)];
            const double occupant_rate = occupant >= 0 ? rates.at(occupant, k) : 0.0;
            const double loss = rates.at(i, stable.channel_of[static_cast<std::size_t>(i)]) +
                                occupant_rate - rates.at(i, k);
            rb.exploration_suboptimal += slots * loss;
        }
    }

    rb.allocation_transient = static_cast<double>(users) * users * bounds.a_max * epoch_cap_sum;
    rb.allocation_suboptimal =
        2.0 * std::exp(1.0) * std::log(static_cast<double>(users) + 1.0) * epoch_cap_sum * stable_sum;

    const double exploit_phases = std::ceil(log4(1.5 * t + 1.0));
    rb.exploitation =
        (bounds.a_max + (static_cast<double>(users) * users * channels +
                         static_cast<double>(users) * channels) *
                            6.0 * bounds.x_cardinality_max / bounds.pi_min * stable_sum) *
        exploit_phases;

    rb.total = rb.exploration_transient + rb.exploration_suboptimal + rb.allocation_transient +
               rb.allocation_suboptimal + rb.exploitation;
    return rb;
}

} // namespace dssl
