#pragma once

#include <vector>

#include "dssl/scenario.hpp"

namespace dssl {

// Finite-sample regret upper bound evaluated from the scenario's true
// parameters, split into its five additive terms.
struct RegretBound {
    double exploration_transient = 0.0;
    double exploration_suboptimal = 0.0;
    double allocation_transient = 0.0;
    double allocation_suboptimal = 0.0;
    double exploitation = 0.0;
    double total = 0.0;
    // Per-pair cap on the exploration coefficient driving the log terms.
    std::vector<std::vector<double>> coefficient_cap;
    // Pairs whose true gaps clear the epsilon margin over the gap floor; for
    // those the cap comes from their own gaps, for the rest from the global
    // minimum gap.
    std::vector<std::vector<char>> well_separated;
};

RegretBound regret_upper_bound(const Scenario& scenario, double t);

} // namespace dssl
