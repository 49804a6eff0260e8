#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dssl {

// Checkpointed history of one episode.
struct RegretTrace {
    std::vector<long> t;
    std::vector<double> cumulative_reward;          // realized aggregate through t
    std::vector<double> regret;                     // t * stable value - aggregate
    std::vector<std::vector<double>> per_user_reward; // [checkpoint][user]
    // Aggregate user-slot counts per checkpoint; waiting-for-allocation slots
    // count as exploitation.
    std::vector<long> exploration_slots;
    std::vector<long> allocation_slots;
    std::vector<long> exploitation_slots;
};

// Pointwise mean/err across Monte Carlo episodes.
struct AggregateTrace {
    std::vector<long> t;
    std::vector<double> regret_mean;
    std::vector<double> regret_std;
    std::vector<double> regret_ci95;
    std::vector<std::vector<double>> per_user_rate_mean; // mean per-user reward / t
    std::vector<double> exploration_slots_mean;
    std::vector<double> allocation_slots_mean;
    std::vector<double> exploitation_slots_mean;
    int runs = 0;
};

AggregateTrace aggregate_traces(const std::vector<RegretTrace>& traces);

// Stable schema: t,regret_mean,regret_std,exploration_slots,allocation_slots,exploitation_slots
void write_trace_csv(std::ostream& out, const AggregateTrace& trace);
std::string trace_csv_string(const AggregateTrace& trace);

} // namespace dssl
