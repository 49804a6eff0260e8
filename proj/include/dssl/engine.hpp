#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "dssl/scenario.hpp"
#include "dssl/trace.hpp"

namespace dssl {

// Per-slot view handed to an observer; `chain_states` covers every pair,
// whether sensed or not.
struct SlotRecord {
    long t = 0;
    const std::vector<int>* action = nullptr;   // per user; -1 during allocation slots
    const std::vector<double>* reward = nullptr;
    const std::vector<int>* phase = nullptr;    // 0 explore, 1 allocate, 2 exploit/await
    const std::vector<std::vector<int>>* chain_states = nullptr;
};
using SlotObserver = std::function<void(const SlotRecord&)>;

struct PhaseLogEntry {
    long t = 0;
    int user = -1; // -1 = system-wide
    char kind = '?'; // 'O' explore, 'I' exploit, 'W' await, 'A' alloc begin, 'Z' alloc end
    int channel = -1;
    long detail = 0; // planned length / round count
};

struct EpisodeResult {
    RegretTrace trace;
    std::vector<PhaseLogEntry> phase_log;
    std::vector<std::pair<long, AllocationEvent>> allocation_log;
    long allocation_phases = 0;
    long collision_slots = 0;          // user-slots lost to collisions
    long backoff_clamp_warnings = 0;
    std::vector<std::vector<long>> de_samples;
    std::vector<std::vector<double>> sample_means;
    std::vector<std::vector<std::vector<std::vector<long>>>> de_transitions;
    std::vector<int> final_assignment;
};

// Runs one episode: every chain advances every slot, policies map their own
// history to channel choices, simultaneous choosers collide for zero rate,
// and the whole run is a deterministic function of (scenario, policy, seed).
EpisodeResult run_episode(const Scenario& scenario, Policy policy, long horizon,
                          std::uint64_t seed, const SlotObserver& observer = {});

struct MonteCarloResult {
    AggregateTrace aggregate;
    std::vector<RegretTrace> traces;
};

// Independent episodes with derived seeds, averaged pointwise. `workers` = 0
// picks the hardware concurrency; results do not depend on the worker count.
MonteCarloResult monte_carlo(const Scenario& scenario, Policy policy, int runs, long horizon,
                             const std::vector<long>& checkpoints, unsigned workers = 0);

} // namespace dssl
