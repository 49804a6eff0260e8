#include "dssl/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dssl/errors.hpp"

namespace dssl {

namespace {

constexpr std::uint64_t kChainStreamBase = 0x1000;
constexpr std::uint64_t kAgentStreamBase = 0x2000;
constexpr std::uint64_t kAllocationStream = 0x3000;

enum class AgentPhase { Idle, Exploring, Exploiting, Awaiting };

struct AgentState {
    AgentPhase phase = AgentPhase::Idle;
    int channel = -1;
    long exploit_remaining = 0;
    bool exploit_done = false;
    bool has_stash = false;
    int stash_channel = -1;
    long stash_remaining = 0;
    long awaiting_streak = 0;
    long explore_slots = 0;
    long alloc_slots = 0;
    long exploit_slots = 0;
};

struct Episode {
    const Scenario& scenario;
    Policy policy;
    long horizon;
    std::uint64_t seed;
    const SlotObserver& observer;

    int users;
    int channels;
    bool learner_based;

    std::vector<std::vector<Rng>> chain_rng;
    std::vector<std::vector<int>> state;
    std::vector<Rng> agent_rng;
    Rng alloc_rng;

    std::vector<Learner> learners;
    std::vector<AgentState> agents;

    bool allocation_active = false;
    bool allocation_just_ended = false;
    long allocation_remaining = 0;
    AllocationOutcome pending_outcome;
    bool interrupt_pending = false;

    std::vector<int> static_choice; // oracle policies
    Matching stable;

    EpisodeResult result;

    Episode(const Scenario& sc, Policy pol, long hor, std::uint64_t sd, const SlotObserver& obs)
        : scenario(sc), policy(pol), horizon(hor), seed(sd), observer(obs),
          users(sc.users), channels(sc.channels),
          learner_based(pol == Policy::Dssl || pol == Policy::UniformExploration),
          alloc_rng(Rng::stream(sd, kAllocationStream)),
          stable(stable_matching(sc.rates)) {}

    void setup() {
        chain_rng.resize(static_cast<std::size_t>(users));
        state.resize(static_cast<std::size_t>(users));
        for (int i = 0; i < users; ++i) {
            for (int k = 0; k < channels; ++k) {
                chain_rng[static_cast<std::size_t>(i)].push_back(Rng::stream(
                    seed, kChainStreamBase + static_cast<std::uint64_t>(i) * channels + k));
            }
            state[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(channels));
            for (int k = 0; k < channels; ++k) {
                state[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    scenario.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]
                        .sample_stationary(chain_rng[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            }
        }
        for (int i = 0; i < users; ++i) {
            agent_rng.push_back(Rng::stream(seed, kAgentStreamBase + static_cast<std::uint64_t>(i)));
        }
        agents.assign(static_cast<std::size_t>(users), AgentState{});

        if (learner_based) {
            std::vector<int> states_per_channel; // per channel, from this user's chains
            const double fixed = policy == Policy::UniformExploration
                                     ? uniform_exploration_coefficient(scenario.rates,
                                                                       scenario.learner.learning_scale)
                                     : 0.0;
            for (int i = 0; i < users; ++i) {
                states_per_channel.clear();
                for (int k = 0; k < channels; ++k) {
                    states_per_channel.push_back(
                        scenario.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].num_states());
                }
                learners.emplace_back(i, users, channels, states_per_channel, scenario.learner,
                                      policy == Policy::Dssl ? CoefficientRule::Adaptive
                                                             : CoefficientRule::FixedUniform,
                                      fixed);
            }
        } else if (policy == Policy::OracleStable) {
            static_choice = stable.channel_of;
        } else if (policy == Policy::OracleOptimal) {
            static_choice = optimal_assignment(scenario.rates).channel_of;
        }
    }

    void log_phase(long t, int user, char kind, int channel, long detail) {
        result.phase_log.push_back(PhaseLogEntry{t, user, kind, channel, detail});
    }

    // Picks the agent's next phase at a slot boundary. Returns to the caller
    // without touching a mid-flight exploitation unless the learner wants a
    // new exploration epoch.
    void decide(int i, long t, bool stash_on_switch) {
        AgentState& a = agents[static_cast<std::size_t>(i)];
        Learner& l = learners[static_cast<std::size_t>(i)];
        const auto need = l.channel_needing_exploration(t);
        if (need) {
            if (stash_on_switch && a.phase == AgentPhase::Exploiting && a.exploit_remaining > 0) {
                a.has_stash = true;
                a.stash_channel = a.channel;
                a.stash_remaining = a.exploit_remaining;
            }
            l.begin_exploration(*need);
            a.phase = AgentPhase::Exploring;
            a.channel = *need;
            log_phase(t, i, 'O', *need, l.planned_de_length());
            return;
        }
        if (a.phase == AgentPhase::Exploiting && a.exploit_remaining > 0) return; // keep going
        if (a.has_stash) {
            a.phase = AgentPhase::Exploiting;
            a.channel = a.stash_channel;
            a.exploit_remaining = a.stash_remaining;
            a.has_stash = false;
            log_phase(t, i, 'I', a.channel, a.exploit_remaining);
            return;
        }
        if (l.has_assignment()) {
            a.phase = AgentPhase::Exploiting;
            a.channel = l.assignment();
            a.exploit_remaining = l.next_exploitation_length();
            log_phase(t, i, 'I', a.channel, a.exploit_remaining);
            return;
        }
        // No assignment yet: transmit on the current best estimate until the
        // first allocation phase arrives.
        a.phase = AgentPhase::Awaiting;
        a.channel = l.estimated_top_set().front();
        log_phase(t, i, 'W', a.channel, 0);
    }

    void start_allocation(long t) {
        std::vector<std::vector<double>> means;
        means.reserve(static_cast<std::size_t>(users));
        bool clamped_any = false;
        for (int i = 0; i < users; ++i) {
            means.push_back(learners[static_cast<std::size_t>(i)].means());
            for (double m : means.back()) {
                bool clamped = false;
                scenario.codec.encode(m, &clamped);
                clamped_any |= clamped;
            }
        }
        if (clamped_any) result.backoff_clamp_warnings++;
        pending_outcome = run_allocation(means, scenario.codec, alloc_rng);
        allocation_active = true;
        allocation_remaining = pending_outcome.rounds;
        result.allocation_phases++;
        log_phase(t, -1, 'A', -1, pending_outcome.rounds);
        for (const auto& ev : pending_outcome.events) {
            result.allocation_log.emplace_back(t + ev.round - 1, ev);
        }
        for (auto& a : agents) {
            a.has_stash = false;
            a.phase = AgentPhase::Idle;
            a.exploit_remaining = 0;
            a.exploit_done = false;
        }
    }

    void boundary(long t) {
        if (!learner_based) return;
        if (allocation_active) return;
        if (allocation_just_ended) {
            allocation_just_ended = false;
            for (int i = 0; i < users; ++i) {
                Learner& l = learners[static_cast<std::size_t>(i)];
                l.apply_allocation(pending_outcome);
                AgentState& a = agents[static_cast<std::size_t>(i)];
                a.phase = AgentPhase::Exploiting;
                a.channel = l.assignment();
                a.exploit_remaining = l.next_exploitation_length();
                log_phase(t, i, 'I', a.channel, a.exploit_remaining);
            }
            result.final_assignment = pending_outcome.channel_of;
            log_phase(t, -1, 'Z', -1, 0);
            return;
        }
        if (t == 1) {
            for (int i = 0; i < users; ++i) decide(i, t, false);
            return;
        }
        for (int i = 0; i < users; ++i) {
            AgentState& a = agents[static_cast<std::size_t>(i)];
            if (a.exploit_done) {
                a.exploit_done = false;
                learners[static_cast<std::size_t>(i)].complete_exploitation();
                decide(i, t, false);
            }
        }
        if (interrupt_pending) {
            interrupt_pending = false;
            bool anyone_exploring = false;
            for (int i = 0; i < users; ++i) {
                if (learners[static_cast<std::size_t>(i)].exploring()) {
                    anyone_exploring = true;
                    continue;
                }
                decide(i, t, true);
                if (learners[static_cast<std::size_t>(i)].exploring()) anyone_exploring = true;
            }
            if (!anyone_exploring) start_allocation(t);
        }
    }

    EpisodeResult run() {
        setup();
        if (learner_based) {
            result.final_assignment.assign(static_cast<std::size_t>(users), -1);
        } else {
            result.final_assignment = static_choice;
        }

        const auto& checkpoints = scenario.checkpoints;
        std::size_t next_cp = 0;
        while (next_cp < checkpoints.size() && checkpoints[next_cp] < 1) next_cp++;

        double cum_reward = 0.0;
        std::vector<double> per_user_cum(static_cast<std::size_t>(users), 0.0);

        std::vector<int> action(static_cast<std::size_t>(users), -1);
        std::vector<double> reward(static_cast<std::size_t>(users), 0.0);
        std::vector<int> phase_tag(static_cast<std::size_t>(users), 0);
        std::vector<int> choosers_count(static_cast<std::size_t>(channels), 0);

        for (long t = 1; t <= horizon; ++t) {
            boundary(t);

            // Restless step: every chain advances whether sensed or not.
            for (int i = 0; i < users; ++i) {
                for (int k = 0; k < channels; ++k) {
                    auto& s = state[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                    s = scenario.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].step(
                        s, chain_rng[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
                }
            }

            std::fill(choosers_count.begin(), choosers_count.end(), 0);
            if (learner_based && allocation_active) {
                for (int i = 0; i < users; ++i) {
                    action[static_cast<std::size_t>(i)] = -1;
                    reward[static_cast<std::size_t>(i)] = 0.0;
                    phase_tag[static_cast<std::size_t>(i)] = 1;
                    agents[static_cast<std::size_t>(i)].alloc_slots++;
                }
                if (--allocation_remaining == 0) {
                    allocation_active = false;
                    allocation_just_ended = true;
                }
            } else {
                for (int i = 0; i < users; ++i) {
                    int a;
                    if (learner_based) {
                        const AgentState& ag = agents[static_cast<std::size_t>(i)];
                        a = ag.phase == AgentPhase::Exploring
                                ? learners[static_cast<std::size_t>(i)].exploring_channel()
                                : ag.channel;
                    } else if (policy == Policy::RandomAccess) {
                        a = static_cast<int>(agent_rng[static_cast<std::size_t>(i)].next_below(
                            static_cast<std::uint32_t>(channels)));
                    } else {
                        a = static_choice[static_cast<std::size_t>(i)];
                    }
                    if (a < 0 || a >= channels) {
                        throw ProtocolError("policy chose an out-of-range channel");
                    }
                    action[static_cast<std::size_t>(i)] = a;
                    choosers_count[static_cast<std::size_t>(a)]++;
                }
                for (int i = 0; i < users; ++i) {
                    const int a = action[static_cast<std::size_t>(i)];
                    const int s = state[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
                    const double rate =
                        scenario.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)].rate_of(s);
                    if (choosers_count[static_cast<std::size_t>(a)] == 1) {
                        reward[static_cast<std::size_t>(i)] = rate;
                    } else {
                        reward[static_cast<std::size_t>(i)] = 0.0;
                        result.collision_slots++;
                    }
                    if (learner_based) {
                        AgentState& ag = agents[static_cast<std::size_t>(i)];
                        switch (ag.phase) {
                            case AgentPhase::Exploring: {
                                ag.explore_slots++;
                                phase_tag[static_cast<std::size_t>(i)] = 0;
                                Learner& l = learners[static_cast<std::size_t>(i)];
                                if (l.exploration_step(s, rate)) {
                                    interrupt_pending = true;
                                    ag.phase = AgentPhase::Idle;
                                }
                                break;
                            }
                            case AgentPhase::Exploiting:
                                ag.exploit_slots++;
                                phase_tag[static_cast<std::size_t>(i)] = 2;
                                if (--ag.exploit_remaining == 0) ag.exploit_done = true;
                                break;
                            case AgentPhase::Awaiting:
                                ag.exploit_slots++;
                                ag.awaiting_streak++;
                                phase_tag[static_cast<std::size_t>(i)] = 2;
                                break;
                            case AgentPhase::Idle:
                                throw ProtocolError("agent reached the action stage without a phase");
                        }
                        if (ag.phase != AgentPhase::Awaiting) ag.awaiting_streak = 0;
                    } else {
                        agents[static_cast<std::size_t>(i)].exploit_slots++;
                        phase_tag[static_cast<std::size_t>(i)] = 2;
                    }
                }
            }

            for (int i = 0; i < users; ++i) {
                cum_reward += reward[static_cast<std::size_t>(i)];
                per_user_cum[static_cast<std::size_t>(i)] += reward[static_cast<std::size_t>(i)];
            }

            if (scenario.livelock_budget > 0 && learner_based) {
                bool stuck = result.allocation_phases == 0 && t > scenario.livelock_budget;
                for (const auto& a : agents) stuck |= a.awaiting_streak > scenario.livelock_budget;
                if (stuck) {
                    std::ostringstream msg;
                    msg << "no allocation progress within " << scenario.livelock_budget
                        << " slots (t=" << t << ", allocations=" << result.allocation_phases << ")";
                    throw LivelockError(msg.str());
                }
            }

            if (observer) {
                SlotRecord rec;
                rec.t = t;
                rec.action = &action;
                rec.reward = &reward;
                rec.phase = &phase_tag;
                rec.chain_states = &state;
                observer(rec);
            }

            if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
                next_cp++;
                result.trace.t.push_back(t);
                result.trace.cumulative_reward.push_back(cum_reward);
                result.trace.regret.push_back(static_cast<double>(t) * stable.value - cum_reward);
                result.trace.per_user_reward.push_back(per_user_cum);
                long ex = 0, al = 0, io = 0;
                for (const auto& a : agents) {
                    ex += a.explore_slots;
                    al += a.alloc_slots;
                    io += a.exploit_slots;
                }
                result.trace.exploration_slots.push_back(ex);
                result.trace.allocation_slots.push_back(al);
                result.trace.exploitation_slots.push_back(io);
            }
        }

        result.de_samples.assign(static_cast<std::size_t>(users),
                                 std::vector<long>(static_cast<std::size_t>(channels), 0));
        result.sample_means.assign(static_cast<std::size_t>(users),
                                   std::vector<double>(static_cast<std::size_t>(channels),
                                                       std::numeric_limits<double>::quiet_NaN()));
        if (learner_based) {
            for (int i = 0; i < users; ++i) {
                const Learner& l = learners[static_cast<std::size_t>(i)];
                for (int k = 0; k < channels; ++k) {
                    result.de_samples[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        l.de_samples(k);
                    if (l.de_samples(k) > 0) {
                        result.sample_means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                            l.sample_mean(k);
                    }
                }
                result.de_transitions.push_back(l.de_transition_counts());
            }
        }
        return result;
    }
};

} // namespace

EpisodeResult run_episode(const Scenario& scenario, Policy policy, long horizon, std::uint64_t seed,
                          const SlotObserver& observer) {
    if (horizon < 1) throw ConfigError("run_episode needs horizon >= 1");
    Episode ep(scenario, policy, horizon, seed, observer);
    return ep.run();
}

MonteCarloResult monte_carlo(const Scenario& scenario, Policy policy, int runs, long horizon,
                             const std::vector<long>& checkpoints, unsigned workers) {
    if (runs < 1) throw ConfigError("monte_carlo needs runs >= 1");
    Scenario sc = scenario;
    if (!checkpoints.empty()) sc.checkpoints = checkpoints;
    sc.horizon = horizon;

    MonteCarloResult mc;
    mc.traces.resize(static_cast<std::size_t>(runs));
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(runs));

    std::atomic<int> next_run{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const int run = next_run.fetch_add(1);
            if (run >= runs || failed.load()) return;
            try {
                std::uint64_t sm = sc.seed;
                (void)splitmix64(sm);
                sm ^= 0x517cc1b727220a95ULL * (static_cast<std::uint64_t>(run) + 1);
                const std::uint64_t run_seed = splitmix64(sm);
                mc.traces[static_cast<std::size_t>(run)] =
                    run_episode(sc, policy, horizon, run_seed).trace;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                if (failure.empty()) failure = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw ProtocolError("monte_carlo episode failed: " + failure);
    mc.aggregate = aggregate_traces(mc.traces);
    return mc;
}

} // namespace dssl
