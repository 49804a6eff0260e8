#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "dssl/engine.hpp"
#include "dssl/errors.hpp"
#include "testutil.hpp"

using namespace dssl;

namespace {

// Fast-mixing two-state chains whose means equal the given matrix: states
// {0, 2 mu} flipped with probability 1/2 give stationary (1/2, 1/2).
std::vector<std::vector<MarkovChannel>> two_state_bank(const std::vector<std::vector<double>>& means) {
    std::vector<std::vector<MarkovChannel>> bank;
    for (const auto& row : means) {
        std::vector<MarkovChannel> chains;
        for (double mu : row) {
            chains.emplace_back(std::vector<double>{0.0, 2.0 * mu},
                                TransitionMatrix{{0.5, 0.5}, {0.5, 0.5}});
        }
        bank.push_back(std::move(chains));
    }
    return bank;
}

std::vector<std::vector<double>> three_by_three() {
    return {{45, 70, 35}, {30, 90, 60}, {65, 10, 50}};
}

Scenario quick_scenario(const std::vector<std::vector<double>>& means, long horizon,
                        std::optional<double> floor = std::nullopt,
                        std::optional<double> scale = std::nullopt) {
    ScenarioOptions opt;
    opt.horizon = horizon;
    opt.seed = 5;
    opt.learning_scale_override = scale.value_or(100.0);
    opt.condition_floor = floor.value_or(8.0);
    opt.name = "engine-test";
    return make_scenario(two_state_bank(means), opt);
}

} // namespace

TEST_CASE("restlessness: chain paths are identical under different policies") {
    const Scenario sc = quick_scenario(three_by_three(), 400);
    std::vector<std::vector<std::vector<int>>> paths[2];
    const Policy policies[2] = {Policy::OracleStable, Policy::RandomAccess};
    for (int which = 0; which < 2; ++which) {
        SlotObserver obs = [&, which](const SlotRecord& rec) {
            paths[which].push_back(*rec.chain_states);
        };
        run_episode(sc, policies[which], 400, 99, obs);
    }
    CHECK(paths[0] == paths[1]);

    // The learner-based policy shares the same trajectories too.
    std::vector<std::vector<std::vector<int>>> dssl_path;
    SlotObserver obs = [&](const SlotRecord& rec) { dssl_path.push_back(*rec.chain_states); };
    run_episode(sc, Policy::Dssl, 400, 99, obs);
    CHECK(dssl_path == paths[0]);
}

TEST_CASE("determinism: identical seeds give identical traces and logs") {
    const Scenario sc = quick_scenario(three_by_three(), 600);
    const EpisodeResult a = run_episode(sc, Policy::Dssl, 600, 1234);
    const EpisodeResult b = run_episode(sc, Policy::Dssl, 600, 1234);
    CHECK(a.trace.cumulative_reward == b.trace.cumulative_reward);
    CHECK(a.trace.regret == b.trace.regret);
    CHECK(a.de_samples == b.de_samples);
    CHECK(a.allocation_phases == b.allocation_phases);
    REQUIRE(a.phase_log.size() == b.phase_log.size());
    for (std::size_t i = 0; i < a.phase_log.size(); ++i) {
        CHECK(a.phase_log[i].t == b.phase_log[i].t);
        CHECK(a.phase_log[i].user == b.phase_log[i].user);
        CHECK(a.phase_log[i].kind == b.phase_log[i].kind);
        CHECK(a.phase_log[i].channel == b.phase_log[i].channel);
    }
    const EpisodeResult c = run_episode(sc, Policy::Dssl, 600, 1235);
    CHECK(a.trace.cumulative_reward != c.trace.cumulative_reward);
}

TEST_CASE("collision accounting: rewards equal solo-chooser rates") {
    const Scenario sc = quick_scenario({{9.0, 5.0}, {8.0, 4.0}}, 3000);
    long collision_slots = 0;
    SlotObserver obs = [&](const SlotRecord& rec) {
        std::map<int, int> choosers;
        for (int i = 0; i < 2; ++i) {
            const int a = (*rec.action)[static_cast<std::size_t>(i)];
            if (a >= 0) choosers[a]++;
        }
        for (int i = 0; i < 2; ++i) {
            const int a = (*rec.action)[static_cast<std::size_t>(i)];
            if (a < 0) {
                CHECK((*rec.reward)[static_cast<std::size_t>(i)] == 0.0);
                continue;
            }
            if (choosers[a] >= 2) {
                CHECK((*rec.reward)[static_cast<std::size_t>(i)] == 0.0);
                ++collision_slots;
            } else if ((*rec.phase)[static_cast<std::size_t>(i)] != 1) {
                const int s = (*rec.chain_states)[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
                CHECK((*rec.reward)[static_cast<std::size_t>(i)] ==
                      doctest::Approx(sc.bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)].rate_of(s)));
            }
        }
    };
    run_episode(sc, Policy::RandomAccess, 3000, 7, obs);
    CHECK(collision_slots > 0); // two users on two channels collide often
}

TEST_CASE("phase slots conserve per agent at every slot") {
    const Scenario sc = quick_scenario(three_by_three(), 2500);
    std::vector<long> per_user_phase(3 * 3, 0); // [user][phase]
    long slots = 0;
    SlotObserver obs = [&](const SlotRecord& rec) {
        ++slots;
        for (int i = 0; i < 3; ++i) {
            const int ph = (*rec.phase)[static_cast<std::size_t>(i)];
            REQUIRE(ph >= 0);
            REQUIRE(ph <= 2);
            per_user_phase[static_cast<std::size_t>(i * 3 + ph)]++;
        }
    };
    const EpisodeResult res = run_episode(sc, Policy::Dssl, 2500, 21, obs);
    for (int i = 0; i < 3; ++i) {
        long total = 0;
        for (int ph = 0; ph < 3; ++ph) total += per_user_phase[static_cast<std::size_t>(i * 3 + ph)];
        CHECK(total == slots);
    }
    // Aggregate counters agree with the observer's tally.
    long explore = 0, alloc = 0, exploit = 0;
    for (int i = 0; i < 3; ++i) {
        explore += per_user_phase[static_cast<std::size_t>(i * 3 + 0)];
        alloc += per_user_phase[static_cast<std::size_t>(i * 3 + 1)];
        exploit += per_user_phase[static_cast<std::size_t>(i * 3 + 2)];
    }
    CHECK(res.trace.exploration_slots.back() == explore);
    CHECK(res.trace.allocation_slots.back() == alloc);
    CHECK(res.trace.exploitation_slots.back() == exploit);
    CHECK(explore + alloc + exploit == 3 * slots);
}

TEST_CASE("oracle-stable converges to the stable rates") {
    const Scenario sc = quick_scenario(three_by_three(), 100000);
    const EpisodeResult res = run_episode(sc, Policy::OracleStable, 100000, 3);
    const auto& last = res.trace.per_user_reward.back();
    const double expected[3] = {35.0, 90.0, 65.0};
    for (int i = 0; i < 3; ++i) {
        const double avg = last[static_cast<std::size_t>(i)] / 100000.0;
        CHECK(std::abs(avg - expected[i]) / expected[i] < 0.02);
    }
}

TEST_CASE("single user on a single channel earns the stationary mean") {
    ScenarioOptions opt;
    opt.horizon = 100000;
    opt.seed = 2;
    opt.learning_scale_override = 1.0;
    opt.condition_floor = 1.0;
    std::vector<std::vector<MarkovChannel>> bank;
    bank.push_back({MarkovChannel({0.0, 1.0}, TransitionMatrix{{0.9, 0.1}, {0.2, 0.8}})});
    const Scenario sc = make_scenario(std::move(bank), opt);
    const EpisodeResult res = run_episode(sc, Policy::OracleStable, 100000, 17);
    const double avg = res.trace.per_user_reward.back()[0] / 100000.0;
    // stationary mass of the good state is 1/3; slow mixing inflates the
    // sample std roughly by sqrt((1+lambda)/(1-lambda)) ~ 2.4
    const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / 100000.0) * 2.4;
    CHECK(std::abs(avg - 1.0 / 3) < 3.0 * sigma);
}

TEST_CASE("genie regret fluctuates around zero") {
    const Scenario sc = quick_scenario(three_by_three(), 2000);
    const MonteCarloResult mc = monte_carlo(sc, Policy::OracleStable, 100, 2000, {2000}, 2);
    const double mean = mc.aggregate.regret_mean.back();
    const double sem = mc.aggregate.regret_std.back() / std::sqrt(100.0);
    CHECK(std::abs(mean) <= 3.0 * sem);
}

TEST_CASE("monte carlo is reproducible and worker-count independent") {
    const Scenario sc = quick_scenario(three_by_three(), 500);
    const MonteCarloResult one = monte_carlo(sc, Policy::Dssl, 6, 500, {100, 500}, 1);
    const MonteCarloResult two = monte_carlo(sc, Policy::Dssl, 6, 500, {100, 500}, 2);
    CHECK(one.aggregate.regret_mean == two.aggregate.regret_mean);
    CHECK(one.aggregate.regret_std == two.aggregate.regret_std);
    for (int r = 0; r < 6; ++r) CHECK(one.traces[static_cast<std::size_t>(r)].regret ==
                                      two.traces[static_cast<std::size_t>(r)].regret);
}

TEST_CASE("learner policy reaches the stable matching on an easy instance") {
    const Scenario sc = quick_scenario(three_by_three(), 20000, 6.0, 50.0);
    const EpisodeResult res = run_episode(sc, Policy::Dssl, 20000, 11);
    CHECK(res.allocation_phases >= 1);
    CHECK(res.final_assignment == std::vector<int>{2, 1, 0});
    // Sample means should sit near the truth on every channel; the per-slot
    // std of a {0, 2 mu} coin is mu, so scale the tolerance by the count.
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
            const long n = res.de_samples[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            CHECK(n >= 10);
            const double mu = three_by_three()[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            CHECK(std::abs(res.sample_means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] - mu) <
                  4.0 * mu / std::sqrt(static_cast<double>(n)) + 1.0);
        }
    // Exploration must be a vanishing share of a long horizon.
    CHECK(res.trace.exploration_slots.back() < 3 * 20000 / 4);
}

TEST_CASE("initialization flows straight into allocation when thresholds are trivial") {
    // With a negligible floor and scale, every channel passes the sampling
    // condition right after its single initial observation.
    const Scenario sc = quick_scenario(three_by_three(), 200, 1e-6, 1e-9);
    const EpisodeResult res = run_episode(sc, Policy::Dssl, 200, 4);
    // Phase log: 3 exploration entries per user (the initial sweep), then a
    // joint allocation at t = K + 1 = 4.
    long first_alloc_t = -1;
    for (const auto& ev : res.phase_log) {
        if (ev.kind == 'A') {
            first_alloc_t = ev.t;
            break;
        }
    }
    CHECK(first_alloc_t == 4);
    for (const auto& ev : res.phase_log) {
        if (ev.kind == 'O') CHECK(ev.t <= 3);
    }
    // One allocation, decided on the single-sample means; the outcome is an
    // injective matching even though those means are noisy.
    CHECK(res.allocation_phases == 1);
    std::vector<char> taken(3, 0);
    for (int ch : res.final_assignment) {
        REQUIRE(ch >= 0);
        CHECK(!taken[static_cast<std::size_t>(ch)]);
        taken[static_cast<std::size_t>(ch)] = 1;
    }
}

TEST_CASE("explorers and exploiters coexist between allocations") {
    const Scenario sc = quick_scenario(three_by_three(), 4000);
    bool saw_mix = false;
    SlotObserver obs = [&](const SlotRecord& rec) {
        bool has_explore = false, has_exploit = false;
        for (int i = 0; i < 3; ++i) {
            has_explore |= (*rec.phase)[static_cast<std::size_t>(i)] == 0;
            has_exploit |= (*rec.phase)[static_cast<std::size_t>(i)] == 2;
        }
        saw_mix |= (has_explore && has_exploit);
    };
    run_episode(sc, Policy::Dssl, 4000, 8, obs);
    CHECK(saw_mix);
}

TEST_CASE("livelock watchdog trips when no allocation can happen") {
    ScenarioOptions opt;
    opt.horizon = 5000;
    opt.seed = 5;
    opt.learning_scale_override = 100.0;
    opt.condition_floor = 1e12; // the sampling condition can never pass
    opt.livelock_budget = 600;
    const Scenario sc = make_scenario(two_state_bank(three_by_three()), opt);
    CHECK_THROWS_AS(run_episode(sc, Policy::Dssl, 5000, 1), LivelockError);
}

TEST_CASE("uniform-exploration baseline explores more than the adaptive rule") {
    const Scenario sc = quick_scenario(three_by_three(), 20000, 6.0, 50.0);
    const EpisodeResult adaptive = run_episode(sc, Policy::Dssl, 20000, 31);
    const EpisodeResult uniform = run_episode(sc, Policy::UniformExploration, 20000, 31);
    CHECK(uniform.trace.exploration_slots.back() > adaptive.trace.exploration_slots.back());
}

TEST_CASE("policy parsing round-trips") {
    for (const char* name :
         {"dssl", "uniform-exploration", "oracle-stable", "oracle-optimal", "random-access"}) {
        CHECK(policy_name(parse_policy(name)) == name);
    }
    CHECK_THROWS_AS(parse_policy("greedy"), ConfigError);
}
