#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dssl/allocation.hpp"
#include "dssl/bound.hpp"
#include "dssl/errors.hpp"
#include "testutil.hpp"

using namespace dssl;

namespace {

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

Scenario bound_scenario(double epsilon, std::optional<double> floor = 25.0) {
    ScenarioOptions opt;
    opt.horizon = 100000;
    opt.seed = 3;
    opt.learning_scale_override = 1e4;
    opt.epsilon = epsilon;
    opt.gap_floor = 10.0;
    opt.condition_floor = floor;
    return make_scenario(two_state_bank({{45, 70, 35}, {30, 90, 60}, {65, 10, 50}}), opt);
}

// A from-scratch transcription of the same bound, written as one literal
// formula pass so the production code has an independent cross-check.
double bound_oracle(const Scenario& sc, double t) {
    const int m_users = sc.users;
    const int k_channels = sc.channels;
    const double L = sc.learner.learning_scale;
    const double eps = sc.learner.epsilon;
    const double floor = sc.learner.condition_floor();
    const auto& u = sc.rates;
    const Matching s = stable_matching(u);
    const double dmin2 = u.min_gap() * u.min_gap();
    const double lt = std::log(t);
    auto lg4 = [](double x) { return std::log(x) / std::log(4.0); };

    Rng rng(0);
    const auto alloc = run_allocation(u.entries(), sc.codec, rng);

    double epoch_sum = 0.0;
    std::vector<std::vector<double>> caps(static_cast<std::size_t>(m_users),
                                          std::vector<double>(static_cast<std::size_t>(k_channels)));
    for (int i = 0; i < m_users; ++i) {
        for (int k = 0; k < k_channels; ++k) {
            double row_gap2 = 1e300;
            for (int l = 0; l < k_channels; ++l) {
                if (l != k)
                    row_gap2 = std::min(row_gap2, (u.at(i, k) - u.at(i, l)) * (u.at(i, k) - u.at(i, l)));
            }
            double margin = row_gap2;
            if (m_users > 1 && alloc.contended[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) {
                double rival = -1e300;
                for (int j = 0; j < m_users; ++j)
                    if (j != i) rival = std::max(rival, u.at(j, k));
                margin = std::min(margin, (u.at(i, k) - rival) * (u.at(i, k) - rival));
            }
            const double a = margin - 2.0 * eps > dmin2
                                 ? std::max(floor, 4.0 * L / (margin - 2.0 * eps))
                                 : std::max(floor, 4.0 * L / dmin2);
            caps[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = a;
            epoch_sum += std::floor(lg4(3.0 * a * lt + 1.0)) + 1.0;
        }
    }
    double total = sc.bounds.a_max * epoch_sum;
    for (int i = 0; i < m_users; ++i) {
        for (int k = 0; k < k_channels; ++k) {
            const double a = caps[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            const int occ = s.user_of[static_cast<std::size_t>(k)];
            total += (4.0 * a * lt + 1.0 +
                      sc.bounds.hitting_max[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                          (std::floor(lg4(3.0 * a * lt + 1.0)) + 1.0)) *
                     (u.at(i, s.channel_of[static_cast<std::size_t>(i)]) +
                      (occ >= 0 ? u.at(occ, k) : 0.0) - u.at(i, k));
        }
    }
    total += static_cast<double>(m_users) * m_users * sc.bounds.a_max * epoch_sum;
    total += 2.0 * std::exp(1.0) * std::log(m_users + 1.0) * epoch_sum * s.value;
    total += (sc.bounds.a_max + (static_cast<double>(m_users) * m_users * k_channels +
                                 static_cast<double>(m_users) * k_channels) *
                                    6.0 * sc.bounds.x_cardinality_max / sc.bounds.pi_min * s.value) *
             std::ceil(lg4(1.5 * t + 1.0));
    return total;
}

} // namespace

TEST_CASE("bound is monotone in t") {
    const Scenario sc = bound_scenario(6.25);
    double prev = 0.0;
    for (double t : {10.0, 100.0, 1000.0, 10000.0, 100000.0, 1000000.0}) {
        const double b = regret_upper_bound(sc, t).total;
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("bound agrees with an independent transcription") {
    for (double eps : {1.0, 6.25, 20.0}) {
        const Scenario sc = bound_scenario(eps);
        for (double t : {50.0, 2000.0, 80000.0}) {
            const double lib = regret_upper_bound(sc, t).total;
            const double oracle = bound_oracle(sc, t);
            CHECK(lib == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
}

TEST_CASE("quadrupling t adds at most one epoch per pair plus the log slope") {
    const Scenario sc = bound_scenario(6.25);
    const auto rb1 = regret_upper_bound(sc, 5000.0);
    const auto rb4 = regret_upper_bound(sc, 20000.0);
    // Log-growth consistency: the increment is dominated by the explicit
    // log-slope of the suboptimality term plus one extra epoch everywhere.
    double max_cap = 0.0;
    double loss_sum = 0.0;
    const Matching s = stable_matching(sc.rates);
    for (int i = 0; i < sc.users; ++i)
        for (int k = 0; k < sc.channels; ++k) {
            max_cap = std::max(max_cap, rb1.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            const int occ = s.user_of[static_cast<std::size_t>(k)];
            loss_sum += sc.rates.at(i, s.channel_of[static_cast<std::size_t>(i)]) +
                        (occ >= 0 ? sc.rates.at(occ, k) : 0.0) - sc.rates.at(i, k);
        }
    const double slope_budget = 4.0 * max_cap * std::log(4.0) * loss_sum;
    const double per_epoch_budget =
        (sc.bounds.a_max * (1.0 + sc.users * sc.users) + 2 * std::exp(1.0) * std::log(sc.users + 1.0) * s.value +
         sc.bounds.hitting_max_global * loss_sum) *
            static_cast<double>(sc.users) * sc.channels +
        (sc.bounds.a_max + (static_cast<double>(sc.users) * sc.users * sc.channels +
                            static_cast<double>(sc.users) * sc.channels) *
                               6.0 * sc.bounds.x_cardinality_max / sc.bounds.pi_min * s.value);
    CHECK(rb4.total - rb1.total <= slope_budget + per_epoch_budget);
    CHECK(rb4.total > rb1.total);
}

TEST_CASE("well-separated pairs use their own margins") {
    const Scenario sc = bound_scenario(6.25);
    const auto rb = regret_upper_bound(sc, 1000.0);
    // user 1 (row 30,90,60), channel 0: row margin 900, uncontended; with
    // eps = 6.25 the margin clears the global floor 100.
    CHECK(rb.well_separated[1][0]);
    CHECK(rb.coefficient_cap[1][0] ==
          doctest::Approx(std::max(25.0, 4e4 / (900.0 - 12.5))).epsilon(1e-12));
    // user 0, channel 0: row margin 100 never clears the floor 100.
    CHECK(!rb.well_separated[0][0]);
    CHECK(rb.coefficient_cap[0][0] == doctest::Approx(std::max(25.0, 4e4 / 100.0)).epsilon(1e-12));
}

TEST_CASE("oversized epsilon is rejected with the offending pair") {
    // margin-100 pairs sit at the floor; margins of 400 and up must keep a
    // positive denominator. eps = 250 turns 400 into 400 - 500 < 0.
    const Scenario sc = bound_scenario(250.0);
    CHECK_THROWS_WITH_AS(regret_upper_bound(sc, 1000.0), doctest::Contains("epsilon"), ConfigError);
}

TEST_CASE("the condition floor raises every cap") {
    const Scenario lo = bound_scenario(6.25, 25.0);
    const Scenario hi = bound_scenario(6.25, 5000.0);
    const auto rb_lo = regret_upper_bound(lo, 1000.0);
    const auto rb_hi = regret_upper_bound(hi, 1000.0);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
            CHECK(rb_hi.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] ==
                  doctest::Approx(5000.0));
            CHECK(rb_hi.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] >=
                  rb_lo.coefficient_cap[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        }
    CHECK(rb_hi.total > rb_lo.total);
}
