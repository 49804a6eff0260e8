#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dssl/errors.hpp"
#include "dssl/matching.hpp"
#include "testutil.hpp"

using namespace dssl;

namespace {

std::vector<std::vector<double>> three_by_three() {
    return {{45, 70, 35}, {30, 90, 60}, {65, 10, 50}};
}

} // namespace

TEST_CASE("preference order on the worked 3x3 matrix") {
    RateMatrix u(three_by_three());
    // user index 1 (second row): 90 > 60 > 30 -> channels 1, 2, 0.
    CHECK(preference_order(u, 1) == std::vector<int>{1, 2, 0});
}

TEST_CASE("preference order trivia") {
    RateMatrix single(std::vector<std::vector<double>>{{42.0}});
    CHECK(preference_order(single, 0) == std::vector<int>{0});
    RateMatrix sorted_row({{9.0, 7.0, 3.0}, {8.0, 6.0, 2.0}, {7.5, 5.0, 1.0}});
    CHECK(preference_order(sorted_row, 0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("row ties are rejected with a named user") {
    CHECK_THROWS_WITH_AS(RateMatrix({{5.0, 5.0}, {1.0, 2.0}}), doctest::Contains("user 0"),
                         ValidationError);
    CHECK_THROWS_AS(RateMatrix({{5.0, 4.0}, {5.0, 2.0}}), ValidationError); // column tie
}

TEST_CASE("jitter breaks ties deterministically") {
    const std::vector<std::vector<double>> tied{{5.0, 5.0, 1.0}, {5.0, 2.0, 3.0}};
    const RateMatrix a = RateMatrix::with_jitter(tied, 1e-9, 77);
    const RateMatrix b = RateMatrix::with_jitter(tied, 1e-9, 77);
    CHECK(a.entries() == b.entries());
    const RateMatrix c = RateMatrix::with_jitter(tied, 1e-9, 78);
    CHECK(a.entries() != c.entries());
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(a.at(i, k) - tied[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) <
                  1e-8);
}

TEST_CASE("stable matching on the worked 3x3 matrix") {
    RateMatrix u(three_by_three());
    const Matching s = stable_matching(u);
    CHECK(s.channel_of == std::vector<int>{2, 1, 0});
    CHECK(s.value == doctest::Approx(190.0));
    CHECK(s.user_of == std::vector<int>{2, 1, 0});
}

TEST_CASE("stable matching with one user takes the argmax") {
    RateMatrix u({{3.0, 9.0, 5.0}});
    CHECK(stable_matching(u).channel_of == std::vector<int>{1});
}

TEST_CASE("stable matching rejects more users than channels") {
    CHECK_THROWS_AS(stable_matching(RateMatrix({{1.0}, {2.0}})), ConfigError);
}

TEST_CASE("stable matching passes the stability audit on random instances") {
    Rng rng(101);
    for (int rep = 0; rep < 300; ++rep) {
        const int channels = 2 + static_cast<int>(rng.next_below(5)); // 2..6
        const int users = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(channels)));
        const auto entries = testutil::random_distinct_matrix(users, channels, rng);
        RateMatrix u(entries);
        const Matching s = stable_matching(u);
        CHECK(testutil::is_stable(entries, s.channel_of));
        CHECK(s.channel_of == testutil::deferred_acceptance_oracle(entries));
    }
}

TEST_CASE("stable matching is invariant under monotone transforms") {
    Rng rng(202);
    for (int rep = 0; rep < 100; ++rep) {
        const auto entries = testutil::random_distinct_matrix(3, 5, rng);
        RateMatrix u(entries);
        auto squashed = entries;
        for (auto& row : squashed)
            for (double& v : row) v = std::log1p(v) * 3.0 + 1.0;
        RateMatrix w(squashed);
        CHECK(stable_matching(u).channel_of == stable_matching(w).channel_of);
    }
}

TEST_CASE("optimal assignment on the worked 3x3 matrix") {
    RateMatrix u(three_by_three());
    const Matching best = optimal_assignment(u);
    CHECK(best.channel_of == std::vector<int>{1, 2, 0});
    CHECK(best.value == doctest::Approx(195.0));
    // stable value < optimal value, strictly here
    CHECK(stable_matching(u).value < best.value);
}

TEST_CASE("optimal assignment: diagonal dominance picks the diagonal") {
    RateMatrix u({{10.0, 1.0, 2.0}, {1.5, 11.0, 2.5}, {0.5, 1.2, 12.0}});
    CHECK(optimal_assignment(u).channel_of == std::vector<int>{0, 1, 2});
}

TEST_CASE("optimal assignment matches brute force on random instances") {
    Rng rng(303);
    for (int rep = 0; rep < 200; ++rep) {
        const int channels = 2 + static_cast<int>(rng.next_below(5));
        const int users = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(channels)));
        const auto entries = testutil::random_distinct_matrix(users, channels, rng);
        RateMatrix u(entries);
        const double best = testutil::brute_force_best_value(entries);
        CHECK(optimal_assignment(u).value == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("stable value never exceeds the optimal value") {
    Rng rng(404);
    for (int rep = 0; rep < 200; ++rep) {
        const auto entries = testutil::random_distinct_matrix(4, 6, rng);
        RateMatrix u(entries);
        CHECK(stable_matching(u).value <= optimal_assignment(u).value + 1e-9);
    }
}

TEST_CASE("gap stats on the worked 3x3 matrix") {
    RateMatrix u(three_by_three());
    const GapStats g = gap_stats(u);
    CHECK(g.per_user[0] == doctest::Approx(10.0));
    CHECK(g.per_user[1] == doctest::Approx(30.0));
    CHECK(g.per_user[2] == doctest::Approx(15.0));
    CHECK(g.min == doctest::Approx(10.0));
}

TEST_CASE("gap stats trivia and homogeneity") {
    RateMatrix pair({{3.0, 8.0}});
    CHECK(gap_stats(pair).min == doctest::Approx(5.0));
    RateMatrix u(three_by_three());
    auto scaled = three_by_three();
    for (auto& row : scaled)
        for (double& v : row) v *= 2.5;
    RateMatrix w(scaled);
    CHECK(gap_stats(w).min == doctest::Approx(2.5 * gap_stats(u).min));
    for (int i = 0; i < 3; ++i)
        CHECK(gap_stats(w).per_user[static_cast<std::size_t>(i)] ==
              doctest::Approx(2.5 * gap_stats(u).per_user[static_cast<std::size_t>(i)]));
}

TEST_CASE("assignment value gap on the worked 3x3 matrix") {
    RateMatrix u(three_by_three());
    CHECK(assignment_value_gap(u) == doctest::Approx(5.0));
}

TEST_CASE("regret arithmetic") {
    RateMatrix u(three_by_three());
    const Matching s = stable_matching(u);
    // zero realized rate, and all-collision play realizes zero as well
    CHECK(regret(0.0, u, s, 10) == doctest::Approx(10.0 * 190.0));
    CHECK(regret(500.0, u, s, 10) == doctest::Approx(1900.0 - 500.0));
    CHECK_THROWS_AS(regret(0.0, u, s, 0), ConfigError);
}
