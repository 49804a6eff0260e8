#include "dssl/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dssl/errors.hpp"
#include "dssl/rng.hpp"

namespace dssl {

RateMatrix::RateMatrix(std::vector<std::vector<double>> entries) : entries_(std::move(entries)) {
    if (entries_.empty() || entries_.front().empty()) {
        throw ValidationError("rate matrix is empty");
    }
    const std::size_t k = entries_.front().size();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].size() != k) {
            throw ValidationError("rate matrix rows have unequal lengths");
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double v = entries_[i][c];
            if (!std::isfinite(v) || v < 0.0) {
                std::ostringstream msg;
                msg << "rate entry (" << i << "," << c << ") = " << v << " is not a finite non-negative rate";
                throw ValidationError(msg.str());
            }
        }
    }
    // Row ties break preference orders; column ties break contention order.
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto row = entries_[i];
        std::sort(row.begin(), row.end());
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] == row[c - 1]) {
                std::ostringstream msg;
                msg << "user " << i << " has two channels with identical rate " << row[c]
                    << "; distinct entries are required (enable jitter to break ties)";
                throw ValidationError(msg.str());
            }
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> col;
        col.reserve(entries_.size());
        for (const auto& row : entries_) col.push_back(row[c]);
        std::sort(col.begin(), col.end());
        for (std::size_t i = 1; i < col.size(); ++i) {
            if (col[i] == col[i - 1]) {
                std::ostringstream msg;
                msg << "channel " << c << " has two users with identical rate " << col[i]
                    << "; distinct entries are required (enable jitter to break ties)";
                throw ValidationError(msg.str());
            }
        }
    }

    preferences_.resize(entries_.size());
    user_gaps_.resize(entries_.size());
    min_gap_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto& pref = preferences_[i];
        pref.resize(k);
        for (std::size_t c = 0; c < k; ++c) pref[c] = static_cast<int>(c);
        std::sort(pref.begin(), pref.end(),
                  [&](int a, int b) { return entries_[i][static_cast<std::size_t>(a)] > entries_[i][static_cast<std::size_t>(b)]; });
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                gap = std::min(gap, std::abs(entries_[i][a] - entries_[i][b]));
        user_gaps_[i] = (k > 1) ? gap : std::numeric_limits<double>::infinity();
        min_gap_ = std::min(min_gap_, user_gaps_[i]);
    }
}

std::vector<int> RateMatrix::top_set(int user, int m) const {
    const auto& pref = preferences_[static_cast<std::size_t>(user)];
    std::vector<int> out(pref.begin(), pref.begin() + std::min<std::size_t>(pref.size(), static_cast<std::size_t>(m)));
    return out;
}

RateMatrix RateMatrix::with_jitter(const std::vector<std::vector<double>>& entries,
                                   double relative_scale, std::uint64_t seed) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& row : entries)
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double spread = hi > lo ? hi - lo : std::max(std::abs(hi), 1.0);
    const double scale = relative_scale * spread;
    Rng rng = Rng::stream(seed, 0x6a17);
    auto jittered = entries;
    for (auto& row : jittered)
        for (double& v : row) v += scale * rng.next_double();
    return RateMatrix(std::move(jittered));
}

std::vector<int> preference_order(const RateMatrix& rates, int user) {
    return rates.preference(user);
}

GapStats gap_stats(const RateMatrix& rates) {
    GapStats g;
    g.per_user.reserve(static_cast<std::size_t>(rates.users()));
    for (int i = 0; i < rates.users(); ++i) g.per_user.push_back(rates.user_gap(i));
    g.min = rates.min_gap();
    return g;
}

Matching make_matching(const RateMatrix& rates, const std::vector<int>& channel_of) {
    Matching m;
    m.channel_of = channel_of;
    m.user_of.assign(static_cast<std::size_t>(rates.channels()), -1);
    m.value = 0.0;
    for (int i = 0; i < rates.users(); ++i) {
        const int k = channel_of[static_cast<std::size_t>(i)];
        if (k < 0 || k >= rates.channels()) {
            throw ProtocolError("matching assigns a user to an out-of-range channel");
        }
        if (m.user_of[static_cast<std::size_t>(k)] != -1) {
            throw ProtocolError("matching assigns two users to the same channel");
        }
        m.user_of[static_cast<std::size_t>(k)] = i;
        m.value += rates.at(i, k);
    }
    return m;
}

Matching stable_matching(const RateMatrix& rates) {
    const int users = rates.users();
    const int channels = rates.channels();
    if (users > channels) {
        std::ostringstream msg;
        msg << "stable matching needs users <= channels, got " << users << " > " << channels;
        throw ConfigError(msg.str());
    }
    std::vector<std::size_t> next_proposal(static_cast<std::size_t>(users), 0);
    std::vector<int> holder(static_cast<std::size_t>(channels), -1);
    std::vector<int> free_users(static_cast<std::size_t>(users));
    for (int i = 0; i < users; ++i) free_users[static_cast<std::size_t>(i)] = i;

    while (!free_users.empty()) {
        const int i = free_users.back();
        free_users.pop_back();
        auto& p = next_proposal[static_cast<std::size_t>(i)];
        if (p >= rates.preference(i).size()) {
            throw ProtocolError("deferred acceptance exhausted a preference list");
        }
        const int k = rates.preference(i)[p++];
        const int held = holder[static_cast<std::size_t>(k)];
        if (held == -1) {
            holder[static_cast<std::size_t>(k)] = i;
        } else if (rates.at(i, k) > rates.at(held, k)) {
            holder[static_cast<std::size_t>(k)] = i;
            free_users.push_back(held);
        } else {
            free_users.push_back(i);
        }
    }

    std::vector<int> channel_of(static_cast<std::size_t>(users), -1);
    for (int k = 0; k < channels; ++k) {
        if (holder[static_cast<std::size_t>(k)] >= 0) {
            channel_of[static_cast<std::size_t>(holder[static_cast<std::size_t>(k)])] = k;
        }
    }
    return make_matching(rates, channel_of);
}

Matching optimal_assignment(const RateMatrix& rates) {
    const int users = rates.users();
    const int channels = rates.channels();
    if (users > channels) {
        std::ostringstream msg;
        msg << "assignment needs users <= channels, got " << users << " > " << channels;
        throw ConfigError(msg.str());
    }
    // Shortest-augmenting-path assignment on costs = -rate (1-indexed with a
    // virtual row/column 0 holding the potentials).
    const int n = users;
    const int m = channels;
    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> potential_u(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> potential_v(static_cast<std::size_t>(m + 1), 0.0);
    std::vector<int> matched_row(static_cast<std::size_t>(m + 1), 0);
    std::vector<int> way(static_cast<std::size_t>(m + 1), 0);
    for (int i = 1; i <= n; ++i) {
        matched_row[0] = i;
        int j0 = 0;
        std::vector<double> min_slack(static_cast<std::size_t>(m + 1), kInf);
        std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = matched_row[static_cast<std::size_t>(j0)];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cost = -rates.at(i0 - 1, j - 1);
                const double cur = cost - potential_u[static_cast<std::size_t>(i0)] - potential_v[static_cast<std::size_t>(j)];
                if (cur < min_slack[static_cast<std::size_t>(j)]) {
                    min_slack[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (min_slack[static_cast<std::size_t>(j)] < delta) {
                    delta = min_slack[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    potential_u[static_cast<std::size_t>(matched_row[static_cast<std::size_t>(j)])] += delta;
                    potential_v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    min_slack[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (matched_row[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            matched_row[static_cast<std::size_t>(j0)] = matched_row[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> channel_of(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (matched_row[static_cast<std::size_t>(j)] > 0) {
            channel_of[static_cast<std::size_t>(matched_row[static_cast<std::size_t>(j)] - 1)] = j - 1;
        }
    }
    return make_matching(rates, channel_of);
}

namespace {

void enumerate_values(const RateMatrix& rates, int user, std::vector<char>& taken, double acc,
                      double& best, double& second) {
    if (user == rates.users()) {
        if (acc > best) {
            second = best;
            best = acc;
        } else if (acc > second && acc < best) {
            second = acc;
        }
        return;
    }
    for (int k = 0; k < rates.channels(); ++k) {
        if (taken[static_cast<std::size_t>(k)]) continue;
        taken[static_cast<std::size_t>(k)] = 1;
        enumerate_values(rates, user + 1, taken, acc + rates.at(user, k), best, second);
        taken[static_cast<std::size_t>(k)] = 0;
    }
}

} // namespace

double assignment_value_gap(const RateMatrix& rates) {
    // Injective-map count is K * (K-1) * ... * (K-M+1); keep it desk-scale.
    double combos = 1.0;
    for (int i = 0; i < rates.users(); ++i) combos *= static_cast<double>(rates.channels() - i);
    if (combos > 5e6) {
        throw ConfigError("assignment enumeration too large for the value-gap computation");
    }
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    std::vector<char> taken(static_cast<std::size_t>(rates.channels()), 0);
    enumerate_values(rates, 0, taken, 0.0, best, second);
    if (!std::isfinite(second)) {
        throw ConfigError("value gap undefined: fewer than two assignment values");
    }
    return best - second;
}

double regret(double realized_aggregate, const RateMatrix& rates, const Matching& stable, long t) {
    if (t < 1) throw ConfigError("regret needs t >= 1");
    if (static_cast<int>(stable.channel_of.size()) != rates.users()) {
        throw ConfigError("regret: matching and rate matrix disagree on the user count");
    }
    return static_cast<double>(t) * stable.value - realized_aggregate;
}

} // namespace dssl
