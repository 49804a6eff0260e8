#include "dssl/markov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

namespace {

void validate_stochastic(const TransitionMatrix& transition) {
    const std::size_t n = transition.size();
    if (n == 0) throw ValidationError("transition matrix is empty");
    for (std::size_t r = 0; r < n; ++r) {
        if (transition[r].size() != n) {
            std::ostringstream msg;
            msg << "transition matrix is not square: row " << r << " has "
                << transition[r].size() << " entries, expected " << n;
            throw ValidationError(msg.str());
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double p = transition[r][c];
            if (!(p >= 0.0)) {
                std::ostringstream msg;
                msg << "transition entry (" << r << "," << c << ") is negative: " << p;
                throw ValidationError(msg.str());
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream msg;
            msg << "transition row " << r << " sums to " << sum << ", expected 1";
            throw ValidationError(msg.str());
        }
    }
}

std::vector<int> reachable_from(const TransitionMatrix& transition, int start, bool reverse) {
    const int n = static_cast<int>(transition.size());
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v) {
            const double p = reverse ? transition[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)]
                                     : transition[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
            if (p > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

void validate_ergodic(const TransitionMatrix& transition) {
    const int n = static_cast<int>(transition.size());
    const auto fwd = reachable_from(transition, 0, false);
    const auto bwd = reachable_from(transition, 0, true);
    std::vector<int> unreachable;
    for (int v = 0; v < n; ++v) {
        if (!fwd[static_cast<std::size_t>(v)] || !bwd[static_cast<std::size_t>(v)]) unreachable.push_back(v);
    }
    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "chain is reducible: state(s)";
        for (int v : unreachable) msg << ' ' << v;
        msg << " do not communicate with state 0";
        throw ModelError(msg.str());
    }

    // Period = gcd over edges (u,v) of level(u) + 1 - level(v) on a BFS tree.
    std::vector<long> level(static_cast<std::size_t>(n), -1);
    std::vector<int> order;
    level[0] = 0;
    order.push_back(0);
    for (std::size_t head = 0; head < order.size(); ++head) {
        const int u = order[head];
        for (int v = 0; v < n; ++v) {
            if (transition[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] > 0.0 &&
                level[static_cast<std::size_t>(v)] < 0) {
                level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                order.push_back(v);
            }
        }
    }
    long period = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (transition[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] > 0.0) {
                const long diff = level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)];
                period = std::gcd(period, std::abs(diff));
            }
        }
    }
    if (period != 1) {
        std::ostringstream msg;
        msg << "chain is periodic with period " << period;
        throw ModelError(msg.str());
    }
}

Eigen::MatrixXd to_eigen(const TransitionMatrix& transition) {
    const int n = static_cast<int>(transition.size());
    Eigen::MatrixXd p(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            p(r, c) = transition[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return p;
}

} // namespace

std::vector<double> stationary_distribution(const TransitionMatrix& transition) {
    validate_stochastic(transition);
    validate_ergodic(transition);
    const int n = static_cast<int>(transition.size());
    if (n == 1) return {1.0};

    // Solve pi (P - I) = 0 with the last balance equation replaced by sum = 1.
    Eigen::MatrixXd p = to_eigen(transition);
    Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    for (int c = 0; c < n; ++c) a(n - 1, c) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(b);

    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (!(pi(i) > 0.0)) {
            std::ostringstream msg;
            msg << "stationary solve produced a non-positive mass " << pi(i) << " at state " << i;
            throw NumericalError(msg.str());
        }
        out[static_cast<std::size_t>(i)] = pi(i);
    }
    return out;
}

SpectralGap spectral_gap(const TransitionMatrix& transition) {
    const auto pi = stationary_distribution(transition);
    const int n = static_cast<int>(transition.size());
    if (n == 1) return SpectralGap{0.0, 1.0};

    // Additive reversibilization A = (P + P*)/2 with P*_{xy} = pi_y p_{yx} / pi_x,
    // symmetrized as S = D^{1/2} A D^{-1/2} so a self-adjoint solver applies.
    Eigen::MatrixXd p = to_eigen(transition);
    Eigen::MatrixXd s(n, n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const double rev = pi[static_cast<std::size_t>(y)] * p(y, x) / pi[static_cast<std::size_t>(x)];
            const double a = 0.5 * (p(x, y) + rev);
            s(x, y) = std::sqrt(pi[static_cast<std::size_t>(x)] / pi[static_cast<std::size_t>(y)]) * a;
        }
    }
    s = 0.5 * (s + s.transpose().eval()); // clean up rounding asymmetry
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("self-adjoint eigensolver failed on the reversibilized chain");
    }
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) mags.push_back(std::abs(solver.eigenvalues()(i)));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double lambda2 = mags[1];
    if (lambda2 < 0.0) lambda2 = 0.0;
    if (lambda2 > 1.0 - 1e-12) {
        std::ostringstream msg;
        msg << "reversibilized chain has second eigenvalue modulus " << lambda2
            << "; the eigenvalue gap is degenerate";
        throw NumericalError(msg.str());
    }
    return SpectralGap{lambda2, 1.0 - lambda2};
}

std::vector<std::vector<double>> mean_hitting_times(const TransitionMatrix& transition) {
    validate_stochastic(transition);
    validate_ergodic(transition);
    const int n = static_cast<int>(transition.size());
    std::vector<std::vector<double>> hit(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n), 0.0));
    if (n == 1) return hit;

    Eigen::MatrixXd p = to_eigen(transition);
    for (int target = 0; target < n; ++target) {
        // For x != target: m_x = 1 + sum_{z != target} p_{xz} m_z.
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n - 1, n - 1);
        Eigen::VectorXd b = Eigen::VectorXd::Ones(n - 1);
        auto idx = [&](int state) { return state < target ? state : state - 1; };
        for (int x = 0; x < n; ++x) {
            if (x == target) continue;
            for (int z = 0; z < n; ++z) {
                if (z == target) continue;
                a(idx(x), idx(z)) -= p(x, z);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible()) {
            std::ostringstream msg;
            msg << "hitting-time system for target state " << target << " is singular";
            throw NumericalError(msg.str());
        }
        Eigen::VectorXd m = lu.solve(b);
        for (int x = 0; x < n; ++x) {
            if (x == target) continue;
            hit[static_cast<std::size_t>(x)][static_cast<std::size_t>(target)] = m(idx(x));
        }
    }
    return hit;
}

MarkovChannel::MarkovChannel(std::vector<double> state_rates, TransitionMatrix transition)
    : states_(std::move(state_rates)), transition_(std::move(transition)) {
    if (states_.size() != transition_.size()) {
        std::ostringstream msg;
        msg << "state list has " << states_.size() << " rates but the transition matrix has "
            << transition_.size() << " rows";
        throw ValidationError(msg.str());
    }
    stationary_ = stationary_distribution(transition_);
    spectral_ = spectral_gap(transition_);
    hitting_ = mean_hitting_times(transition_);
    for (const auto& row : hitting_)
        for (double h : row) max_hitting_ = std::max(max_hitting_, h);
    mean_rate_ = 0.0;
    for (std::size_t x = 0; x < states_.size(); ++x) mean_rate_ += states_[x] * stationary_[x];

    row_cumulative_.resize(transition_.size());
    for (std::size_t r = 0; r < transition_.size(); ++r) {
        double acc = 0.0;
        row_cumulative_[r].reserve(transition_.size());
        for (double p : transition_[r]) {
            acc += p;
            row_cumulative_[r].push_back(acc);
        }
        row_cumulative_[r].back() = 1.0;
    }
    double acc = 0.0;
    for (double p : stationary_) {
        acc += p;
        stationary_cumulative_.push_back(acc);
    }
    stationary_cumulative_.back() = 1.0;
}

int MarkovChannel::step(int state, Rng& rng) const {
    if (state < 0 || state >= num_states()) {
        std::ostringstream msg;
        msg << "step from invalid state index " << state << " (chain has " << num_states()
            << " states)";
        throw ConfigError(msg.str());
    }
    return rng.next_from_cumulative(row_cumulative_[static_cast<std::size_t>(state)]);
}

int MarkovChannel::sample_stationary(Rng& rng) const {
    return rng.next_from_cumulative(stationary_cumulative_);
}

SystemBounds compute_bounds(const std::vector<std::vector<MarkovChannel>>& channels) {
    if (channels.empty() || channels.front().empty()) {
        throw ConfigError("compute_bounds requires a non-empty channel bank");
    }
    SystemBounds b;
    b.pi_min = 1.0;
    b.lambda_max = 0.0;
    b.hitting_max.assign(channels.size(), std::vector<double>(channels.front().size(), 0.0));
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i].size() != channels.front().size()) {
            throw ConfigError("channel bank rows have inconsistent channel counts");
        }
        for (std::size_t k = 0; k < channels[i].size(); ++k) {
            const MarkovChannel& ch = channels[i][k];
            double pair_pi_min = 1.0;
            double sum_states = 0.0;
            for (int x = 0; x < ch.num_states(); ++x) {
                const double px = ch.stationary()[static_cast<std::size_t>(x)];
                b.pi_min = std::min(b.pi_min, px);
                pair_pi_min = std::min(pair_pi_min, px);
                b.pi_hat_max = std::max(b.pi_hat_max, std::max(px, 1.0 - px));
                b.x_max = std::max(b.x_max, ch.states()[static_cast<std::size_t>(x)]);
                sum_states += ch.states()[static_cast<std::size_t>(x)];
            }
            b.x_cardinality_max = std::max(b.x_cardinality_max, ch.num_states());
            b.r_max = std::max(b.r_max, sum_states);
            b.lambda_max = std::max(b.lambda_max, ch.second_eigenvalue());
            b.hitting_max[i][k] = ch.max_hitting();
            b.hitting_max_global = std::max(b.hitting_max_global, ch.max_hitting());
            b.a_max = std::max(b.a_max, sum_states / pair_pi_min);
        }
    }
    b.lambda_bar_min = 1.0 - b.lambda_max;
    b.learning_scale =
        28.0 * b.x_max * b.x_max * b.r_max * b.r_max * b.pi_hat_max * b.pi_hat_max / b.lambda_bar_min;
    return b;
}

} // namespace dssl
