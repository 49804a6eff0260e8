#include "dssl/fading.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

namespace {

// 32-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; mirrored).
constexpr int kGlPoints = 16;
constexpr double kGlNode[kGlPoints] = {
    0.0483076656877383162, 0.1444719615827964934, 0.2392873622521370745, 0.3318686022821276497,
    0.4213512761306353453, 0.5068999089322293900, 0.5877157572407623290, 0.6630442669302152009,
    0.7321821187402896803, 0.7944837959679424069, 0.8493676137325699701, 0.8963211557660521239,
    0.9349060759377396891, 0.9647622555875064307, 0.9856115115452683354, 0.9972638618494815635,
};
constexpr double kGlWeight[kGlPoints] = {
    0.0965400885147278006, 0.0956387200792748594, 0.0938443990808045654, 0.0911738786957638847,
    0.0876520930044038111, 0.0833119242269467552, 0.0781938957870703065, 0.0723457941088485062,
    0.0658222227763618468, 0.0586840934785355471, 0.0509980592623761762, 0.0428358980222266807,
    0.0342738629130214331, 0.0253920653092620595, 0.0162743947309056706, 0.0070186100094700966,
};

double integrate_quantile(const std::function<double(double)>& quantile, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int j = 0; j < kGlPoints; ++j) {
        acc += kGlWeight[j] * (quantile(mid - half * kGlNode[j]) + quantile(mid + half * kGlNode[j]));
    }
    return acc * half;
}

} // namespace

FadingDistribution rayleigh_fading(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("rayleigh fading needs sigma > 0");
    FadingDistribution d;
    d.name = "rayleigh";
    d.cdf = [sigma](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x * x / (2.0 * sigma * sigma)); };
    d.quantile = [sigma](double p) { return sigma * std::sqrt(-2.0 * std::log1p(-p)); };
    d.support_lo = 0.0;
    d.support_hi = 0.0;
    return d;
}

FadingDistribution exponential_fading(double rate) {
    if (!(rate > 0.0)) throw ConfigError("exponential fading needs rate > 0");
    FadingDistribution d;
    d.name = "exponential";
    d.cdf = [rate](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * x); };
    d.quantile = [rate](double p) { return -std::log1p(-p) / rate; };
    d.support_lo = 0.0;
    d.support_hi = 0.0;
    return d;
}

FadingDistribution uniform_fading(double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("uniform fading needs hi > lo");
    FadingDistribution d;
    d.name = "uniform";
    d.cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
    d.quantile = [lo, hi](double p) { return lo + p * (hi - lo); };
    d.support_lo = lo;
    d.support_hi = hi;
    return d;
}

FadingQuantizer::FadingQuantizer(int num_states, std::vector<double> thresholds, std::vector<double> rates)
    : num_states_(num_states), thresholds_(std::move(thresholds)), rates_(std::move(rates)) {
    if (num_states_ < 2) throw ConfigError("quantizer needs at least 2 states");
    if (thresholds_.size() != static_cast<std::size_t>(num_states_ - 1)) {
        throw ConfigError("quantizer threshold count must be num_states - 1");
    }
    if (rates_.size() != static_cast<std::size_t>(num_states_)) {
        throw ConfigError("quantizer rate count must equal num_states");
    }
    for (std::size_t n = 1; n < thresholds_.size(); ++n) {
        if (!(thresholds_[n] > thresholds_[n - 1])) {
            std::ostringstream msg;
            msg << "quantizer thresholds are not strictly increasing at index " << n << " ("
                << thresholds_[n - 1] << " then " << thresholds_[n] << ")";
            throw ValidationError(msg.str());
        }
    }
}

int FadingQuantizer::classify(double gain) const {
    const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), gain);
    return static_cast<int>(it - thresholds_.begin());
}

FadingQuantizer quantize_fading(const FadingDistribution& fading, int num_states,
                                const std::optional<std::vector<double>>& explicit_rates) {
    if (num_states < 2) throw ConfigError("quantize_fading needs at least 2 states");
    if (!fading.cdf) throw ConfigError("fading distribution has no CDF");

    auto quantile_of = [&](double p) -> double {
        if (fading.quantile) return fading.quantile(p);
        // Bisection on the CDF; bracket grows until it straddles p.
        double lo = fading.support_lo;
        double hi = fading.support_hi > fading.support_lo ? fading.support_hi : fading.support_lo + 1.0;
        int grow = 0;
        while (fading.cdf(hi) < p) {
            hi = fading.support_lo + (hi - fading.support_lo) * 2.0;
            if (++grow > 200) throw NumericalError("CDF never reaches the requested mass; is it proper?");
        }
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (fading.cdf(mid) < p) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<double> thresholds;
    thresholds.reserve(static_cast<std::size_t>(num_states - 1));
    for (int n = 1; n < num_states; ++n) {
        thresholds.push_back(quantile_of(static_cast<double>(n) / num_states));
    }

    // Each interval must carry mass exactly 1/N; a flat CDF region shows up
    // here as a mass defect and is reported with its interval.
    const double target = 1.0 / num_states;
    double prev_cdf = 0.0;
    for (int n = 1; n < num_states; ++n) {
        const double c = fading.cdf(thresholds[static_cast<std::size_t>(n - 1)]);
        if (std::abs(c - prev_cdf - target) > 1e-9) {
            std::ostringstream msg;
            msg << "fading CDF is not invertible over interval " << n << ": mass "
                << (c - prev_cdf) << " instead of " << target << " (flat or jumping CDF?)";
            throw ValidationError(msg.str());
        }
        prev_cdf = c;
    }

    std::vector<double> rates;
    if (explicit_rates) {
        if (explicit_rates->size() != static_cast<std::size_t>(num_states)) {
            throw ConfigError("explicit per-state rates must match num_states");
        }
        rates = *explicit_rates;
    } else {
        // Conditional mean of each interval, integrated in quantile space:
        // E[X | interval n] = N * int_{(n-1)/N}^{n/N} Q(u) du.
        rates.reserve(static_cast<std::size_t>(num_states));
        for (int n = 0; n < num_states; ++n) {
            const double a = static_cast<double>(n) / num_states;
            const double b = static_cast<double>(n + 1) / num_states;
            // Keep slightly inside (0,1) so unbounded-support quantiles stay finite.
            const double b_eff = (n == num_states - 1) ? std::min(b, 1.0 - 1e-12) : b;
            rates.push_back(num_states * integrate_quantile(quantile_of, a, b_eff));
        }
    }
    return FadingQuantizer(num_states, std::move(thresholds), std::move(rates));
}

MarkovChannel estimate_transitions(const std::vector<double>& gain_trace,
                                   const FadingQuantizer& quantizer) {
    const int n = quantizer.num_states();
    const std::size_t min_len = 100u * static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (gain_trace.size() < min_len) {
        std::ostringstream msg;
        msg << "gain trace has " << gain_trace.size() << " samples; need at least " << min_len
            << " for " << n << " states";
        throw ConfigError(msg.str());
    }

    std::vector<std::vector<long>> counts(static_cast<std::size_t>(n),
                                          std::vector<long>(static_cast<std::size_t>(n), 0));
    std::vector<long> visits(static_cast<std::size_t>(n), 0);
    int prev = quantizer.classify(gain_trace[0]);
    visits[static_cast<std::size_t>(prev)]++;
    for (std::size_t t = 1; t < gain_trace.size(); ++t) {
        const int cur = quantizer.classify(gain_trace[t]);
        counts[static_cast<std::size_t>(prev)][static_cast<std::size_t>(cur)]++;
        visits[static_cast<std::size_t>(cur)]++;
        prev = cur;
    }

    std::vector<int> missing;
    for (int s = 0; s < n; ++s) {
        if (visits[static_cast<std::size_t>(s)] == 0) missing.push_back(s);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "gain trace never visits state(s)";
        for (int s : missing) msg << ' ' << s;
        throw ModelError(msg.str());
    }

    TransitionMatrix transition(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int r = 0; r < n; ++r) {
        long row_total = 0;
        for (int c = 0; c < n; ++c) row_total += counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (row_total == 0) {
            std::ostringstream msg;
            msg << "state " << r << " has no outgoing transitions in the trace";
            throw ModelError(msg.str());
        }
        for (int c = 0; c < n; ++c) {
            transition[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                static_cast<double>(counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) /
                static_cast<double>(row_total);
        }
    }
    return MarkovChannel(quantizer.rates(), std::move(transition));
}

} // namespace dssl
