#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dssl/markov.hpp"

namespace dssl {

// A continuous fading-gain law described by its CDF, with an optional exact
// quantile function. When the quantile is absent, thresholds are found by
// bisection on the CDF.
struct FadingDistribution {
    std::string name;
    std::function<double(double)> cdf;
    std::function<double(double)> quantile; // may be empty
    double support_lo = 0.0;
    double support_hi = 0.0; // 0 means unbounded above
};

FadingDistribution rayleigh_fading(double sigma);
FadingDistribution exponential_fading(double rate);
FadingDistribution uniform_fading(double lo, double hi);

// Equal-mass quantization of a fading law into N states. Thresholds satisfy
// CDF(tau_n) = n/N; the representative rate of each interval defaults to the
// interval's conditional mean (Gauss-Legendre quadrature on the quantile
// function) unless explicit rates are supplied.
class FadingQuantizer {
public:
    FadingQuantizer(int num_states, std::vector<double> thresholds, std::vector<double> rates);

    int num_states() const { return num_states_; }
    // thresholds tau_1..tau_{N-1}; tau_0 and tau_N are the support edges.
    const std::vector<double>& thresholds() const { return thresholds_; }
    const std::vector<double>& rates() const { return rates_; }

    int classify(double gain) const;

private:
    int num_states_;
    std::vector<double> thresholds_;
    std::vector<double> rates_;
};

FadingQuantizer quantize_fading(const FadingDistribution& fading, int num_states,
                                const std::optional<std::vector<double>>& explicit_rates = std::nullopt);

// Builds a channel chain from a correlated gain trace by classifying every
// sample and row-normalizing the transition counts. Every state must be
// visited; the trace must be long enough for the counts to mean something.
MarkovChannel estimate_transitions(const std::vector<double>& gain_trace,
                                   const FadingQuantizer& quantizer);

} // namespace dssl
