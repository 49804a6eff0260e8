#include "dssl/trace.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "dssl/errors.hpp"

namespace dssl {

AggregateTrace aggregate_traces(const std::vector<RegretTrace>& traces) {
    if (traces.empty()) throw ConfigError("aggregate_traces needs at least one trace");
    const std::size_t points = traces.front().t.size();
    const std::size_t users = traces.front().per_user_reward.empty()
                                  ? 0
                                  : traces.front().per_user_reward.front().size();
    for (const auto& tr : traces) {
        if (tr.t != traces.front().t) {
            throw ConfigError("aggregate_traces needs identical checkpoint grids");
        }
    }
    AggregateTrace agg;
    agg.t = traces.front().t;
    agg.runs = static_cast<int>(traces.size());
    agg.regret_mean.assign(points, 0.0);
    agg.regret_std.assign(points, 0.0);
    agg.regret_ci95.assign(points, 0.0);
    agg.per_user_rate_mean.assign(points, std::vector<double>(users, 0.0));
    agg.exploration_slots_mean.assign(points, 0.0);
    agg.allocation_slots_mean.assign(points, 0.0);
    agg.exploitation_slots_mean.assign(points, 0.0);

    // Fixed reduction order (run index) keeps aggregation bit-reproducible
    // regardless of how many workers produced the traces.
    for (const auto& tr : traces) {
        for (std::size_t p = 0; p < points; ++p) {
            agg.regret_mean[p] += tr.regret[p];
            for (std::size_t u = 0; u < users; ++u) {
                agg.per_user_rate_mean[p][u] += tr.per_user_reward[p][u] / static_cast<double>(tr.t[p]);
            }
            agg.exploration_slots_mean[p] += static_cast<double>(tr.exploration_slots[p]);
            agg.allocation_slots_mean[p] += static_cast<double>(tr.allocation_slots[p]);
            agg.exploitation_slots_mean[p] += static_cast<double>(tr.exploitation_slots[p]);
        }
    }
    const double n = static_cast<double>(traces.size());
    for (std::size_t p = 0; p < points; ++p) {
        agg.regret_mean[p] /= n;
        for (std::size_t u = 0; u < users; ++u) agg.per_user_rate_mean[p][u] /= n;
        agg.exploration_slots_mean[p] /= n;
        agg.allocation_slots_mean[p] /= n;
        agg.exploitation_slots_mean[p] /= n;
    }
    for (const auto& tr : traces) {
        for (std::size_t p = 0; p < points; ++p) {
            const double d = tr.regret[p] - agg.regret_mean[p];
            agg.regret_std[p] += d * d;
        }
    }
    for (std::size_t p = 0; p < points; ++p) {
        agg.regret_std[p] = traces.size() > 1 ? std::sqrt(agg.regret_std[p] / (n - 1.0)) : 0.0;
        agg.regret_ci95[p] = 1.96 * agg.regret_std[p] / std::sqrt(n);
    }
    return agg;
}

void write_trace_csv(std::ostream& out, const AggregateTrace& trace) {
    out << "t,regret_mean,regret_std,exploration_slots,allocation_slots,exploitation_slots\n";
    char line[256];
    for (std::size_t p = 0; p < trace.t.size(); ++p) {
        std::snprintf(line, sizeof(line), "%ld,%.10g,%.10g,%.10g,%.10g,%.10g\n", trace.t[p],
                      trace.regret_mean[p], trace.regret_std[p], trace.exploration_slots_mean[p],
                      trace.allocation_slots_mean[p], trace.exploitation_slots_mean[p]);
        out << line;
    }
}

std::string trace_csv_string(const AggregateTrace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    return out.str();
}

} // namespace dssl
