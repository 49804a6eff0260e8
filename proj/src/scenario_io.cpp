#include "dssl/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "dssl/errors.hpp"
#include "dssl/fading.hpp"
#include "dssl/rng.hpp"

namespace dssl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& field, const std::string& why) {
    throw ParseError(origin + ": field '" + field + "': " + why);
}

const json& require(const json& j, const char* field, const std::string& origin) {
    const auto it = j.find(field);
    if (it == j.end()) fail(origin, field, "missing");
    return *it;
}

template <typename T>
T require_as(const json& j, const char* field, const std::string& origin) {
    const json& v = require(j, field, origin);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        fail(origin, field, std::string("wrong type (") + e.what() + ")");
    }
}

template <typename T>
T optional_as(const json& j, const char* field, const std::string& origin, T fallback) {
    const auto it = j.find(field);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        fail(origin, field, std::string("wrong type (") + e.what() + ")");
    }
}

TransitionMatrix parse_matrix(const json& j, const std::string& field, const std::string& origin) {
    try {
        return j.get<TransitionMatrix>();
    } catch (const json::exception& e) {
        fail(origin, field, std::string("expected a matrix of numbers (") + e.what() + ")");
    }
}

std::vector<std::vector<MarkovChannel>> build_explicit(const json& model, int users, int channels,
                                                       const std::string& origin) {
    std::map<std::string, TransitionMatrix> library;
    if (model.contains("transition_library")) {
        for (const auto& [key, value] : model.at("transition_library").items()) {
            library[key] = parse_matrix(value, "transition_library." + key, origin);
        }
    }
    std::vector<std::vector<std::optional<MarkovChannel>>> bank(
        static_cast<std::size_t>(users),
        std::vector<std::optional<MarkovChannel>>(static_cast<std::size_t>(channels)));
    const json& pairs = require(model, "pairs", origin);
    if (!pairs.is_array()) fail(origin, "channel_model.pairs", "expected an array");
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        const std::string ctx = origin + " (pairs[" + std::to_string(idx) + "])";
        const json& p = pairs[idx];
        const int user = require_as<int>(p, "user", ctx);
        const int channel = require_as<int>(p, "channel", ctx);
        if (user < 0 || user >= users) fail(ctx, "user", "out of range");
        if (channel < 0 || channel >= channels) fail(ctx, "channel", "out of range");
        auto states = require_as<std::vector<double>>(p, "states", ctx);
        TransitionMatrix transition;
        if (p.contains("transition_ref")) {
            const auto name = require_as<std::string>(p, "transition_ref", ctx);
            const auto it = library.find(name);
            if (it == library.end()) fail(ctx, "transition_ref", "no such transition_library entry");
            transition = it->second;
        } else {
            transition = parse_matrix(require(p, "transition", ctx), "transition", ctx);
        }
        try {
            bank[static_cast<std::size_t>(user)][static_cast<std::size_t>(channel)] =
                MarkovChannel(std::move(states), std::move(transition));
        } catch (const std::exception& e) {
            fail(ctx, "transition", e.what());
        }
    }
    std::vector<std::vector<MarkovChannel>> out;
    out.reserve(static_cast<std::size_t>(users));
    for (int i = 0; i < users; ++i) {
        std::vector<MarkovChannel> row;
        row.reserve(static_cast<std::size_t>(channels));
        for (int k = 0; k < channels; ++k) {
            auto& slot = bank[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            if (!slot) {
                std::ostringstream which;
                which << "pairs";
                fail(origin, which.str(),
                     "missing chain for user " + std::to_string(i) + ", channel " + std::to_string(k));
            }
            row.push_back(std::move(*slot));
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::vector<MarkovChannel>> build_gilbert_elliott(const json& model, int users,
                                                              int channels,
                                                              const std::string& origin) {
    const auto p01 = require_as<std::vector<double>>(model, "p01", origin);
    const auto p10 = require_as<std::vector<double>>(model, "p10", origin);
    const auto r1 = require_as<std::vector<double>>(model, "rate_good", origin);
    const auto r0 = require_as<std::vector<double>>(model, "rate_bad", origin);
    if (static_cast<int>(p01.size()) != channels) fail(origin, "p01", "needs one entry per channel");
    if (static_cast<int>(p10.size()) != channels) fail(origin, "p10", "needs one entry per channel");
    if (static_cast<int>(r1.size()) != channels) fail(origin, "rate_good", "needs one entry per channel");
    if (static_cast<int>(r0.size()) != channels) fail(origin, "rate_bad", "needs one entry per channel");
    std::vector<std::vector<MarkovChannel>> bank;
    for (int i = 0; i < users; ++i) {
        std::vector<MarkovChannel> row;
        for (int k = 0; k < channels; ++k) {
            const double a = p01[static_cast<std::size_t>(k)];
            const double b = p10[static_cast<std::size_t>(k)];
            if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0)) {
                fail(origin, "p01/p10", "transition probabilities must lie in (0, 1)");
            }
            row.emplace_back(std::vector<double>{r0[static_cast<std::size_t>(k)],
                                                 r1[static_cast<std::size_t>(k)]},
                             TransitionMatrix{{1.0 - a, a}, {b, 1.0 - b}});
        }
        bank.push_back(std::move(row));
    }
    return bank;
}

std::vector<std::vector<MarkovChannel>> build_fading(const json& model, int users, int channels,
                                                     std::uint64_t seed, const std::string& origin) {
    const auto family = require_as<std::string>(model, "family", origin);
    const int num_states = require_as<int>(model, "num_states", origin);
    const long trace_length = optional_as<long>(model, "trace_length", origin, 200000L);
    const double correlation = optional_as<double>(model, "correlation", origin, 0.9);
    if (!(correlation >= 0.0 && correlation < 1.0)) fail(origin, "correlation", "needs [0, 1)");

    std::vector<std::vector<double>> scale(static_cast<std::size_t>(users),
                                           std::vector<double>(static_cast<std::size_t>(channels), 1.0));
    const json& sj = require(model, "scale", origin);
    if (sj.is_number()) {
        const double s = sj.get<double>();
        for (auto& row : scale) std::fill(row.begin(), row.end(), s);
    } else {
        const auto grid = parse_matrix(sj, "scale", origin);
        if (static_cast<int>(grid.size()) != users ||
            static_cast<int>(grid.front().size()) != channels) {
            fail(origin, "scale", "scale grid must be users x channels");
        }
        scale = grid;
    }

    std::vector<std::vector<MarkovChannel>> bank;
    for (int i = 0; i < users; ++i) {
        std::vector<MarkovChannel> row;
        for (int k = 0; k < channels; ++k) {
            FadingDistribution dist;
            const double s = scale[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            if (family == "rayleigh") dist = rayleigh_fading(s);
            else if (family == "exponential") dist = exponential_fading(s);
            else if (family == "uniform") dist = uniform_fading(0.0, s);
            else fail(origin, "family", "expected rayleigh, exponential, or uniform");

            // Correlated gain trace: a Gaussian AR(1) driver pushed through
            // the fading quantile, then quantized and count-estimated.
            Rng rng = Rng::stream(seed, 0x5000 + static_cast<std::uint64_t>(i) * channels + k);
            auto normal = [&rng]() {
                const double u1 = std::max(rng.next_double(), 1e-300);
                const double u2 = rng.next_double();
                return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
            };
            const auto quantizer = quantize_fading(dist, num_states);
            std::vector<double> trace(static_cast<std::size_t>(trace_length));
            double z = normal();
            const double mix = std::sqrt(1.0 - correlation * correlation);
            auto to_gain = [&](double zz) {
                const double u = 0.5 * std::erfc(-zz / std::sqrt(2.0));
                return dist.quantile ? dist.quantile(std::clamp(u, 1e-12, 1.0 - 1e-12))
                                     : 0.0;
            };
            for (long n = 0; n < trace_length; ++n) {
                trace[static_cast<std::size_t>(n)] = to_gain(z);
                z = correlation * z + mix * normal();
            }
            try {
                row.push_back(estimate_transitions(trace, quantizer));
            } catch (const std::exception& e) {
                fail(origin, "channel_model", e.what());
            }
        }
        bank.push_back(std::move(row));
    }
    return bank;
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(origin + ": not valid JSON: " + e.what());
    }
    const int version = require_as<int>(doc, "version", origin);
    if (version != 1) fail(origin, "version", "unsupported version " + std::to_string(version));

    ScenarioOptions opt;
    opt.name = optional_as<std::string>(doc, "name", origin, "");
    const int users = require_as<int>(doc, "users", origin);
    const int channels = require_as<int>(doc, "channels", origin);
    if (users < 1) fail(origin, "users", "must be >= 1");
    if (channels < users) fail(origin, "channels", "must be >= users");

    const json& run = require(doc, "run", origin);
    opt.horizon = require_as<long>(run, "horizon", origin + " (run)");
    opt.runs = optional_as<int>(run, "runs", origin + " (run)", 1);
    opt.seed = optional_as<std::uint64_t>(run, "seed", origin + " (run)", 1);
    opt.checkpoints = optional_as<std::vector<long>>(run, "checkpoints", origin + " (run)", {});
    opt.livelock_budget = optional_as<long>(run, "livelock_budget", origin + " (run)", 0);

    if (doc.contains("learner")) {
        const json& l = doc.at("learner");
        const std::string ctx = origin + " (learner)";
        if (l.contains("epsilon")) opt.epsilon = require_as<double>(l, "epsilon", ctx);
        if (l.contains("gap_floor")) opt.gap_floor = require_as<double>(l, "gap_floor", ctx);
        if (l.contains("learning_scale"))
            opt.learning_scale_override = require_as<double>(l, "learning_scale", ctx);
        if (l.contains("condition_floor"))
            opt.condition_floor = require_as<double>(l, "condition_floor", ctx);
    }
    if (doc.contains("backoff")) {
        const json& b = doc.at("backoff");
        const std::string ctx = origin + " (backoff)";
        if (b.contains("rate_cap")) opt.backoff_rate_cap = require_as<double>(b, "rate_cap", ctx);
        opt.backoff_slots = optional_as<int>(b, "slots", ctx, 1 << 16);
    }
    if (doc.contains("jitter")) {
        const json& jj = doc.at("jitter");
        const std::string ctx = origin + " (jitter)";
        opt.jitter = optional_as<bool>(jj, "enabled", ctx, true);
        opt.jitter_relative_scale = optional_as<double>(jj, "relative_scale", ctx, 1e-9);
    }
    opt.default_policy = parse_policy(optional_as<std::string>(doc, "policy", origin, "dssl"));

    const json& model = require(doc, "channel_model", origin);
    const auto kind = require_as<std::string>(model, "kind", origin + " (channel_model)");
    std::vector<std::vector<MarkovChannel>> bank;
    const std::string mctx = origin + " (channel_model)";
    if (kind == "explicit") {
        bank = build_explicit(model, users, channels, mctx);
    } else if (kind == "gilbert_elliott") {
        bank = build_gilbert_elliott(model, users, channels, mctx);
    } else if (kind == "fading") {
        bank = build_fading(model, users, channels, opt.seed, mctx);
    } else {
        fail(mctx, "kind", "expected explicit, gilbert_elliott, or fading");
    }

    try {
        return make_scenario(std::move(bank), opt);
    } catch (const std::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

} // namespace dssl
