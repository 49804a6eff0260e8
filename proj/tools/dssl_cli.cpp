// Command-line front end: run Monte Carlo experiments, print the exploration
// coefficient tables, and evaluate the regret upper bound.
//
// Exit codes: 0 success, 1 runtime/config failure, 2 scenario parse failure,
// 3 livelock watchdog trip.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dssl/bound.hpp"
#include "dssl/engine.hpp"
#include "dssl/errors.hpp"
#include "dssl/learner.hpp"
#include "dssl/scenario_io.hpp"

namespace {

unsigned worker_count(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("DSSL_WORKERS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 0; // engine picks hardware concurrency
}

void write_event_log(const std::string& path, const dssl::Scenario& scenario,
                     const dssl::EpisodeResult& episode) {
    std::ofstream out(path);
    if (!out) throw dssl::ConfigError("cannot open event log path " + path);
    out << "{\"record\":\"header\",\"scenario\":\"" << scenario.name
        << "\",\"users\":" << scenario.users << ",\"channels\":" << scenario.channels
        << ",\"seed\":" << scenario.seed << "}\n";
    for (const auto& ev : episode.phase_log) {
        out << "{\"record\":\"phase\",\"t\":" << ev.t << ",\"user\":" << ev.user << ",\"kind\":\""
            << ev.kind << "\",\"channel\":" << ev.channel << ",\"detail\":" << ev.detail << "}\n";
    }
    for (const auto& [slot, ev] : episode.allocation_log) {
        out << "{\"record\":\"contention\",\"t\":" << slot << ",\"round\":" << ev.round
            << ",\"subphase\":\"" << (ev.subphase == dssl::SubPhase::S1 ? "S1" : "S2")
            << "\",\"channel\":" << ev.channel << ",\"contenders\":[";
        for (std::size_t c = 0; c < ev.contenders.size(); ++c) {
            if (c) out << ',';
            out << ev.contenders[c];
        }
        out << "],\"winner\":" << ev.winner << "}\n";
    }
    out << "{\"record\":\"summary\",\"allocations\":" << episode.allocation_phases
        << ",\"collision_user_slots\":" << episode.collision_slots << "}\n";
}

void print_matrix(const std::vector<std::vector<double>>& m) {
    for (const auto& row : m) {
        for (double v : row) std::printf(" %10.1f", v);
        std::printf("\n");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-user restless-channel spectrum access simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string policy_name;
    std::string out_path;
    std::string log_path;
    long horizon_flag = 0;
    int runs_flag = 0;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    unsigned workers_flag = 0;
    std::vector<double> bound_times;
    std::string bound_out;

    auto* run_cmd = app.add_subcommand("run", "Run Monte Carlo episodes and write the regret trace CSV");
    run_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
    run_cmd->add_option("--policy", policy_name, "dssl | uniform-exploration | oracle-stable | oracle-optimal | random-access");
    run_cmd->add_option("--runs", runs_flag, "Override the scenario's run count");
    run_cmd->add_option("--horizon", horizon_flag, "Override the scenario's horizon");
    auto* seed_opt = run_cmd->add_option("--seed", seed_flag, "Override the scenario's seed");
    run_cmd->add_option("--out", out_path, "Output CSV path")->required();
    run_cmd->add_option("--log", log_path, "Event log (JSON lines) for the first episode");
    run_cmd->add_option("--workers", workers_flag, "Worker threads (default: DSSL_WORKERS or all cores)");

    auto* tables_cmd = app.add_subcommand("tables", "Print the exploration coefficient tables");
    tables_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();

    auto* bound_cmd = app.add_subcommand("bound", "Evaluate the regret upper bound");
    bound_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
    bound_cmd->add_option("--t", bound_times, "Times to evaluate at")->required()->expected(-1);
    bound_cmd->add_option("--out", bound_out, "Optional CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;

    try {
        dssl::Scenario scenario = dssl::load_scenario(scenario_path);
        if (run_cmd->parsed()) {
            if (horizon_flag > 0) scenario.horizon = horizon_flag;
            if (runs_flag > 0) scenario.runs = runs_flag;
            if (seed_set) scenario.seed = seed_flag;
            if (horizon_flag > 0) {
                // Re-derive the default grid when the horizon moved.
                scenario.checkpoints = dssl::geometric_checkpoints(scenario.horizon);
            }
            const dssl::Policy policy =
                policy_name.empty() ? scenario.default_policy : dssl::parse_policy(policy_name);

            const auto mc = dssl::monte_carlo(scenario, policy, scenario.runs, scenario.horizon,
                                              scenario.checkpoints, worker_count(workers_flag));
            std::ofstream out(out_path);
            if (!out) throw dssl::ConfigError("cannot open output path " + out_path);
            dssl::write_trace_csv(out, mc.aggregate);

            if (!log_path.empty()) {
                std::uint64_t sm = scenario.seed;
                (void)dssl::splitmix64(sm);
                sm ^= 0x517cc1b727220a95ULL;
                const std::uint64_t run0_seed = dssl::splitmix64(sm);
                const auto episode =
                    dssl::run_episode(scenario, policy, scenario.horizon, run0_seed);
                write_event_log(log_path, scenario, episode);
            }
            std::printf("wrote %s (%d runs, horizon %ld, policy %s)\n", out_path.c_str(),
                        scenario.runs, scenario.horizon, dssl::policy_name(policy).c_str());
        } else if (tables_cmd->parsed()) {
            const auto adaptive =
                dssl::deterministic_coefficients(scenario.rates, scenario.learner.learning_scale);
            const double uniform =
                dssl::uniform_exploration_coefficient(scenario.rates, scenario.learner.learning_scale);
            std::printf("exploration coefficients (users x channels), L = %g\n",
                        scenario.learner.learning_scale);
            print_matrix(adaptive);
            std::printf("single-rate baseline coefficient (every user, every channel): %.1f\n", uniform);
        } else if (bound_cmd->parsed()) {
            std::ostringstream csv;
            csv << "t,bound,exploration_transient,exploration_suboptimal,allocation_transient,"
                   "allocation_suboptimal,exploitation\n";
            for (double t : bound_times) {
                const auto rb = dssl::regret_upper_bound(scenario, t);
                char line[512];
                std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", t,
                              rb.total, rb.exploration_transient, rb.exploration_suboptimal,
                              rb.allocation_transient, rb.allocation_suboptimal, rb.exploitation);
                csv << line;
            }
            if (bound_out.empty()) {
                std::fputs(csv.str().c_str(), stdout);
            } else {
                std::ofstream out(bound_out);
                if (!out) throw dssl::ConfigError("cannot open output path " + bound_out);
                out << csv.str();
                std::printf("wrote %s\n", bound_out.c_str());
            }
        }
        return 0;
    } catch (const dssl::ParseError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return 2;
    } catch (const dssl::LivelockError& e) {
        std::fprintf(stderr, "livelock: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
