#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavnet/config_io.hpp"
#include "uavnet/errors.hpp"
#include "uavnet/sim_harness.hpp"

namespace {

int worker_cap() {
    const char* env = std::getenv("UAVNET_WORKERS");
    if (!env) return 0;
    int v = std::atoi(env);
    return v > 0 ? v : 1;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t base, int count) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) seeds[static_cast<std::size_t>(i)] = base + static_cast<std::uint64_t>(i);
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resilient multi-UAV downlink: risk-sensitive planning and failure simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    std::string scheme_name = "pro_alg";
    double mu = 0.0;
    bool mu_given = false;
    std::vector<double> mus{0.0, -2.0, -5.0, -10.0};
    int n_seeds = 10;
    bool expected_fading = false;
    bool no_history = false;

    auto* validate = app.add_subcommand("validate", "check a scenario file and exit");
    validate->add_option("config", config_path, "scenario JSON file")->required();

    auto* run = app.add_subcommand("run", "run one scheme for one seed");
    run->add_option("config", config_path, "scenario JSON file")->required();
    run->add_option("--scheme", scheme_name, "pro_alg | sr_max | baseline1 | baseline2");
    run->add_option("--mu", mu, "risk weight (<= 0) for pro_alg")->check(CLI::NonPositiveNumber);
    run->add_flag("--expected-fading", expected_fading, "plan on E[hbar]=1");
    run->add_flag("--no-history", no_history, "exclude realized history from the objective");
    run->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "mu x seeds x schemes grid");
    sweep->add_option("config", config_path, "scenario JSON file")->required();
    sweep->add_option("--mu", mus, "mu grid for pro_alg")->delimiter(',');
    sweep->add_option("--seeds", n_seeds, "number of derived seeds")->check(CLI::PositiveNumber);
    sweep->add_flag("--expected-fading", expected_fading, "plan on E[hbar]=1");
    sweep->add_flag("--no-history", no_history, "exclude realized history from the objective");
    sweep->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        uavnet::ParsedConfig cfg = uavnet::parse_config(config_path);

        if (validate->parsed()) {
            std::cout << "valid: " << cfg.scenario.n_uavs() << " uavs, "
                      << cfg.scenario.n_users() << " users, " << cfg.scenario.n_slots
                      << " slots, " << cfg.scenario.failures.size() << " failure(s)\n";
            return 0;
        }

        uavnet::EpisodeOptions opt;
        opt.planner = cfg.settings;
        opt.planner.history_in_objective = cfg.settings.history_in_objective && !no_history;
        opt.expected_fading = expected_fading;

        std::vector<uavnet::EpisodeMetrics> metrics;
        if (run->parsed()) {
            uavnet::Scheme scheme = uavnet::scheme_from_string(scheme_name);
            double run_mu = mu_given || run->count("--mu") ? mu : cfg.settings.risk.mu;
            metrics.push_back(uavnet::run_episode(cfg.scenario, scheme, run_mu,
                                                  cfg.scenario.seed, opt));
        } else {
            auto seeds = derive_seeds(cfg.scenario.seed, n_seeds);
            metrics = uavnet::sweep_mu(cfg.scenario, mus, seeds, opt, worker_cap());
        }
        uavnet::emit_results(metrics, out_dir);
        std::cout << "wrote " << metrics.size() << " episode(s) to " << out_dir << "\n";
        return 0;
    } catch (const uavnet::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const uavnet::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const uavnet::IoError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
}
