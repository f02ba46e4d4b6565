// tfl: run scenarios, verify run directories, print the default config.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "tfl/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitMismatch = 3;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const auto value = std::stoull(item, &used);
        if (used != item.size()) {
            throw tfl::ConfigError("--seeds: '" + item + "' is not an integer");
        }
        seeds.push_back(value);
    }
    if (seeds.empty()) {
        throw tfl::ConfigError("--seeds: empty list");
    }
    return seeds;
}

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<tfl::Round> rounds,
                std::string out, const std::string& seeds) {
    tfl::ScenarioConfig config = tfl::load_scenario(config_path);
    if (seed) {
        config.seed = *seed;
    }
    if (rounds) {
        config.rounds = *rounds;
    }
    if (out.empty()) {
        out = config.out_dir.empty() ? "run" : config.out_dir;
    }
    std::vector<std::uint64_t> seed_list{config.seed};
    if (!seeds.empty()) {
        seed_list = parse_seed_list(seeds);
    }
    for (const auto s : seed_list) {
        config.seed = s;
        const auto dir = seed_list.size() == 1 ? std::filesystem::path(out)
                                               : std::filesystem::path(out) / ("seed-" + std::to_string(s));
        const auto result = tfl::simulate(config);
        tfl::write_run(result, dir);
        const double final_loss = result.summaries.empty() ? result.initial_loss
                                                            : result.summaries.back().validation_loss;
        std::cout << "seed " << s << ": " << result.summaries.size() << " rounds, loss " << result.initial_loss
                  << " -> " << final_loss << ", wrote " << dir.string() << '\n';
    }
    return kExitOk;
}

int verify_command(const std::string& dir) {
    const auto report = tfl::verify_run_dir(dir);
    for (const auto& m : report.mismatches) {
        std::cerr << "mismatch: " << m << '\n';
    }
    std::cout << (report.ok() ? "ok" : "FAILED") << ": " << report.rounds_checked << " rounds checked, "
              << report.mismatches.size() << " mismatches\n";
    return report.ok() ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trust-based incentive protocol simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario and write metrics, events and artifacts");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<tfl::Round> rounds;
    std::string out;
    std::string seeds;
    run->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--rounds", rounds, "Override the round count");
    run->add_option("--out", out, "Output directory");
    run->add_option("--seeds", seeds, "Comma-separated seeds; one subdirectory per seed");

    auto* verify = app.add_subcommand("verify", "Recompute digests of a run directory against its event log");
    std::string verify_dir;
    verify->add_option("--dir", verify_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    auto* defaults = app.add_subcommand("dump-defaults", "Print the reference profile as a scenario document");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(config_path, seed, rounds, out, seeds);
        }
        if (verify->parsed()) {
            return verify_command(verify_dir);
        }
        if (defaults->parsed()) {
            std::cout << tfl::to_json(tfl::default_scenario()).dump(2) << '\n';
            return kExitOk;
        }
    } catch (const tfl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
