// Command-line front end: run a scenario, batch seeded trials, or benchmark
// the planners on single-step instances. All outputs are CSV/JSON; plotting
// happens elsewhere.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cotrack/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"multi-robot joint localization and target tracking simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int trials = 30;
    long budget = 100;
    std::vector<int> n_list = {2, 4, 6, 8};
    std::uint64_t seed = 0;
    std::string planner;
    bool seed_set = false;

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--planner", planner, "override the config planner")
            ->check(CLI::IsMember({"greedy", "random", "continuous", "exhaustive"}));
    };

    auto* run_cmd = app.add_subcommand("run", "run one scenario and write metrics");
    run_cmd->add_option("--config", config_path, "scenario config JSON")->required();
    run_cmd->add_option("--out", out_dir, "output directory");
    add_overrides(run_cmd);

    auto* batch_cmd = app.add_subcommand("batch", "run seeded trials and aggregate");
    batch_cmd->add_option("--config", config_path, "scenario config JSON")->required();
    batch_cmd->add_option("--trials", trials, "number of seeded trials");
    batch_cmd->add_option("--out", out_dir, "output directory");
    add_overrides(batch_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "single-step planner comparison");
    compare_cmd->add_option("--n", n_list, "team sizes (N = M)");
    compare_cmd->add_option("--trials", trials, "trials per team size");
    compare_cmd->add_option("--budget", budget,
                            "per-dimension evaluation budget for the continuous baseline");
    compare_cmd->add_option("--out", out_dir, "output directory");
    compare_cmd->add_option("--seed", seed, "base seed");

    CLI11_PARSE(app, argc, argv);

    cotrack::RunOverrides overrides;
    if (seed_set) overrides.seed = seed;
    if (!planner.empty()) overrides.planner = cotrack::planner_from_string(planner);

    if (run_cmd->parsed()) return cotrack::cmd_run(config_path, out_dir, overrides);
    if (batch_cmd->parsed()) return cotrack::cmd_batch(config_path, trials, out_dir, overrides);
    return cotrack::cmd_compare(n_list, trials, budget, out_dir, seed);
}
