#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cotrack/config.hpp"
#include "cotrack/core.hpp"
#include "cotrack/estimation.hpp"
#include "cotrack/io.hpp"
#include "cotrack/planner.hpp"
#include "cotrack/simulator.hpp"

namespace cotrack {

// Randomized single-step benchmark instance: N = M robots/targets in a fixed
// 10x10 m arena, one measurement round and EKF update applied before any
// planner runs. Constraints are not part of this benchmark.
struct SingleStepInstance {
    JointBelief belief;
    std::vector<Vec2> true_robots;
    std::vector<Vec2> true_targets;
    ScenarioConfig cfg;
};

inline ScenarioConfig benchmark_config(int n) {
    ScenarioConfig cfg;
    cfg.n_robots = n;
    cfg.n_targets = n;
    cfg.r_c = 10.0;
    cfg.d_min = 0.1;
    cfg.u_max = 1.5;
    cfg.action_magnitude = 1.5;
    cfg.action_headings = 8;
    cfg.horizon = 1;
    cfg.q_robot = 0.01;
    cfg.q_target = 0.01;
    cfg.init_cov_robot = 1.0;
    cfg.init_cov_target = 10.0;
    cfg.arena = {10.0, 10.0};
    return validate_config(cfg);
}

inline SingleStepInstance single_step_instance(int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("single_step_instance needs n >= 1");
    SingleStepInstance instance;
    instance.cfg = benchmark_config(n);
    instance.cfg.seed = seed;
    const NoiseModel nm = noise_model_from(instance.cfg);

    WorldState world;
    world.rng.seed(seed);
    std::uniform_real_distribution<double> ux(0.0, instance.cfg.arena[0]);
    std::uniform_real_distribution<double> uy(0.0, instance.cfg.arena[1]);
    const auto distinct = [](const std::vector<Vec2>& pts, const Vec2& p) {
        for (const auto& q : pts) {
            if ((q - p).norm() < 1e-3) return false;
        }
        return true;
    };
    const auto place = [&](std::vector<Vec2>& out, int count, const std::vector<Vec2>& others) {
        while (static_cast<int>(out.size()) < count) {
            const double x = ux(world.rng);
            const double y = uy(world.rng);
            const Vec2 p(x, y);
            if (distinct(out, p) && distinct(others, p)) out.push_back(p);
        }
    };
    place(world.true_robots, n, {});
    place(world.true_targets, n, world.true_robots);

    std::normal_distribution<double> unit(0.0, 1.0);
    const auto noisy = [&](const Vec2& truth, double var) {
        const double sx = std::sqrt(var) * unit(world.rng);
        const double sy = std::sqrt(var) * unit(world.rng);
        return Vec2(truth.x() + sx, truth.y() + sy);
    };
    for (int i = 0; i < n; ++i) {
        world.belief.robots.push_back(
            {noisy(world.true_robots[i], instance.cfg.init_cov_robot),
             instance.cfg.init_cov_robot * Mat2::Identity()});
    }
    for (int j = 0; j < n; ++j) {
        world.belief.targets.push_back(
            {noisy(world.true_targets[j], instance.cfg.init_cov_target),
             instance.cfg.init_cov_target * Mat2::Identity()});
    }

    // First measurement round and EKF update before planning.
    std::vector<Measurement> robot_obs, target_obs;
    detail::sample_measurements(world, nm, robot_obs, target_obs);
    const JointBelief predicted =
        predict_robots(predict_targets(world.belief, nm),
                       std::vector<Vec2>(static_cast<std::size_t>(n), Vec2::Zero()), nm,
                       instance.cfg.dt);
    const auto target_stack = stack_target_measurements(predicted.robot_means(),
                                                        predicted.target_means(), target_obs, nm);
    JointBelief updated = ekf_update_targets(predicted, target_stack);
    const auto robot_stack = stack_robot_measurements(predicted.robot_means(), robot_obs, nm);
    updated = ekf_update_robots(updated, robot_stack);

    instance.belief = std::move(updated);
    instance.true_robots = std::move(world.true_robots);
    instance.true_targets = std::move(world.true_targets);
    return instance;
}

struct ComparisonRow {
    int n = 0;
    int trial = 0;
    std::string method;
    double trace = 0.0;
    double seconds = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<int> n_values;
    int trials = 0;
    long budget_per_dim = 0;
};

// Continuous search ball: twice the discrete control magnitude. An unbounded
// search space is ill-posed for a sampling optimizer.
inline double continuous_search_radius(const ScenarioConfig& cfg) {
    return 2.0 * cfg.action_magnitude;
}

// Runs continuous, greedy, and random selection on identical instances and
// records predicted trace and wall time per (n, trial, method).
inline ComparisonTable compare(const std::vector<int>& n_values, int trials, long budget_per_dim,
                               std::uint64_t base_seed = 0) {
    if (trials < 1) throw ConfigError("compare needs trials >= 1");
    ComparisonTable table;
    table.n_values = n_values;
    table.trials = trials;
    table.budget_per_dim = budget_per_dim;
    for (const int n : n_values) {
        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t seed = base_seed + 100003ULL * static_cast<std::uint64_t>(n) +
                                       static_cast<std::uint64_t>(trial);
            const auto instance = single_step_instance(n, seed);
            const NoiseModel nm = noise_model_from(instance.cfg);
            const ActionSet actions = default_action_set(instance.cfg);
            const long budget = std::max<long>(100, budget_per_dim * 2 * n);

            std::mt19937_64 cem_rng(seed ^ 0x9e3779b97f4a7c15ULL);
            const PlanResult cont = continuous_optimize(
                instance.belief, nm, continuous_search_radius(instance.cfg), budget, cem_rng,
                instance.cfg.dt);
            table.rows.push_back({n, trial, "continuous", cont.predicted_trace, cont.wall_time});

            const PlanResult greedy = greedy_select(instance.belief, actions, nm, instance.cfg.dt);
            table.rows.push_back({n, trial, "greedy", greedy.predicted_trace, greedy.wall_time});

            std::mt19937_64 rand_rng(seed ^ 0x7f4a7c159e3779b9ULL);
            const PlanResult rand =
                random_select(instance.belief, actions, rand_rng, nm, instance.cfg.dt);
            table.rows.push_back({n, trial, "random", rand.predicted_trace, rand.wall_time});
        }
    }
    return table;
}

inline void write_compare_csv(std::ostream& out, const ComparisonTable& table) {
    out << "n,trial,method,trace,seconds\n";
    for (const auto& row : table.rows) {
        out << row.n << ',' << row.trial << ',' << row.method << ',' << format_g9(row.trace)
            << ',' << format_g9(row.seconds) << '\n';
    }
}

// Per-(n, method) mean and standard deviation of trace and runtime.
inline nlohmann::json compare_summary(const ComparisonTable& table) {
    struct Acc {
        std::vector<double> traces;
        std::vector<double> seconds;
    };
    std::map<std::pair<int, std::string>, Acc> groups;
    for (const auto& row : table.rows) {
        auto& acc = groups[{row.n, row.method}];
        acc.traces.push_back(row.trace);
        acc.seconds.push_back(row.seconds);
    }
    const auto mean_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size());
        return std::make_pair(mean, std::sqrt(var));
    };

    nlohmann::json summary;
    summary["trials"] = table.trials;
    summary["budget_per_dim"] = table.budget_per_dim;
    summary["n_values"] = table.n_values;
    auto& results = summary["results"];
    results = nlohmann::json::array();
    for (const auto& [key, acc] : groups) {
        const auto [trace_mean, trace_std] = mean_std(acc.traces);
        const auto [sec_mean, sec_std] = mean_std(acc.seconds);
        results.push_back({{"n", key.first},
                           {"method", key.second},
                           {"trace_mean", trace_mean},
                           {"trace_std", trace_std},
                           {"seconds_mean", sec_mean},
                           {"seconds_std", sec_std}});
    }
    return summary;
}

}  // namespace cotrack
