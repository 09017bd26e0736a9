#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cotrack/baseline_compare.hpp"
#include "cotrack/config.hpp"
#include "cotrack/io.hpp"
#include "cotrack/simulator.hpp"

namespace cotrack {

// metrics.csv carries only deterministic columns; wall-clock planner time goes
// to timings.csv so identical runs stay byte-identical.
inline const char* metrics_csv_header() {
    return "step,sq_err_loc,sq_err_track,trace_loc,trace_track,lambda2_est,lambda2_true,"
           "min_dist_est,min_dist_true,filter_status,perturbation";
}

inline void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics) {
    out << metrics_csv_header() << '\n';
    for (const auto& m : metrics) {
        out << m.step << ',' << format_g9(m.sq_err_loc) << ',' << format_g9(m.sq_err_track) << ','
            << format_g9(m.trace_loc) << ',' << format_g9(m.trace_track) << ','
            << format_g9(m.lambda2_est) << ',' << format_g9(m.lambda2_true) << ','
            << format_g9(m.min_dist_est) << ',' << format_g9(m.min_dist_true) << ','
            << m.filter_status << ',' << format_g9(m.perturbation) << '\n';
    }
}

inline void write_timings_csv(std::ostream& out, const std::vector<StepMetrics>& metrics) {
    out << "step,planner_seconds\n";
    for (const auto& m : metrics) {
        out << m.step << ',' << format_g9(m.planner_time) << '\n';
    }
}

inline nlohmann::json run_summary(const std::vector<StepMetrics>& metrics,
                                  const ScenarioConfig& cfg) {
    nlohmann::json s;
    const auto& last = metrics.back();
    s["steps"] = static_cast<int>(metrics.size()) - 1;
    s["final_trace_loc"] = last.trace_loc;
    s["final_trace_track"] = last.trace_track;
    s["final_sq_err_loc"] = last.sq_err_loc;
    s["final_sq_err_track"] = last.sq_err_track;
    double min_l2_est = std::numeric_limits<double>::infinity();
    double min_l2_true = std::numeric_limits<double>::infinity();
    double min_dist_est = std::numeric_limits<double>::infinity();
    double min_dist_true = std::numeric_limits<double>::infinity();
    int conn_violations = 0;
    int coll_violations = 0;
    for (const auto& m : metrics) {
        min_l2_est = std::min(min_l2_est, m.lambda2_est);
        min_l2_true = std::min(min_l2_true, m.lambda2_true);
        min_dist_est = std::min(min_dist_est, m.min_dist_est);
        min_dist_true = std::min(min_dist_true, m.min_dist_true);
        if (cfg.n_robots >= 2 && m.lambda2_est < cfg.eps_conn) ++conn_violations;
        if (cfg.n_robots >= 2 && m.min_dist_est < cfg.d_min) ++coll_violations;
    }
    s["min_lambda2_est"] = min_l2_est;
    s["min_lambda2_true"] = min_l2_true;
    s["min_dist_est"] = min_dist_est;
    s["min_dist_true"] = min_dist_true;
    s["connectivity_violations"] = conn_violations;
    s["collision_violations"] = coll_violations;
    return s;
}

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<PlannerKind> planner;
};

inline ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOverrides& overrides) {
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.planner) cfg.planner = *overrides.planner;
    return cfg;
}

// exit 0 ok, 1 config error, 2 runtime error
inline int cmd_run(const std::string& config_path, const std::string& out_dir,
                   const RunOverrides& overrides = {}) {
    ScenarioConfig cfg;
    try {
        cfg = apply_overrides(load_config(config_path), overrides);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    try {
        const auto metrics = run(cfg);
        std::filesystem::create_directories(out_dir);
        {
            std::ofstream out(std::filesystem::path(out_dir) / "metrics.csv");
            write_metrics_csv(out, metrics);
        }
        {
            std::ofstream out(std::filesystem::path(out_dir) / "timings.csv");
            write_timings_csv(out, metrics);
        }
        {
            std::ofstream out(std::filesystem::path(out_dir) / "summary.json");
            out << run_summary(metrics, cfg).dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

namespace detail {

inline void write_aggregate_csv(std::ostream& out,
                                const std::vector<std::vector<StepMetrics>>& trials) {
    static const char* columns[] = {"sq_err_loc",   "sq_err_track", "trace_loc",
                                    "trace_track",  "lambda2_est",  "lambda2_true",
                                    "min_dist_est", "min_dist_true", "perturbation"};
    const auto value_of = [](const StepMetrics& m, int c) {
        switch (c) {
            case 0: return m.sq_err_loc;
            case 1: return m.sq_err_track;
            case 2: return m.trace_loc;
            case 3: return m.trace_track;
            case 4: return m.lambda2_est;
            case 5: return m.lambda2_true;
            case 6: return m.min_dist_est;
            case 7: return m.min_dist_true;
            default: return m.perturbation;
        }
    };
    out << "step";
    for (const char* c : columns) out << ',' << c << "_mean," << c << "_std";
    out << '\n';
    if (trials.empty()) return;
    const std::size_t steps = trials.front().size();
    for (std::size_t t = 0; t < steps; ++t) {
        out << trials.front()[t].step;
        for (int c = 0; c < 9; ++c) {
            double mean = 0.0;
            for (const auto& trial : trials) mean += value_of(trial[t], c);
            mean /= static_cast<double>(trials.size());
            double var = 0.0;
            for (const auto& trial : trials) {
                const double d = value_of(trial[t], c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(trials.size());
            out << ',' << format_g9(mean) << ',' << format_g9(std::sqrt(var));
        }
        out << '\n';
    }
}

}  // namespace detail

// exit 0 ok, 1 config error, 2 runtime error, 3 if any trial failed
inline int cmd_batch(const std::string& config_path, int trials, const std::string& out_dir,
                     const RunOverrides& overrides = {}) {
    ScenarioConfig cfg;
    try {
        if (trials < 1) throw ConfigError("trials must be >= 1");
        cfg = apply_overrides(load_config(config_path), overrides);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    try {
        std::filesystem::create_directories(out_dir);
        std::vector<std::vector<StepMetrics>> completed;
        int failed = 0;
        for (int trial = 0; trial < trials; ++trial) {
            ScenarioConfig trial_cfg = cfg;
            trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(trial);
            char name[64];
            std::snprintf(name, sizeof(name), "metrics_%03d.csv", trial);
            try {
                const auto metrics = run(trial_cfg);
                std::ofstream out(std::filesystem::path(out_dir) / name);
                write_metrics_csv(out, metrics);
                completed.push_back(metrics);
            } catch (const std::exception& e) {
                std::cerr << "trial " << trial << " failed: " << e.what() << '\n';
                ++failed;
            }
        }
        {
            std::ofstream out(std::filesystem::path(out_dir) / "aggregate.csv");
            detail::write_aggregate_csv(out, completed);
        }
        if (failed > 0) return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

// exit 0 ok, 1 config error, 2 runtime error
inline int cmd_compare(const std::vector<int>& n_list, int trials, long budget_per_dim,
                       const std::string& out_dir, std::uint64_t seed = 0) {
    try {
        if (n_list.empty()) throw ConfigError("compare needs at least one team size");
        for (int n : n_list) {
            if (n < 1) throw ConfigError("team sizes must be >= 1");
        }
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (budget_per_dim < 1) throw ConfigError("budget must be >= 1");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    try {
        const auto table = compare(n_list, trials, budget_per_dim, seed);
        std::filesystem::create_directories(out_dir);
        {
            std::ofstream out(std::filesystem::path(out_dir) / "compare.csv");
            write_compare_csv(out, table);
        }
        {
            std::ofstream out(std::filesystem::path(out_dir) / "compare_summary.json");
            out << compare_summary(table).dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace cotrack
