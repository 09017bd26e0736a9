#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cotrack/config.hpp"
#include "cotrack/connectivity.hpp"
#include "cotrack/core.hpp"
#include "cotrack/estimation.hpp"
#include "cotrack/models.hpp"
#include "cotrack/planner.hpp"
#include "cotrack/safety_filter.hpp"

namespace cotrack {

struct WorldState {
    std::vector<Vec2> true_robots;
    std::vector<Vec2> true_targets;
    JointBelief belief;
    int step = 0;
    std::mt19937_64 rng;
};

struct StepMetrics {
    int step = 0;
    double sq_err_loc = 0.0;
    double sq_err_track = 0.0;
    double trace_loc = 0.0;
    double trace_track = 0.0;
    double lambda2_est = 0.0;
    double lambda2_true = 0.0;
    double min_dist_est = 0.0;
    double min_dist_true = 0.0;
    double planner_time = 0.0;  // wall seconds; logged separately from metrics.csv
    std::string filter_status = "init";
    double perturbation = 0.0;
};

inline Vec2 target_script_input(const TargetScript& script, int step) {
    Vec2 u = Vec2::Zero();
    switch (script.kind) {
        case TargetScript::Kind::stationary:
            break;
        case TargetScript::Kind::constant:
            u = script.velocity;
            break;
        case TargetScript::Kind::piecewise:
            for (const auto& seg : script.segments) {
                if (step < seg.until) {
                    u = seg.velocity;
                    break;
                }
            }
            break;
    }
    const double speed = u.norm();
    if (speed > script.speed_max && speed > 0.0) u *= script.speed_max / speed;
    return u;
}

namespace detail {

inline double min_pairwise_distance(const std::vector<Vec2>& points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            best = std::min(best, (points[i] - points[j]).norm());
        }
    }
    return best;
}

inline double lambda2_of(const std::vector<Vec2>& points, const ScenarioConfig& cfg) {
    if (points.size() < 2) return 0.0;
    return build_graph(points, cfg.r_c, cfg.sigma_norm).lambda2;
}

inline StepMetrics snapshot_metrics(const WorldState& world, const ScenarioConfig& cfg) {
    StepMetrics m;
    m.step = world.step;
    for (int i = 0; i < world.belief.n_robots(); ++i) {
        m.sq_err_loc += (world.true_robots[i] - world.belief.robots[i].mean).squaredNorm();
    }
    for (int j = 0; j < world.belief.n_targets(); ++j) {
        m.sq_err_track += (world.true_targets[j] - world.belief.targets[j].mean).squaredNorm();
    }
    m.trace_loc = world.belief.trace_robots();
    m.trace_track = world.belief.trace_targets();
    m.lambda2_est = lambda2_of(world.belief.robot_means(), cfg);
    m.lambda2_true = lambda2_of(world.true_robots, cfg);
    m.min_dist_est = min_pairwise_distance(world.belief.robot_means());
    m.min_dist_true = min_pairwise_distance(world.true_robots);
    return m;
}

// Measurement sampling at true positions; fixed draw order (robot-major, GPS
// first, then observed robots, then targets) keeps runs reproducible.
inline void sample_measurements(WorldState& world, const NoiseModel& nm,
                                std::vector<Measurement>& robot_obs,
                                std::vector<Measurement>& target_obs) {
    const int n = static_cast<int>(world.true_robots.size());
    const int m = static_cast<int>(world.true_targets.size());
    robot_obs.clear();
    target_obs.clear();
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto draw_rb = [&](const Vec2& from, const Vec2& to, int obs_i, int obs_j) {
        Measurement z;
        z.kind = MeasurementKind::range_bearing;
        z.observer = obs_i;
        z.observed = obs_j;
        z.noise_cov = measurement_noise_cov(MeasurementKind::range_bearing, from, to, nm);
        const auto rb = range_bearing(from, to);
        const double nr = std::sqrt(z.noise_cov(0, 0)) * unit(world.rng);
        const double nb = std::sqrt(z.noise_cov(1, 1)) * unit(world.rng);
        z.value(0) = rb.first + nr;
        z.value(1) = wrap_angle(rb.second + nb);
        return z;
    };
    for (int i = 0; i < n; ++i) {
        Measurement gps;
        gps.kind = MeasurementKind::gps;
        gps.observer = i;
        gps.observed = i;
        gps.noise_cov = measurement_noise_cov(MeasurementKind::gps, world.true_robots[i],
                                              world.true_robots[i], nm);
        const double nx = nm.sigma_gps * unit(world.rng);
        const double ny = nm.sigma_gps * unit(world.rng);
        gps.value = world.true_robots[i] + Vec2(nx, ny);
        robot_obs.push_back(gps);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            robot_obs.push_back(draw_rb(world.true_robots[i], world.true_robots[j], i, j));
        }
        for (int j = 0; j < m; ++j) {
            target_obs.push_back(draw_rb(world.true_robots[i], world.true_targets[j], i, j));
        }
    }
}

}  // namespace detail

// Rejection-sampled initial placement: robots connected (lambda2 > eps) and
// separated (min distance > d_min), targets uniform, beliefs drawn around the
// truth from the initial covariances.
inline WorldState init_world(const ScenarioConfig& cfg) {
    WorldState world;
    world.rng.seed(cfg.seed);
    std::uniform_real_distribution<double> ux(0.0, cfg.arena[0]);
    std::uniform_real_distribution<double> uy(0.0, cfg.arena[1]);

    const int n = cfg.n_robots;
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        world.true_robots.clear();
        for (int i = 0; i < n; ++i) {
            const double x = ux(world.rng);
            const double y = uy(world.rng);
            world.true_robots.emplace_back(x, y);
        }
        if (n == 1) {
            placed = true;
        } else {
            placed = detail::min_pairwise_distance(world.true_robots) > cfg.d_min &&
                     build_graph(world.true_robots, cfg.r_c, cfg.sigma_norm).lambda2 > cfg.eps_conn;
        }
    }
    if (!placed) {
        throw PlacementFailed("no connected, collision-free robot placement in 10000 attempts");
    }

    for (int j = 0; j < cfg.n_targets; ++j) {
        const double x = ux(world.rng);
        const double y = uy(world.rng);
        world.true_targets.emplace_back(x, y);
    }

    std::normal_distribution<double> unit(0.0, 1.0);
    const auto noisy = [&](const Vec2& truth, double var) {
        const double sx = std::sqrt(var) * unit(world.rng);
        const double sy = std::sqrt(var) * unit(world.rng);
        return Vec2(truth.x() + sx, truth.y() + sy);
    };
    for (int i = 0; i < n; ++i) {
        EntityBelief b;
        b.mean = noisy(world.true_robots[i], cfg.init_cov_robot);
        b.cov = cfg.init_cov_robot * Mat2::Identity();
        world.belief.robots.push_back(b);
    }
    for (int j = 0; j < cfg.n_targets; ++j) {
        EntityBelief b;
        b.mean = noisy(world.true_targets[j], cfg.init_cov_target);
        b.cov = cfg.init_cov_target * Mat2::Identity();
        world.belief.targets.push_back(b);
    }
    world.step = 0;
    return world;
}

// One closed-loop step: plan on the belief, filter, move the truth, sense at
// the true positions, update targets then robots, measure.
inline StepMetrics step(WorldState& world, const ScenarioConfig& cfg) {
    const NoiseModel nm = noise_model_from(cfg);

    // (1) desired controls from beliefs only
    PlanResult plan;
    switch (cfg.planner) {
        case PlannerKind::greedy:
            plan = greedy_select(world.belief, default_action_set(cfg), nm, cfg.dt);
            break;
        case PlannerKind::exhaustive:
            plan = exhaustive_select(world.belief, default_action_set(cfg), nm, cfg.dt);
            break;
        case PlannerKind::random:
            plan = random_select(world.belief, default_action_set(cfg), world.rng, nm, cfg.dt);
            break;
        case PlannerKind::continuous:
            plan = continuous_optimize(world.belief, nm, cfg.u_max, 100 * 2 * cfg.n_robots,
                                       world.rng, cfg.dt);
            break;
    }

    // (2) safety filter
    const FilterResult filtered = filter_controls(plan, world.belief, cfg);

    // (3) truth propagation
    for (int i = 0; i < cfg.n_robots; ++i) {
        const Vec2 w = sample_process_noise(world.rng, nm, EntityKind::robot);
        world.true_robots[i] =
            propagate_true_state(world.true_robots[i], filtered.actual[i], w, cfg.dt);
    }
    for (int j = 0; j < cfg.n_targets; ++j) {
        const Vec2 u = target_script_input(cfg.target_scripts[j], world.step);
        const Vec2 w = sample_process_noise(world.rng, nm, EntityKind::target);
        world.true_targets[j] = propagate_true_state(world.true_targets[j], u, w, cfg.dt);
    }

    // (4) measurements at true positions
    std::vector<Measurement> robot_obs, target_obs;
    detail::sample_measurements(world, nm, robot_obs, target_obs);

    // (5) EKF: predict, then targets first, then robots
    const JointBelief predicted_targets = predict_targets(world.belief, nm);
    const JointBelief predicted = predict_robots(predicted_targets, filtered.actual, nm, cfg.dt);
    const auto target_stack = stack_target_measurements(predicted.robot_means(),
                                                        predicted.target_means(), target_obs, nm);
    JointBelief updated = ekf_update_targets(predicted, target_stack);
    const auto robot_stack = stack_robot_measurements(predicted.robot_means(), robot_obs, nm);
    updated = ekf_update_robots(updated, robot_stack);
    world.belief = updated;
    ++world.step;

    // (6) metrics from the post-update state
    StepMetrics m = detail::snapshot_metrics(world, cfg);
    m.planner_time = plan.wall_time;
    m.filter_status = to_string(filtered.status);
    m.perturbation = filtered.perturbation;
    return m;
}

// Full horizon; row 0 captures the initial state before any control.
inline std::vector<StepMetrics> run(const ScenarioConfig& cfg) {
    WorldState world = init_world(cfg);
    std::vector<StepMetrics> metrics;
    metrics.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
    metrics.push_back(detail::snapshot_metrics(world, cfg));
    for (int t = 0; t < cfg.horizon; ++t) {
        try {
            metrics.push_back(step(world, cfg));
        } catch (const std::exception& e) {
            throw std::runtime_error("step " + std::to_string(t) + ": " + e.what());
        }
    }
    return metrics;
}

}  // namespace cotrack
