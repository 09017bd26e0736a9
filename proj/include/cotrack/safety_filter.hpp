#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cotrack/config.hpp"
#include "cotrack/connectivity.hpp"
#include "cotrack/core.hpp"
#include "cotrack/planner.hpp"

namespace cotrack {

// Feasible iff normal . u <= offset. A zero normal is vacuous and requires a
// non-negative offset.
struct Halfspace {
    Eigen::VectorXd normal;
    double offset = 0.0;
};

enum class FilterStatus { optimal, max_iters, infeasible_fallback };

inline std::string to_string(FilterStatus s) {
    switch (s) {
        case FilterStatus::optimal: return "optimal";
        case FilterStatus::max_iters: return "max_iters";
        case FilterStatus::infeasible_fallback: return "infeasible_fallback";
    }
    return "optimal";
}

struct FilterResult {
    std::vector<Vec2> actual;
    double perturbation = 0.0;  // ||u - u_des||_2 over the stacked vector
    int iterations = 0;
    FilterStatus status = FilterStatus::optimal;
    bool disconnected_at_entry = false;
    double max_violation = 0.0;
};

struct ConstraintSet {
    std::vector<Halfspace> halfspaces;
    double ball_radius = 0.0;  // per-robot norm ball on u_i
    int n_robots = 0;
};

// One connectivity halfspace (-beta . u <= gamma (lambda2 - eps)), one
// collision halfspace per unordered robot pair, and the per-robot motion
// balls. All geometry comes from estimated positions.
inline ConstraintSet build_constraints(const std::vector<Vec2>& robot_means,
                                       const GraphState& gs, const ScenarioConfig& cfg) {
    const int n = static_cast<int>(robot_means.size());
    if (n < 2) throw ShapeError("build_constraints needs at least two robots");
    if (gs.beta.size() != 2 * n) {
        throw ShapeError("graph state is missing the lambda2 gradient");
    }

    ConstraintSet out;
    out.n_robots = n;
    out.ball_radius = cfg.u_max;

    Halfspace connectivity;
    connectivity.normal = -gs.beta;
    connectivity.offset = cfg.cbf_gamma * (gs.lambda2 - cfg.eps_conn);
    out.halfspaces.push_back(std::move(connectivity));

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Vec2 delta = robot_means[i] - robot_means[j];
            const double h = delta.squaredNorm() - cfg.d_min * cfg.d_min;
            Halfspace collision;
            collision.normal = Eigen::VectorXd::Zero(2 * n);
            collision.normal.segment<2>(2 * i) = -delta;
            collision.normal.segment<2>(2 * j) = delta;
            collision.offset = cfg.cbf_gamma * 0.5 * h * h * h;
            out.halfspaces.push_back(std::move(collision));
        }
    }
    return out;
}

namespace detail {

inline Eigen::VectorXd project_halfspace(const Halfspace& hs, const Eigen::VectorXd& v) {
    const double nn = hs.normal.squaredNorm();
    if (nn == 0.0) return v;  // vacuous
    const double excess = hs.normal.dot(v) - hs.offset;
    if (excess <= 0.0) return v;
    return v - (excess / nn) * hs.normal;
}

inline Eigen::VectorXd project_balls(const Eigen::VectorXd& v, int n_robots, double radius) {
    Eigen::VectorXd out = v;
    for (int i = 0; i < n_robots; ++i) {
        const double norm = out.segment<2>(2 * i).norm();
        if (norm > radius) out.segment<2>(2 * i) *= radius / norm;
    }
    return out;
}

inline double constraint_violation(const ConstraintSet& cs, const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (const auto& hs : cs.halfspaces) {
        worst = std::max(worst, hs.normal.dot(v) - hs.offset);
    }
    for (int i = 0; i < cs.n_robots; ++i) {
        worst = std::max(worst, v.segment<2>(2 * i).norm() - cs.ball_radius);
    }
    return worst;
}

}  // namespace detail

// Euclidean projection of u_des onto the intersection of the halfspaces and
// the per-robot balls by Dykstra's alternating-projection algorithm. Each
// elementary projector is closed-form. If the iteration limit is reached with
// a violation above 1e-4 the motion balls are enforced and the rest is
// best-effort (infeasible_fallback).
inline FilterResult project_feasible(const Eigen::VectorXd& u_des, const ConstraintSet& cs,
                                     double tol = 1e-8, int max_iters = 10000) {
    if (tol <= 0.0) throw std::invalid_argument("project_feasible: tol must be > 0");
    const int n = cs.n_robots;
    if (u_des.size() != 2 * n) throw ShapeError("project_feasible: u_des has wrong dimension");

    const std::size_t n_sets = cs.halfspaces.size() + static_cast<std::size_t>(n);
    std::vector<Eigen::VectorXd> corrections(n_sets, Eigen::VectorXd::Zero(2 * n));

    FilterResult result;
    Eigen::VectorXd x = u_des;
    bool converged = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        const Eigen::VectorXd x_prev = x;
        std::size_t set_index = 0;
        for (const auto& hs : cs.halfspaces) {
            const Eigen::VectorXd y = x + corrections[set_index];
            x = detail::project_halfspace(hs, y);
            corrections[set_index] = y - x;
            ++set_index;
        }
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd y = x + corrections[set_index];
            const double norm = y.segment<2>(2 * i).norm();
            Eigen::VectorXd projected = y;
            if (norm > cs.ball_radius) {
                projected.segment<2>(2 * i) *= cs.ball_radius / norm;
            }
            x = projected;
            corrections[set_index] = y - x;
            ++set_index;
        }
        result.iterations = iter + 1;
        if ((x - x_prev).norm() < tol) {
            converged = true;
            break;
        }
    }

    result.max_violation = detail::constraint_violation(cs, x);
    if (converged && result.max_violation <= 1e-6) {
        result.status = FilterStatus::optimal;
    } else if (result.max_violation > 1e-4) {
        result.status = FilterStatus::infeasible_fallback;
        x = detail::project_balls(x, n, cs.ball_radius);
        result.max_violation = detail::constraint_violation(cs, x);
    } else {
        result.status = FilterStatus::max_iters;
    }
    // Motion limits are hard regardless of status.
    x = detail::project_balls(x, n, cs.ball_radius);

    result.actual.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) result.actual[i] = x.segment<2>(2 * i);
    result.perturbation = (x - u_des).norm();
    return result;
}

// Full second stage: graph + gradient + constraints + projection. With a
// single robot only the motion ball applies.
inline FilterResult filter_controls(const PlanResult& desired, const JointBelief& belief,
                                    const ScenarioConfig& cfg) {
    const int n = belief.n_robots();
    if (static_cast<int>(desired.desired.size()) != n) {
        throw ShapeError("filter_controls: desired input count does not match robot count");
    }
    Eigen::VectorXd u_des(2 * n);
    for (int i = 0; i < n; ++i) u_des.segment<2>(2 * i) = desired.desired[i];

    if (n < 2) {
        ConstraintSet balls_only;
        balls_only.ball_radius = cfg.u_max;
        balls_only.n_robots = n;
        return project_feasible(u_des, balls_only);
    }

    const auto means = belief.robot_means();
    GraphState gs = build_graph(means, cfg.r_c, cfg.sigma_norm);
    gs.beta = lambda2_gradient(gs, means, cfg.r_c, cfg.sigma_norm);
    const auto constraints = build_constraints(means, gs, cfg);
    FilterResult result = project_feasible(u_des, constraints);
    result.disconnected_at_entry = gs.lambda2 < cfg.eps_conn;
    return result;
}

}  // namespace cotrack
