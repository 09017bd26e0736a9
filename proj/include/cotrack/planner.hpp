#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "cotrack/config.hpp"
#include "cotrack/core.hpp"
#include "cotrack/estimation.hpp"

namespace cotrack {

// Per-robot candidate control inputs.
struct ActionSet {
    std::vector<std::vector<Vec2>> candidates;

    int n_robots() const { return static_cast<int>(candidates.size()); }
    long total_candidates() const {
        long t = 0;
        for (const auto& c : candidates) t += static_cast<long>(c.size());
        return t;
    }
};

struct PlanResult {
    std::vector<Vec2> desired;
    double predicted_trace = 0.0;
    long evaluations = 0;
    double wall_time = 0.0;  // seconds; the only non-deterministic field
};

// action_headings equally spaced directions at action_magnitude, plus the
// zero action.
inline ActionSet default_action_set(const ScenarioConfig& cfg) {
    std::vector<Vec2> actions;
    if (cfg.action_magnitude > 0.0) {
        for (int k = 0; k < cfg.action_headings; ++k) {
            const double theta = 2.0 * M_PI * k / cfg.action_headings;
            actions.emplace_back(cfg.action_magnitude * std::cos(theta),
                                 cfg.action_magnitude * std::sin(theta));
        }
    }
    actions.emplace_back(0.0, 0.0);
    ActionSet set;
    set.candidates.assign(static_cast<std::size_t>(cfg.n_robots), actions);
    return set;
}

namespace detail {

class StopWatch {
  public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

inline double joint_trace(const std::vector<Vec2>& robot_means, const JointBelief& belief,
                          const NoiseModel& nm) {
    const auto traces = oracle_posterior_traces(robot_means, belief, nm);
    return traces.first + traces.second;
}

inline void check_actions(const JointBelief& belief, const ActionSet& actions) {
    if (actions.n_robots() != belief.n_robots()) {
        throw ShapeError("action set does not match robot count");
    }
    for (const auto& c : actions.candidates) {
        if (c.empty()) throw ShapeError("every robot needs at least one candidate action");
    }
}

}  // namespace detail

// Sequential greedy selection: robots choose in index order, each scoring its
// candidates through the covariance-only oracle with earlier robots held at
// their chosen hypothetical positions and later robots at their prior means.
// Ties break toward the lower candidate index.
inline PlanResult greedy_select(const JointBelief& belief, const ActionSet& actions,
                                const NoiseModel& nm, double dt = 1.0) {
    detail::check_actions(belief, actions);
    detail::StopWatch watch;
    const int n = belief.n_robots();
    std::vector<Vec2> hypothetical = belief.robot_means();

    PlanResult result;
    result.desired.assign(static_cast<std::size_t>(n), Vec2::Zero());
    double best_trace = 0.0;
    for (int i = 0; i < n; ++i) {
        double tr_min = std::numeric_limits<double>::infinity();
        Vec2 best_position = hypothetical[i];
        for (const auto& u : actions.candidates[i]) {
            hypothetical[i] = belief.robots[i].mean + dt * u;
            const double tr = detail::joint_trace(hypothetical, belief, nm);
            ++result.evaluations;
            if (tr < tr_min) {
                tr_min = tr;
                result.desired[i] = u;
                best_position = hypothetical[i];
            }
        }
        hypothetical[i] = best_position;
        best_trace = tr_min;
    }
    result.predicted_trace = best_trace;
    result.wall_time = watch.seconds();
    return result;
}

// Global minimizer over every joint action tuple; oracle for the greedy gap.
inline PlanResult exhaustive_select(const JointBelief& belief, const ActionSet& actions,
                                    const NoiseModel& nm, double dt = 1.0) {
    detail::check_actions(belief, actions);
    double combos = 1.0;
    for (const auto& c : actions.candidates) combos *= static_cast<double>(c.size());
    if (combos > 1e6) {
        throw SearchSpaceTooLarge("exhaustive search over more than 1e6 joint actions");
    }

    detail::StopWatch watch;
    const int n = belief.n_robots();
    std::vector<std::size_t> index(static_cast<std::size_t>(n), 0);
    std::vector<Vec2> hypothetical(static_cast<std::size_t>(n));

    PlanResult result;
    result.predicted_trace = std::numeric_limits<double>::infinity();
    while (true) {
        for (int i = 0; i < n; ++i) {
            hypothetical[i] = belief.robots[i].mean + dt * actions.candidates[i][index[i]];
        }
        const double tr = detail::joint_trace(hypothetical, belief, nm);
        ++result.evaluations;
        if (tr < result.predicted_trace) {
            result.predicted_trace = tr;
            result.desired.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) result.desired[i] = actions.candidates[i][index[i]];
        }
        // lexicographic advance, last robot fastest
        int pos = n - 1;
        while (pos >= 0) {
            if (++index[pos] < actions.candidates[pos].size()) break;
            index[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    result.wall_time = watch.seconds();
    return result;
}

inline PlanResult random_select(const JointBelief& belief, const ActionSet& actions,
                                std::mt19937_64& rng, const NoiseModel& nm, double dt = 1.0) {
    detail::check_actions(belief, actions);
    detail::StopWatch watch;
    const int n = belief.n_robots();

    PlanResult result;
    result.desired.resize(static_cast<std::size_t>(n));
    std::vector<Vec2> hypothetical(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, actions.candidates[i].size() - 1);
        result.desired[i] = actions.candidates[i][pick(rng)];
        hypothetical[i] = belief.robots[i].mean + dt * result.desired[i];
    }
    result.predicted_trace = detail::joint_trace(hypothetical, belief, nm);
    result.evaluations = 1;
    result.wall_time = watch.seconds();
    return result;
}

// Cross-entropy method over the joint ball-constrained continuous action
// space; stands in for an external NLP solver. Deterministic per rng state.
inline PlanResult continuous_optimize(const JointBelief& belief, const NoiseModel& nm,
                                      double u_max, long budget, std::mt19937_64& rng,
                                      double dt = 1.0) {
    if (budget < 100) throw ConfigError("continuous_optimize budget must be >= 100");
    require_valid_belief(belief);

    detail::StopWatch watch;
    const int n = belief.n_robots();
    const int dim = 2 * n;
    constexpr int kPopulation = 32;
    constexpr double kEliteFraction = 0.25;
    constexpr int kElite = static_cast<int>(kPopulation * kEliteFraction);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd stddev = Eigen::VectorXd::Constant(dim, 0.5 * u_max);
    std::normal_distribution<double> unit(0.0, 1.0);

    const auto project = [&](Eigen::VectorXd v) {
        for (int i = 0; i < n; ++i) {
            const double norm = v.segment<2>(2 * i).norm();
            if (norm > u_max) v.segment<2>(2 * i) *= u_max / norm;
        }
        return v;
    };
    const auto score = [&](const Eigen::VectorXd& v) {
        std::vector<Vec2> hypothetical(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            hypothetical[i] = belief.robots[i].mean + dt * v.segment<2>(2 * i);
        }
        return detail::joint_trace(hypothetical, belief, nm);
    };

    PlanResult result;
    Eigen::VectorXd best = project(Eigen::VectorXd::Zero(dim));
    double best_trace = std::numeric_limits<double>::infinity();
    double prev_elite_mean = std::numeric_limits<double>::infinity();

    std::vector<Eigen::VectorXd> samples(kPopulation);
    std::vector<std::pair<double, int>> scored(kPopulation);
    while (result.evaluations + kPopulation <= budget) {
        for (int s = 0; s < kPopulation; ++s) {
            Eigen::VectorXd v(dim);
            for (int d = 0; d < dim; ++d) v(d) = mean(d) + stddev(d) * unit(rng);
            samples[s] = project(std::move(v));
            scored[s] = {score(samples[s]), s};
            ++result.evaluations;
        }
        std::sort(scored.begin(), scored.end());
        if (scored.front().first < best_trace) {
            best_trace = scored.front().first;
            best = samples[static_cast<std::size_t>(scored.front().second)];
        }
        // Gaussian refit on the elite set.
        Eigen::VectorXd elite_mean = Eigen::VectorXd::Zero(dim);
        for (int e = 0; e < kElite; ++e) elite_mean += samples[static_cast<std::size_t>(scored[e].second)];
        elite_mean /= kElite;
        Eigen::VectorXd elite_var = Eigen::VectorXd::Zero(dim);
        for (int e = 0; e < kElite; ++e) {
            const auto& s = samples[static_cast<std::size_t>(scored[e].second)];
            elite_var += (s - elite_mean).cwiseProduct(s - elite_mean);
        }
        elite_var /= kElite;
        mean = elite_mean;
        stddev = (elite_var.cwiseMax(1e-8)).cwiseSqrt();

        double elite_score = 0.0;
        for (int e = 0; e < kElite; ++e) elite_score += scored[e].first;
        elite_score /= kElite;
        if (prev_elite_mean - elite_score < 1e-6) break;
        prev_elite_mean = elite_score;
    }

    result.desired.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) result.desired[i] = best.segment<2>(2 * i);
    result.predicted_trace = best_trace;
    result.wall_time = watch.seconds();
    return result;
}

}  // namespace cotrack
