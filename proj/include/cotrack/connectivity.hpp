#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "cotrack/core.hpp"

namespace cotrack {

// Weighted communication graph snapshot. beta is filled by lambda2_gradient.
struct GraphState {
    Eigen::MatrixXd adjacency;
    Eigen::MatrixXd laplacian;
    double lambda2 = 0.0;
    Eigen::VectorXd fiedler;
    Eigen::VectorXd beta;
    double lambda2_gap = 0.0;      // lambda3 - lambda2; gradient ill-defined when ~0
    bool lambda2_simple = true;
};

inline constexpr double kEigenvalueGapTol = 1e-8;

// exp((r_c^2 - d^2)^2 / sigma) - 1 inside the communication range, 0 outside.
// Continuous at d = r_c.
inline double adjacency_weight(double d, double r_c, double sigma) {
    if (d > r_c) return 0.0;
    const double margin = r_c * r_c - d * d;
    return std::exp(margin * margin / sigma) - 1.0;
}

// d adjacency_weight / d x_i for the edge (i, j); zero outside the range.
inline Vec2 adjacency_weight_gradient(const Vec2& xi, const Vec2& xj, double r_c, double sigma) {
    const Vec2 delta = xi - xj;
    const double d2 = delta.squaredNorm();
    if (d2 > r_c * r_c) return Vec2::Zero();
    const double margin = r_c * r_c - d2;
    const double scale = -(4.0 * margin / sigma) * std::exp(margin * margin / sigma);
    return scale * delta;
}

inline GraphState build_graph(const std::vector<Vec2>& robot_means, double r_c, double sigma) {
    const int n = static_cast<int>(robot_means.size());
    if (n < 2) throw ShapeError("build_graph needs at least two robots");
    for (const auto& p : robot_means) require_finite(p, "robot mean");

    GraphState gs;
    gs.adjacency = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double w = adjacency_weight((robot_means[i] - robot_means[j]).norm(), r_c, sigma);
            gs.adjacency(i, j) = w;
            gs.adjacency(j, i) = w;
        }
    }
    gs.laplacian = Eigen::MatrixXd(gs.adjacency.rowwise().sum().asDiagonal()) - gs.adjacency;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gs.laplacian);
    gs.lambda2 = es.eigenvalues()(1);
    gs.fiedler = es.eigenvectors().col(1);
    gs.lambda2_gap = (n > 2) ? es.eigenvalues()(2) - es.eigenvalues()(1)
                             : std::numeric_limits<double>::infinity();
    gs.lambda2_simple = gs.lambda2_gap >= kEigenvalueGapTol;

    // Deterministic sign: first significant component positive.
    for (int i = 0; i < n; ++i) {
        if (std::abs(gs.fiedler(i)) > 1e-9) {
            if (gs.fiedler(i) < 0.0) gs.fiedler = -gs.fiedler;
            break;
        }
    }
    gs.beta = Eigen::VectorXd::Zero(2 * n);
    return gs;
}

// beta_i = sum_j (d a_ij / d x_i) (v2_i - v2_j)^2, stacked robot-major.
inline Eigen::VectorXd lambda2_gradient(const GraphState& gs,
                                        const std::vector<Vec2>& robot_means, double r_c,
                                        double sigma) {
    const int n = static_cast<int>(robot_means.size());
    if (gs.fiedler.size() != n) throw ShapeError("graph state does not match robot count");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        Vec2 bi = Vec2::Zero();
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dv = gs.fiedler(i) - gs.fiedler(j);
            bi += adjacency_weight_gradient(robot_means[i], robot_means[j], r_c, sigma) * (dv * dv);
        }
        beta.segment<2>(2 * i) = bi;
    }
    return beta;
}

// Unweighted-graph connectivity by BFS; independent oracle for lambda2 > 0.
inline bool is_connected_bfs(const std::vector<Vec2>& robot_means, double r_c) {
    const int n = static_cast<int>(robot_means.size());
    if (n <= 1) return true;
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int count = 1;
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.pop();
        for (int j = 0; j < n; ++j) {
            if (seen[j]) continue;
            if ((robot_means[i] - robot_means[j]).norm() <= r_c) {
                seen[j] = true;
                ++count;
                frontier.push(j);
            }
        }
    }
    return count == n;
}

}  // namespace cotrack
