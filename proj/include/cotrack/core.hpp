#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cotrack {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Centralized numeric tolerances.
inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kDegenerateDistance = 1e-9;
inline constexpr double kConditionLimit = 1e12;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct DegenerateGeometry : std::runtime_error {
    explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};
struct SingularInnovation : std::runtime_error {
    explicit SingularInnovation(const std::string& what) : std::runtime_error(what) {}
};
struct SearchSpaceTooLarge : std::runtime_error {
    explicit SearchSpaceTooLarge(const std::string& what) : std::runtime_error(what) {}
};
struct PlacementFailed : std::runtime_error {
    explicit PlacementFailed(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_finite(const Vec2& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y());
}

inline void require_finite(const Vec2& v, const char* what) {
    if (!is_finite(v)) throw std::invalid_argument(std::string(what) + ": non-finite component");
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = kSymmetryTol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// A matrix in a covariance role must be symmetric and PSD.
inline bool is_covariance(const Eigen::MatrixXd& m,
                          double sym_tol = kSymmetryTol,
                          double psd_tol = kPsdTol) {
    if (!m.allFinite()) return false;
    if (!is_symmetric(m, sym_tol)) return false;
    return min_eigenvalue(m) >= -psd_tol;
}

inline void require_covariance(const Eigen::MatrixXd& m, const char* what) {
    if (!is_covariance(m)) {
        throw std::invalid_argument(std::string(what) + ": matrix is not a valid covariance");
    }
}

// Mean position estimate with 2x2 covariance for one robot or target.
struct EntityBelief {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Zero();
};

// Stacked robot and target beliefs. The joint covariance is the block
// diagonal of the entity covariances; cross terms are not tracked.
struct JointBelief {
    std::vector<EntityBelief> robots;
    std::vector<EntityBelief> targets;

    int n_robots() const { return static_cast<int>(robots.size()); }
    int n_targets() const { return static_cast<int>(targets.size()); }

    std::vector<Vec2> robot_means() const {
        std::vector<Vec2> out;
        out.reserve(robots.size());
        for (const auto& b : robots) out.push_back(b.mean);
        return out;
    }
    std::vector<Vec2> target_means() const {
        std::vector<Vec2> out;
        out.reserve(targets.size());
        for (const auto& b : targets) out.push_back(b.mean);
        return out;
    }
    double trace_robots() const {
        double t = 0.0;
        for (const auto& b : robots) t += b.cov.trace();
        return t;
    }
    double trace_targets() const {
        double t = 0.0;
        for (const auto& b : targets) t += b.cov.trace();
        return t;
    }
};

inline void require_valid_belief(const JointBelief& belief) {
    if (belief.robots.empty() || belief.targets.empty()) {
        throw ShapeError("belief must contain at least one robot and one target");
    }
    for (const auto& b : belief.robots) {
        require_finite(b.mean, "robot mean");
        require_covariance(b.cov, "robot covariance");
    }
    for (const auto& b : belief.targets) {
        require_finite(b.mean, "target mean");
        require_covariance(b.cov, "target covariance");
    }
}

}  // namespace cotrack
