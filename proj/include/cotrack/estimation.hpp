#pragma once

#include <utility>
#include <vector>

#include "cotrack/core.hpp"
#include "cotrack/models.hpp"

namespace cotrack {

// Stacked measurement block: rows of jacobian/noise/residual align one-to-one
// with the measurement list. Target stacks are target-major with robot-minor
// rows; robot stacks are observer-major with observed-minor rows and the GPS
// self-measurement in the observer's own slot.
struct StackedMeasurementSet {
    std::vector<Measurement> measurements;
    Eigen::MatrixXd jacobian;
    Eigen::MatrixXd noise;
    Eigen::VectorXd residual;
};

inline JointBelief predict_targets(const JointBelief& belief, const NoiseModel& nm) {
    JointBelief out = belief;
    for (auto& t : out.targets) {
        t.cov += nm.q_target * Mat2::Identity();
    }
    return out;
}

inline JointBelief predict_robots(const JointBelief& belief, const std::vector<Vec2>& u,
                                  const NoiseModel& nm, double dt = 1.0) {
    if (static_cast<int>(u.size()) != belief.n_robots()) {
        throw ShapeError("predict_robots: one control input per robot required");
    }
    JointBelief out = belief;
    for (int i = 0; i < out.n_robots(); ++i) {
        out.robots[i].mean += dt * u[i];
        out.robots[i].cov += nm.q_robot * Mat2::Identity();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generic Kalman update, Joseph form. Works for any state/measurement size;
// the scalar case doubles as a hand-checkable oracle.
// ---------------------------------------------------------------------------
struct KalmanUpdateResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline KalmanUpdateResult kalman_joseph_update(const Eigen::VectorXd& x_prior,
                                               const Eigen::MatrixXd& p_prior,
                                               const Eigen::MatrixXd& h,
                                               const Eigen::MatrixXd& r,
                                               const Eigen::VectorXd& residual) {
    const Eigen::MatrixXd pht = p_prior * h.transpose();
    Eigen::MatrixXd s = h * pht + r;
    s = 0.5 * (s + s.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success || llt.rcond() < 1.0 / kConditionLimit) {
        throw SingularInnovation("innovation covariance is singular or ill-conditioned");
    }
    const Eigen::MatrixXd k = llt.solve(pht.transpose()).transpose();
    const Eigen::MatrixXd ikh =
        Eigen::MatrixXd::Identity(p_prior.rows(), p_prior.cols()) - k * h;
    Eigen::MatrixXd p_post = ikh * p_prior * ikh.transpose() + k * r * k.transpose();
    p_post = 0.5 * (p_post + p_post.transpose());
    return {x_prior + k * residual, p_post};
}

namespace detail {

inline Eigen::VectorXd stack_means(const std::vector<EntityBelief>& entities) {
    Eigen::VectorXd x(2 * entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) x.segment<2>(2 * i) = entities[i].mean;
    return x;
}

inline Eigen::MatrixXd blockdiag_cov(const std::vector<EntityBelief>& entities) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2 * entities.size(), 2 * entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) p.block<2, 2>(2 * i, 2 * i) = entities[i].cov;
    return p;
}

inline void split_into(std::vector<EntityBelief>& entities, const KalmanUpdateResult& res) {
    for (std::size_t i = 0; i < entities.size(); ++i) {
        entities[i].mean = res.mean.segment<2>(2 * i);
        entities[i].cov = res.cov.block<2, 2>(2 * i, 2 * i);
    }
}

// Jacobian/noise of the full robot->target stack evaluated at the given
// means, target-major. H columns span target states only.
inline void target_geometry(const std::vector<Vec2>& robot_means,
                            const std::vector<Vec2>& target_means, const NoiseModel& nm,
                            Eigen::MatrixXd& h, Eigen::MatrixXd& r) {
    const int n = static_cast<int>(robot_means.size());
    const int m = static_cast<int>(target_means.size());
    const int rows = 2 * n * m;
    h = Eigen::MatrixXd::Zero(rows, 2 * m);
    r = Eigen::MatrixXd::Zero(rows, rows);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            const int row = 2 * (j * n + i);
            const auto jac = range_bearing_jacobians(robot_means[i], target_means[j]);
            h.block<2, 2>(row, 2 * j) = jac.d_observed;
            r.block<2, 2>(row, row) = measurement_noise_cov(MeasurementKind::range_bearing,
                                                            robot_means[i], target_means[j], nm);
        }
    }
}

// Jacobian/noise of the robot stack (GPS self rows plus every ordered pair),
// observer-major. Pair rows carry both the observer and observed blocks.
inline void robot_geometry(const std::vector<Vec2>& robot_means, const NoiseModel& nm,
                           Eigen::MatrixXd& h, Eigen::MatrixXd& r) {
    const int n = static_cast<int>(robot_means.size());
    const int rows = 2 * n * n;
    h = Eigen::MatrixXd::Zero(rows, 2 * n);
    r = Eigen::MatrixXd::Zero(rows, rows);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int row = 2 * (i * n + j);
            if (i == j) {
                h.block<2, 2>(row, 2 * i) = Mat2::Identity();
                r.block<2, 2>(row, row) = measurement_noise_cov(MeasurementKind::gps,
                                                                robot_means[i], robot_means[i], nm);
            } else {
                const auto jac = range_bearing_jacobians(robot_means[i], robot_means[j]);
                h.block<2, 2>(row, 2 * i) = jac.d_observer;
                h.block<2, 2>(row, 2 * j) = jac.d_observed;
                r.block<2, 2>(row, row) = measurement_noise_cov(
                    MeasurementKind::range_bearing, robot_means[i], robot_means[j], nm);
            }
        }
    }
}

}  // namespace detail

inline StackedMeasurementSet stack_target_measurements(const std::vector<Vec2>& robot_means,
                                                       const std::vector<Vec2>& target_means,
                                                       const std::vector<Measurement>& raw,
                                                       const NoiseModel& nm) {
    const int n = static_cast<int>(robot_means.size());
    const int m = static_cast<int>(target_means.size());
    if (static_cast<int>(raw.size()) != n * m) {
        throw ShapeError("target stack needs exactly one measurement per (robot, target) pair");
    }
    // Index raw measurements by (observer, observed target).
    std::vector<const Measurement*> by_pair(static_cast<std::size_t>(n * m), nullptr);
    for (const auto& z : raw) {
        if (z.kind != MeasurementKind::range_bearing || z.observer < 0 || z.observer >= n ||
            z.observed < 0 || z.observed >= m || by_pair[z.observed * n + z.observer]) {
            throw ShapeError("target stack pair coverage is incomplete or duplicated");
        }
        by_pair[z.observed * n + z.observer] = &z;
    }

    StackedMeasurementSet out;
    detail::target_geometry(robot_means, target_means, nm, out.jacobian, out.noise);
    out.residual.resize(2 * n * m);
    out.measurements.reserve(raw.size());
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            const Measurement& z = *by_pair[j * n + i];
            const auto predicted = range_bearing(robot_means[i], target_means[j]);
            const int row = 2 * (j * n + i);
            out.residual(row) = z.value(0) - predicted.first;
            out.residual(row + 1) = wrap_angle(z.value(1) - predicted.second);
            out.measurements.push_back(z);
        }
    }
    return out;
}

inline StackedMeasurementSet stack_robot_measurements(const std::vector<Vec2>& robot_means,
                                                      const std::vector<Measurement>& raw,
                                                      const NoiseModel& nm) {
    const int n = static_cast<int>(robot_means.size());
    if (static_cast<int>(raw.size()) != n * n) {
        throw ShapeError("robot stack needs one GPS per robot and one measurement per ordered pair");
    }
    std::vector<const Measurement*> by_pair(static_cast<std::size_t>(n * n), nullptr);
    for (const auto& z : raw) {
        if (z.observer < 0 || z.observer >= n || z.observed < 0 || z.observed >= n ||
            by_pair[z.observer * n + z.observed]) {
            throw ShapeError("robot stack pair coverage is incomplete or duplicated");
        }
        const bool self = z.observer == z.observed;
        if (self != (z.kind == MeasurementKind::gps)) {
            throw ShapeError("robot stack: GPS must be the self-measurement");
        }
        by_pair[z.observer * n + z.observed] = &z;
    }

    StackedMeasurementSet out;
    detail::robot_geometry(robot_means, nm, out.jacobian, out.noise);
    out.residual.resize(2 * n * n);
    out.measurements.reserve(raw.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Measurement& z = *by_pair[i * n + j];
            const int row = 2 * (i * n + j);
            if (i == j) {
                out.residual.segment<2>(row) = z.value - robot_means[i];
            } else {
                const auto predicted = range_bearing(robot_means[i], robot_means[j]);
                out.residual(row) = z.value(0) - predicted.first;
                out.residual(row + 1) = wrap_angle(z.value(1) - predicted.second);
            }
            out.measurements.push_back(z);
        }
    }
    return out;
}

inline JointBelief ekf_update_targets(const JointBelief& prior, const StackedMeasurementSet& ms) {
    require_valid_belief(prior);
    if (ms.jacobian.cols() != 2 * prior.n_targets()) {
        throw ShapeError("target update: jacobian column count does not match target count");
    }
    const auto res = kalman_joseph_update(detail::stack_means(prior.targets),
                                          detail::blockdiag_cov(prior.targets), ms.jacobian,
                                          ms.noise, ms.residual);
    JointBelief out = prior;
    detail::split_into(out.targets, res);
    return out;
}

inline JointBelief ekf_update_robots(const JointBelief& prior, const StackedMeasurementSet& ms) {
    require_valid_belief(prior);
    if (ms.jacobian.cols() != 2 * prior.n_robots()) {
        throw ShapeError("robot update: jacobian column count does not match robot count");
    }
    const auto res = kalman_joseph_update(detail::stack_means(prior.robots),
                                          detail::blockdiag_cov(prior.robots), ms.jacobian,
                                          ms.noise, ms.residual);
    JointBelief out = prior;
    detail::split_into(out.robots, res);
    return out;
}

// ---------------------------------------------------------------------------
// Covariance-only oracle for the planner. Measurement values never enter the
// covariance recursion, so the posterior traces depend only on geometry and
// noise. The information form below is algebraically identical to the Joseph
// update and much cheaper inside the planner's candidate loop; when a noise
// block is singular it falls back to the stacked Joseph route.
// ---------------------------------------------------------------------------

namespace detail {

inline Mat2 inverse2x2(const Mat2& m) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        throw SingularInnovation("2x2 matrix not invertible in covariance-only update");
    }
    Mat2 inv;
    inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return inv / det;
}

inline double joseph_cov_trace(const std::vector<EntityBelief>& entities,
                               const Eigen::MatrixXd& h, const Eigen::MatrixXd& r) {
    const Eigen::VectorXd x = stack_means(entities);
    const Eigen::MatrixXd p = blockdiag_cov(entities);
    const auto res = kalman_joseph_update(x, p, h, r, Eigen::VectorXd::Zero(h.rows()));
    return res.cov.trace();
}

}  // namespace detail

inline std::pair<double, double> oracle_posterior_traces(
    const std::vector<Vec2>& hypothetical_robot_means, const JointBelief& belief,
    const NoiseModel& nm) {
    require_valid_belief(belief);
    const int n = belief.n_robots();
    const int m = belief.n_targets();
    if (static_cast<int>(hypothetical_robot_means.size()) != n) {
        throw ShapeError("oracle: one hypothetical mean per robot required");
    }
    for (const auto& p : hypothetical_robot_means) require_finite(p, "hypothetical robot mean");

    const bool target_noise_pd = nm.sigma_range > 0.0 && nm.sigma_bearing > 0.0;
    const bool robot_noise_pd = target_noise_pd && nm.sigma_gps > 0.0;

    // Targets: the stack decouples per target, each contribution is rank-2.
    double tr_targets = 0.0;
    {
        std::vector<EntityBelief> predicted = belief.targets;
        for (auto& t : predicted) t.cov += nm.q_target * Mat2::Identity();
        bool fast = target_noise_pd;
        for (const auto& t : predicted) {
            if (t.cov.determinant() <= 0.0) fast = false;
        }
        if (fast) {
            for (const auto& t : predicted) {
                Mat2 omega = detail::inverse2x2(t.cov);
                for (int i = 0; i < n; ++i) {
                    const auto jac = range_bearing_jacobians(hypothetical_robot_means[i], t.mean);
                    const Mat2 r = measurement_noise_cov(MeasurementKind::range_bearing,
                                                         hypothetical_robot_means[i], t.mean, nm);
                    const Mat2 rinv_h =
                        Eigen::Vector2d(1.0 / r(0, 0), 1.0 / r(1, 1)).asDiagonal() * jac.d_observed;
                    omega += jac.d_observed.transpose() * rinv_h;
                }
                tr_targets += detail::inverse2x2(omega).trace();
            }
        } else {
            Eigen::MatrixXd h, r;
            detail::target_geometry(hypothetical_robot_means, belief.target_means(), nm, h, r);
            tr_targets = detail::joseph_cov_trace(predicted, h, r);
        }
    }

    // Robots: GPS rows plus every ordered pair; pair rows couple the two
    // robot blocks, so the information matrix is assembled jointly.
    double tr_robots = 0.0;
    {
        std::vector<EntityBelief> predicted = belief.robots;
        for (int i = 0; i < n; ++i) {
            predicted[i].mean = hypothetical_robot_means[i];
            predicted[i].cov += nm.q_robot * Mat2::Identity();
        }
        bool fast = robot_noise_pd;
        for (const auto& b : predicted) {
            if (b.cov.determinant() <= 0.0) fast = false;
        }
        if (fast) {
            Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
            const double gps_info = 1.0 / (nm.sigma_gps * nm.sigma_gps);
            for (int i = 0; i < n; ++i) {
                omega.block<2, 2>(2 * i, 2 * i) =
                    detail::inverse2x2(predicted[i].cov) + gps_info * Mat2::Identity();
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (i == j) continue;
                    const auto jac = range_bearing_jacobians(hypothetical_robot_means[i],
                                                             hypothetical_robot_means[j]);
                    const Mat2 r = measurement_noise_cov(MeasurementKind::range_bearing,
                                                         hypothetical_robot_means[i],
                                                         hypothetical_robot_means[j], nm);
                    const Eigen::Vector2d rinv(1.0 / r(0, 0), 1.0 / r(1, 1));
                    const Mat2 a = jac.d_observer;  // columns of robot i
                    const Mat2 b = jac.d_observed;  // columns of robot j
                    const Mat2 ra = rinv.asDiagonal() * a;
                    const Mat2 rb = rinv.asDiagonal() * b;
                    omega.block<2, 2>(2 * i, 2 * i) += a.transpose() * ra;
                    omega.block<2, 2>(2 * j, 2 * j) += b.transpose() * rb;
                    omega.block<2, 2>(2 * i, 2 * j) += a.transpose() * rb;
                    omega.block<2, 2>(2 * j, 2 * i) += b.transpose() * ra;
                }
            }
            Eigen::LLT<Eigen::MatrixXd> llt(omega);
            if (llt.info() != Eigen::Success) {
                throw SingularInnovation("robot information matrix not positive definite");
            }
            tr_robots = llt.solve(Eigen::MatrixXd::Identity(2 * n, 2 * n)).trace();
        } else {
            Eigen::MatrixXd h, r;
            detail::robot_geometry(hypothetical_robot_means, nm, h, r);
            tr_robots = detail::joseph_cov_trace(predicted, h, r);
        }
    }

    return {tr_robots, tr_targets};
}

}  // namespace cotrack
