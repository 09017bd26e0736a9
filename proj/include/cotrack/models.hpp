#pragma once

#include <cmath>
#include <random>
#include <utility>

#include "cotrack/config.hpp"
#include "cotrack/core.hpp"

namespace cotrack {

enum class MeasurementKind { range_bearing, gps };
enum class EntityKind { robot, target };

struct Measurement {
    MeasurementKind kind = MeasurementKind::range_bearing;
    Eigen::Vector2d value = Eigen::Vector2d::Zero();  // (range, bearing) or (x, y)
    Mat2 noise_cov = Mat2::Zero();
    int observer = -1;
    int observed = -1;
};

struct NoiseModel {
    double q_robot = 0.0;
    double q_target = 0.0;
    double sigma_range = 0.0;
    double sigma_bearing = 0.0;
    double sigma_gps = 0.0;
    double range_noise_scale = 0.0;  // 1/m^2; 0 disables distance scaling
};

inline NoiseModel noise_model_from(const ScenarioConfig& cfg) {
    return NoiseModel{cfg.q_robot, cfg.q_target, cfg.sigma_range,
                      cfg.sigma_bearing, cfg.sigma_gps, cfg.range_noise_scale};
}

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * M_PI);
    if (w <= -M_PI) w += 2.0 * M_PI;
    return w;
}

// Single-integrator step: x' = x + dt*u + w.
inline Vec2 propagate_true_state(const Vec2& x, const Vec2& u, const Vec2& noise_sample,
                                 double dt = 1.0) {
    require_finite(x, "state");
    require_finite(u, "control");
    require_finite(noise_sample, "noise sample");
    return x + dt * u + noise_sample;
}

inline std::pair<double, double> range_bearing(const Vec2& observer, const Vec2& observed) {
    require_finite(observer, "observer");
    require_finite(observed, "observed");
    const Vec2 d = observed - observer;
    const double range = d.norm();
    if (range <= kDegenerateDistance) {
        throw DegenerateGeometry("range-bearing measurement at zero distance");
    }
    return {range, std::atan2(d.y(), d.x())};
}

struct RangeBearingJacobians {
    Mat2 d_observed;  // dh/d(observed)
    Mat2 d_observer;  // dh/d(observer) = -dh/d(observed)
};

inline RangeBearingJacobians range_bearing_jacobians(const Vec2& observer, const Vec2& observed) {
    const Vec2 delta = observed - observer;
    const double d2 = delta.squaredNorm();
    const double d = std::sqrt(d2);
    if (d <= kDegenerateDistance) {
        throw DegenerateGeometry("range-bearing Jacobian at zero distance");
    }
    Mat2 h;
    h << delta.x() / d, delta.y() / d,
        -delta.y() / d2, delta.x() / d2;
    return {h, -h};
}

inline Mat2 measurement_noise_cov(MeasurementKind kind, const Vec2& observer,
                                  const Vec2& observed, const NoiseModel& nm) {
    Mat2 r = Mat2::Zero();
    if (kind == MeasurementKind::gps) {
        r.diagonal().setConstant(nm.sigma_gps * nm.sigma_gps);
        return r;
    }
    const double d2 = (observed - observer).squaredNorm();
    r(0, 0) = nm.sigma_range * nm.sigma_range * (1.0 + nm.range_noise_scale * d2);
    r(1, 1) = nm.sigma_bearing * nm.sigma_bearing;
    return r;
}

// N(0, q*I2) draw; q selected by entity kind.
inline Vec2 sample_process_noise(std::mt19937_64& rng, const NoiseModel& nm, EntityKind kind) {
    const double q = (kind == EntityKind::robot) ? nm.q_robot : nm.q_target;
    if (q == 0.0) return Vec2::Zero();
    std::normal_distribution<double> dist(0.0, std::sqrt(q));
    const double x = dist(rng);
    const double y = dist(rng);
    return Vec2(x, y);
}

}  // namespace cotrack
