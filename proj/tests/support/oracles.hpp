// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cotrack/core.hpp"

namespace test_support {

// Central finite differences of (range, bearing) w.r.t. the observed point.
// Bearing differences are wrapped before dividing.
inline Eigen::Matrix2d fd_jacobian_observed(const cotrack::Vec2& observer,
                                            const cotrack::Vec2& observed, double step = 1e-6) {
    const auto h = [&](const cotrack::Vec2& q) {
        const cotrack::Vec2 d = q - observer;
        return Eigen::Vector2d(d.norm(), std::atan2(d.y(), d.x()));
    };
    const auto wrap = [](double a) {
        double w = std::remainder(a, 2.0 * M_PI);
        if (w <= -M_PI) w += 2.0 * M_PI;
        return w;
    };
    Eigen::Matrix2d jac;
    for (int c = 0; c < 2; ++c) {
        cotrack::Vec2 plus = observed;
        cotrack::Vec2 minus = observed;
        plus(c) += step;
        minus(c) -= step;
        const Eigen::Vector2d hp = h(plus);
        const Eigen::Vector2d hm = h(minus);
        jac(0, c) = (hp(0) - hm(0)) / (2.0 * step);
        jac(1, c) = wrap(hp(1) - hm(1)) / (2.0 * step);
    }
    return jac;
}

// Central finite differences of a scalar function of stacked robot positions.
inline Eigen::VectorXd fd_gradient(const std::function<double(const std::vector<cotrack::Vec2>&)>& f,
                                   std::vector<cotrack::Vec2> points, double step = 1e-6) {
    Eigen::VectorXd grad(2 * points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int c = 0; c < 2; ++c) {
            const double saved = points[i](c);
            points[i](c) = saved + step;
            const double fp = f(points);
            points[i](c) = saved - step;
            const double fm = f(points);
            points[i](c) = saved;
            grad(2 * i + c) = (fp - fm) / (2.0 * step);
        }
    }
    return grad;
}

// Log-barrier interior-point reference for
//   min 1/2 ||u - d||^2  s.t.  a_k . u <= b_k,  ||u_i|| <= r per robot,
// used as an independent check of the projection solver. Requires a strictly
// feasible start (u = 0 in all generated instances).
struct BarrierProblem {
    Eigen::VectorXd target;                       // d
    std::vector<Eigen::VectorXd> normals;         // a_k
    std::vector<double> offsets;                  // b_k
    double ball_radius = 0.0;
    int n_robots = 0;
};

inline Eigen::VectorXd barrier_reference_qp(const BarrierProblem& p) {
    const int dim = static_cast<int>(p.target.size());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);

    const auto slack_ok = [&](const Eigen::VectorXd& v) {
        for (std::size_t k = 0; k < p.normals.size(); ++k) {
            if (p.normals[k].squaredNorm() == 0.0) continue;
            if (p.offsets[k] - p.normals[k].dot(v) <= 0.0) return false;
        }
        for (int i = 0; i < p.n_robots; ++i) {
            if (p.ball_radius * p.ball_radius - v.segment<2>(2 * i).squaredNorm() <= 0.0)
                return false;
        }
        return true;
    };
    if (!slack_ok(u)) throw std::runtime_error("barrier reference needs a strictly feasible origin");

    double mu = 1.0;
    for (int outer = 0; outer < 60 && mu > 1e-11; ++outer, mu *= 0.5) {
        for (int newton = 0; newton < 50; ++newton) {
            Eigen::VectorXd grad = u - p.target;
            Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(dim, dim);
            for (std::size_t k = 0; k < p.normals.size(); ++k) {
                if (p.normals[k].squaredNorm() == 0.0) continue;
                const double s = p.offsets[k] - p.normals[k].dot(u);
                grad += (mu / s) * p.normals[k];
                hess += (mu / (s * s)) * (p.normals[k] * p.normals[k].transpose());
            }
            for (int i = 0; i < p.n_robots; ++i) {
                const Eigen::Vector2d ui = u.segment<2>(2 * i);
                const double s = p.ball_radius * p.ball_radius - ui.squaredNorm();
                grad.segment<2>(2 * i) += (2.0 * mu / s) * ui;
                hess.block<2, 2>(2 * i, 2 * i) +=
                    (2.0 * mu / s) * Eigen::Matrix2d::Identity() +
                    (4.0 * mu / (s * s)) * (ui * ui.transpose());
            }
            const Eigen::VectorXd dir = hess.ldlt().solve(-grad);
            if (dir.norm() < 1e-13) break;
            double t = 1.0;
            while (t > 1e-12 && !slack_ok(u + t * dir)) t *= 0.5;
            u += t * dir;
            if (t * dir.norm() < 1e-13) break;
        }
    }
    return u;
}

}  // namespace test_support
