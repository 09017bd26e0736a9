#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cotrack/estimation.hpp"

using namespace cotrack;
using Catch::Approx;

namespace {

NoiseModel default_nm() {
    NoiseModel nm;
    nm.q_robot = 0.01;
    nm.q_target = 0.01;
    nm.sigma_range = 0.1;
    nm.sigma_bearing = 0.05;
    nm.sigma_gps = 0.5;
    return nm;
}

Mat2 random_psd(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Mat2 b;
    b << unit(rng), unit(rng), unit(rng), unit(rng);
    return scale * (b * b.transpose()) + 0.05 * Mat2::Identity();
}

JointBelief random_belief(std::mt19937_64& rng, int n, int m) {
    std::uniform_real_distribution<double> pos(-8.0, 8.0);
    JointBelief belief;
    for (int i = 0; i < n; ++i) {
        belief.robots.push_back({Vec2(pos(rng), pos(rng)), random_psd(rng)});
    }
    for (int j = 0; j < m; ++j) {
        belief.targets.push_back({Vec2(pos(rng), pos(rng)), random_psd(rng, 3.0)});
    }
    // keep geometry non-degenerate
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            if ((belief.robots[i].mean - belief.targets[j].mean).norm() < 0.5) {
                belief.targets[j].mean += Vec2(1.0, 1.0);
            }
        }
        for (int k = i + 1; k < n; ++k) {
            if ((belief.robots[i].mean - belief.robots[k].mean).norm() < 0.5) {
                belief.robots[k].mean += Vec2(-1.0, 1.5);
            }
        }
    }
    return belief;
}

// Synthetic measurement lists consistent with the stack contracts; residuals
// are offsets from the exact prediction.
std::vector<Measurement> target_measurements(const JointBelief& belief, const NoiseModel& nm,
                                             double range_offset = 0.0,
                                             double bearing_offset = 0.0) {
    std::vector<Measurement> out;
    for (int j = 0; j < belief.n_targets(); ++j) {
        for (int i = 0; i < belief.n_robots(); ++i) {
            Measurement z;
            z.kind = MeasurementKind::range_bearing;
            z.observer = i;
            z.observed = j;
            const auto rb = range_bearing(belief.robots[i].mean, belief.targets[j].mean);
            z.value = Eigen::Vector2d(rb.first + range_offset,
                                      wrap_angle(rb.second + bearing_offset));
            z.noise_cov = measurement_noise_cov(MeasurementKind::range_bearing,
                                                belief.robots[i].mean, belief.targets[j].mean, nm);
            out.push_back(z);
        }
    }
    return out;
}

std::vector<Measurement> robot_measurements(const JointBelief& belief, const NoiseModel& nm,
                                            double offset = 0.0) {
    std::vector<Measurement> out;
    const int n = belief.n_robots();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Measurement z;
            z.observer = i;
            z.observed = j;
            if (i == j) {
                z.kind = MeasurementKind::gps;
                z.value = belief.robots[i].mean + Vec2(offset, offset);
                z.noise_cov = measurement_noise_cov(MeasurementKind::gps, belief.robots[i].mean,
                                                    belief.robots[i].mean, nm);
            } else {
                z.kind = MeasurementKind::range_bearing;
                const auto rb = range_bearing(belief.robots[i].mean, belief.robots[j].mean);
                z.value = Eigen::Vector2d(rb.first + offset, wrap_angle(rb.second));
                z.noise_cov =
                    measurement_noise_cov(MeasurementKind::range_bearing, belief.robots[i].mean,
                                          belief.robots[j].mean, nm);
            }
            out.push_back(z);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("target prediction adds process noise to the covariance") {
    NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(0, 0), Mat2::Identity()});
    belief.targets.push_back({Vec2(3, 4), Mat2::Identity()});

    auto predicted = predict_targets(belief, nm);
    CHECK(predicted.targets[0].cov(0, 0) == Approx(1.01));
    CHECK(predicted.targets[0].mean == belief.targets[0].mean);

    nm.q_target = 0.0;
    predicted = predict_targets(belief, nm);
    CHECK(predicted.targets[0].cov == belief.targets[0].cov);

    belief.targets[0].cov = 10.0 * Mat2::Identity();
    nm.q_target = 0.01;
    predicted = predict_targets(belief, nm);
    CHECK(predicted.targets[0].cov.trace() == Approx(20.0 + 2 * nm.q_target));
}

TEST_CASE("robot prediction applies controls and process noise") {
    NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(0, 0), 25.0 * Mat2::Identity()});
    belief.targets.push_back({Vec2(5, 0), Mat2::Identity()});

    nm.q_robot = 0.0;
    auto same = predict_robots(belief, {Vec2(0, 0)}, nm);
    CHECK(same.robots[0].mean == belief.robots[0].mean);
    CHECK(same.robots[0].cov == belief.robots[0].cov);

    nm.q_robot = 0.01;
    auto moved = predict_robots(belief, {Vec2(1.5, 0)}, nm);
    CHECK(moved.robots[0].mean == Vec2(1.5, 0));
    CHECK(moved.robots[0].cov.trace() == Approx(50.0 + 2 * nm.q_robot));

    CHECK_THROWS_AS(predict_robots(belief, {}, nm), ShapeError);
}

TEST_CASE("target stack shapes and residuals") {
    const NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(0, 0), Mat2::Identity()});
    belief.targets.push_back({Vec2(5, 0), Mat2::Identity()});

    auto raw = target_measurements(belief, nm);
    auto ms = stack_target_measurements(belief.robot_means(), belief.target_means(), raw, nm);
    CHECK(ms.jacobian.rows() == 2);
    CHECK(ms.jacobian.cols() == 2);
    const auto jac = range_bearing_jacobians(Vec2(0, 0), Vec2(5, 0));
    CHECK(ms.jacobian.isApprox(jac.d_observed, 1e-12));
    CHECK(ms.residual.norm() == Approx(0.0).margin(1e-12));

    belief.robots.push_back({Vec2(1, 3), Mat2::Identity()});
    raw = target_measurements(belief, nm);
    ms = stack_target_measurements(belief.robot_means(), belief.target_means(), raw, nm);
    CHECK(ms.jacobian.rows() == 4);
    CHECK(ms.jacobian.cols() == 2);

    raw.pop_back();
    CHECK_THROWS_AS(stack_target_measurements(belief.robot_means(), belief.target_means(), raw, nm),
                    ShapeError);
}

TEST_CASE("scalar kalman update matches hand algebra") {
    Eigen::VectorXd x(1), residual(1);
    Eigen::MatrixXd p(1, 1), h(1, 1), r(1, 1);
    x << 0.0;
    p << 2.0;
    h << 1.0;
    r << 2.0;
    residual << 1.0;
    const auto res = kalman_joseph_update(x, p, h, r, residual);
    CHECK(std::abs(res.cov(0, 0) - 1.0) < 1e-12);   // S=4, K=0.5, Joseph gives 1
    CHECK(std::abs(res.mean(0) - 0.5) < 1e-12);
}

TEST_CASE("near-uninformative measurements leave the prior untouched") {
    const NoiseModel nm = default_nm();
    std::mt19937_64 rng(5);
    const JointBelief belief = random_belief(rng, 2, 2);
    auto ms = stack_target_measurements(belief.robot_means(), belief.target_means(),
                                        target_measurements(belief, nm), nm);
    ms.noise = 1e9 * Eigen::MatrixXd::Identity(ms.noise.rows(), ms.noise.cols());
    const auto posterior = ekf_update_targets(belief, ms);
    for (int j = 0; j < belief.n_targets(); ++j) {
        CHECK(posterior.targets[j].cov.isApprox(belief.targets[j].cov, 1e-5));
    }
}

TEST_CASE("zero residual keeps the prior mean") {
    const NoiseModel nm = default_nm();
    std::mt19937_64 rng(6);
    const JointBelief belief = random_belief(rng, 2, 2);
    const auto ms = stack_target_measurements(belief.robot_means(), belief.target_means(),
                                              target_measurements(belief, nm), nm);
    REQUIRE(ms.residual.norm() < 1e-10);
    const auto posterior = ekf_update_targets(belief, ms);
    for (int j = 0; j < belief.n_targets(); ++j) {
        CHECK(posterior.targets[j].mean.isApprox(belief.targets[j].mean, 1e-9));
    }
}

TEST_CASE("robot stack: GPS-only single robot") {
    const NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(2, -1), Mat2::Identity()});
    belief.targets.push_back({Vec2(5, 5), Mat2::Identity()});

    const auto ms = stack_robot_measurements(belief.robot_means(), robot_measurements(belief, nm),
                                             nm);
    CHECK(ms.jacobian.rows() == 2);
    CHECK(ms.jacobian.isApprox(Mat2::Identity(), 1e-14));

    // P=I, R=I -> posterior 0.5 I per axis
    StackedMeasurementSet unit = ms;
    unit.noise = Eigen::MatrixXd::Identity(2, 2);
    const auto posterior = ekf_update_robots(belief, unit);
    CHECK(posterior.robots[0].cov.isApprox(0.5 * Mat2::Identity(), 1e-12));
}

TEST_CASE("robot stack: shapes and pair-block antisymmetry") {
    const NoiseModel nm = default_nm();
    std::mt19937_64 rng(8);
    const JointBelief belief = random_belief(rng, 2, 1);
    const auto ms = stack_robot_measurements(belief.robot_means(), robot_measurements(belief, nm),
                                             nm);
    CHECK(ms.jacobian.rows() == 8);  // 2 GPS + 2 ordered pairs
    CHECK(ms.jacobian.cols() == 4);
    // pair row (0 observes 1) sits after robot 0's GPS slot
    const Eigen::Matrix2d observer_block = ms.jacobian.block<2, 2>(2, 0);
    const Eigen::Matrix2d observed_block = ms.jacobian.block<2, 2>(2, 2);
    CHECK(observer_block.isApprox(-observed_block, 1e-12));
}

TEST_CASE("information flows to a poorly observed robot through relative measurements") {
    NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(0, 0), Mat2::Identity()});
    belief.robots.push_back({Vec2(4, 1), 4.0 * Mat2::Identity()});
    belief.targets.push_back({Vec2(2, 6), Mat2::Identity()});

    nm.sigma_gps = 1e-3;  // robot 0 nearly pinned
    auto raw = robot_measurements(belief, nm);
    // robot 1 gets a poor GPS fix instead
    for (auto& z : raw) {
        if (z.kind == MeasurementKind::gps && z.observer == 1) {
            z.noise_cov = 100.0 * Mat2::Identity();
        }
    }
    auto ms = stack_robot_measurements(belief.robot_means(), raw, nm);
    // keep the stack's R consistent with the poor fix
    ms.noise.block<2, 2>(6, 6) = 100.0 * Mat2::Identity();
    const auto posterior = ekf_update_robots(belief, ms);
    CHECK(posterior.robots[1].cov.trace() < belief.robots[1].cov.trace());
}

TEST_CASE("joseph updates stay symmetric PSD with monotone trace") {
    const NoiseModel nm = default_nm();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(1, 3);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const JointBelief belief = random_belief(rng, size(rng), size(rng));
        auto ms = stack_target_measurements(belief.robot_means(), belief.target_means(),
                                            target_measurements(belief, nm, 0.1 * unit(rng),
                                                                0.05 * unit(rng)),
                                            nm);
        const auto posterior = ekf_update_targets(belief, ms);
        double prior_trace = 0.0, post_trace = 0.0;
        for (int j = 0; j < belief.n_targets(); ++j) {
            const Mat2& p = posterior.targets[j].cov;
            CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK(min_eigenvalue(p) >= -1e-10);
            prior_trace += belief.targets[j].cov.trace();
            post_trace += p.trace();
        }
        CHECK(post_trace <= prior_trace + 1e-9);

        const auto rs = stack_robot_measurements(belief.robot_means(),
                                                 robot_measurements(belief, nm, 0.05 * unit(rng)),
                                                 nm);
        const auto rposterior = ekf_update_robots(belief, rs);
        prior_trace = post_trace = 0.0;
        for (int i = 0; i < belief.n_robots(); ++i) {
            const Mat2& p = rposterior.robots[i].cov;
            CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK(min_eigenvalue(p) >= -1e-10);
            prior_trace += belief.robots[i].cov.trace();
            post_trace += p.trace();
        }
        CHECK(post_trace <= prior_trace + 1e-9);
    }
}

TEST_CASE("stacked single-pair update equals a hand-assembled 2x2 update") {
    const NoiseModel nm = default_nm();
    JointBelief belief;
    belief.robots.push_back({Vec2(1, 2), Mat2::Identity()});
    Mat2 pt;
    pt << 3.0, 0.4, 0.4, 2.0;
    belief.targets.push_back({Vec2(6, -1), pt});

    const auto raw = target_measurements(belief, nm, 0.07, -0.02);
    const auto ms = stack_target_measurements(belief.robot_means(), belief.target_means(), raw, nm);
    const auto posterior = ekf_update_targets(belief, ms);

    // direct 2x2 assembly
    const auto jac = range_bearing_jacobians(belief.robots[0].mean, belief.targets[0].mean);
    const Mat2 h = jac.d_observed;
    const Mat2 r = measurement_noise_cov(MeasurementKind::range_bearing, belief.robots[0].mean,
                                         belief.targets[0].mean, nm);
    const Mat2 s = h * pt * h.transpose() + r;
    const Mat2 k = pt * h.transpose() * s.inverse();
    const Mat2 ikh = Mat2::Identity() - k * h;
    const Mat2 expected = ikh * pt * ikh.transpose() + k * r * k.transpose();
    const Vec2 expected_mean =
        belief.targets[0].mean + k * Eigen::Vector2d(ms.residual(0), ms.residual(1));

    CHECK((posterior.targets[0].cov - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((posterior.targets[0].mean - expected_mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("oracle is pure and prefers informative geometry") {
    NoiseModel nm = default_nm();
    nm.range_noise_scale = 0.0;
    JointBelief belief;
    belief.robots.push_back({Vec2(0, 0), Mat2::Identity()});
    belief.targets.push_back({Vec2(10, 0), 4.0 * Mat2::Identity()});

    const auto a = oracle_posterior_traces({Vec2(8, 0)}, belief, nm);   // distance 2
    const auto b = oracle_posterior_traces({Vec2(2, 0)}, belief, nm);   // distance 8
    CHECK(a.second < b.second);  // closer hypothesis tracks better

    const auto again = oracle_posterior_traces({Vec2(8, 0)}, belief, nm);
    CHECK(a.first == again.first);
    CHECK(a.second == again.second);
}

TEST_CASE("oracle approaches the prior trace as noise grows") {
    NoiseModel nm;
    nm.q_robot = 0.0;
    nm.q_target = 0.0;
    nm.sigma_range = 1e6;
    nm.sigma_bearing = 1e6;
    nm.sigma_gps = 1e6;

    std::mt19937_64 rng(13);
    const JointBelief belief = random_belief(rng, 2, 2);
    const auto traces = oracle_posterior_traces(belief.robot_means(), belief, nm);
    const double prior = belief.trace_robots() + belief.trace_targets();
    CHECK(traces.first + traces.second == Approx(prior).epsilon(1e-4));
}

TEST_CASE("oracle agrees with the full update pipeline") {
    const NoiseModel nm = default_nm();
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const JointBelief belief = random_belief(rng, 3, 2);
        std::vector<Vec2> controls;
        std::normal_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < belief.n_robots(); ++i) controls.emplace_back(unit(rng), unit(rng));

        const JointBelief predicted = predict_robots(predict_targets(belief, nm), controls, nm);
        const auto tstack = stack_target_measurements(predicted.robot_means(),
                                                      predicted.target_means(),
                                                      target_measurements(predicted, nm, 0.1, 0.0),
                                                      nm);
        const JointBelief after_targets = ekf_update_targets(predicted, tstack);
        const auto rstack = stack_robot_measurements(predicted.robot_means(),
                                                     robot_measurements(predicted, nm, 0.1), nm);
        const JointBelief after_robots = ekf_update_robots(after_targets, rstack);

        const auto oracle = oracle_posterior_traces(predicted.robot_means(), belief, nm);
        CHECK(oracle.first == Approx(after_robots.trace_robots()).epsilon(1e-8));
        CHECK(oracle.second == Approx(after_robots.trace_targets()).epsilon(1e-8));
    }
}
