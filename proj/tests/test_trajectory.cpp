#include <doctest.h>

#include <cmath>
#include <complex>

#include "flexbeam/trajectory.hpp"

using namespace flexbeam;

TEST_CASE("zero-amplitude profile returns zeros for all time") {
    ReferenceProfile p;
    p.kind = ReferenceKind::Sinusoid;
    p.amplitude = 0.0;
    p.frequency_hz = 0.2;
    const ReferenceSample s = theta_ref(p, 5.0);
    CHECK(s.theta_d == 0.0);
    CHECK(s.theta_dot_d == 0.0);
    CHECK(s.theta_ddot_d == 0.0);
}

TEST_CASE("smoothed sinusoid tracks the raw wave within the filter lag bound") {
    ReferenceProfile p;
    p.kind = ReferenceKind::Sinusoid;
    p.amplitude = 40.0 * M_PI / 180.0;
    p.frequency_hz = 0.2;
    p.wn_factor = 20.0;
    p.zeta = 0.9;
    p.time_scale = 18.0;
    ReferenceGenerator gen(p);
    gen.warm_up();
    // analytic second-order response at w/wn = 1/20
    const double ratio = 1.0 / p.wn_factor;
    const double amp_err = std::abs(
        1.0 / std::sqrt(std::pow(1.0 - ratio * ratio, 2) +
                        std::pow(2.0 * p.zeta * ratio, 2)) -
        1.0);
    const double phase = std::atan2(2.0 * p.zeta * ratio, 1.0 - ratio * ratio);
    const double bound = p.amplitude * (amp_err + phase) * 1.1;
    double worst = 0.0;
    const double dt = 1e-3;
    for (double t = 0.0; t < 10.0; t += dt) {
        gen.advance_seconds(dt);
        const ReferenceSample s = gen.sample_seconds();
        const double ideal =
            p.amplitude * std::sin(2.0 * M_PI * p.frequency_hz * gen.t_seconds());
        worst = std::max(worst, std::abs(s.theta_d - ideal));
    }
    CHECK(worst <= bound);
}

TEST_CASE("smoothed square wave has the analytic peak acceleration") {
    ReferenceProfile p;
    p.kind = ReferenceKind::Square;
    p.amplitude = 35.0 * M_PI / 180.0;
    p.frequency_hz = 0.1;
    p.wn_factor = 20.0;
    p.zeta = 0.9;
    ReferenceGenerator gen(p);
    gen.warm_up();
    const double wn = p.wn_factor * 2.0 * M_PI * p.frequency_hz;
    double peak = 0.0;
    const double dt = 1e-4;
    for (double t = 0.0; t < 20.0; t += dt) {
        gen.advance_seconds(dt);
        peak = std::max(peak, std::abs(gen.sample_seconds().theta_ddot_d));
    }
    // a step of size 2A through the filter peaks at wn^2 * 2A immediately
    const double expect = wn * wn * 2.0 * p.amplitude;
    CHECK(peak == doctest::Approx(expect).epsilon(0.02));
    CHECK(std::isfinite(peak));
}

TEST_CASE("returned rate is the derivative of the returned angle") {
    ReferenceProfile p;
    p.kind = ReferenceKind::Sawtooth;
    p.amplitude = 0.5;
    p.frequency_hz = 0.2;
    ReferenceGenerator gen(p);
    gen.warm_up();
    const double dt = 1e-4;
    double prev_theta = gen.sample_seconds().theta_d;
    double prev_rate = gen.sample_seconds().theta_dot_d;
    for (int k = 1; k < 20000; ++k) {
        gen.advance_seconds(dt);
        const ReferenceSample s = gen.sample_seconds();
        const double mid_rate_fd = (s.theta_d - prev_theta) / dt;
        const double mid_rate = 0.5 * (s.theta_dot_d + prev_rate);
        CHECK(std::abs(mid_rate_fd - mid_rate) <= 1e-5 * std::max(1.0, std::abs(mid_rate)));
        prev_theta = s.theta_d;
        prev_rate = s.theta_dot_d;
    }
}

TEST_CASE("dimensionless conversion scales the rates") {
    ReferenceProfile p;
    p.kind = ReferenceKind::Sinusoid;
    p.amplitude = 1.0;
    p.frequency_hz = 0.2;
    p.time_scale = 18.0;
    ReferenceGenerator gen(p);
    gen.warm_up();
    gen.advance_seconds(1.234);
    const ReferenceSample ss = gen.sample_seconds();
    const ReferenceSample sd = gen.sample_dimensionless();
    CHECK(sd.theta_d == ss.theta_d);
    CHECK(sd.theta_dot_d == doctest::Approx(ss.theta_dot_d / 18.0));
    CHECK(sd.theta_ddot_d == doctest::Approx(ss.theta_ddot_d / 324.0));
}

TEST_CASE("polar profiles stay inside the reachable annulus") {
    for (PolarKind kind : {PolarKind::Sinusoid, PolarKind::Square, PolarKind::Sawtooth}) {
        PolarProfile pp;
        pp.kind = kind;
        const double lo = pp.r1() - pp.r2();
        const double hi = pp.r1() + pp.r2();
        CHECK(hi == doctest::Approx(pp.L1_star + pp.L2_star).epsilon(1e-14));
        for (int i = 0; i <= 500; ++i) {
            double r, phi;
            pp.eval(12.0 * i / 500.0, r, phi);
            CHECK(r >= lo - 1e-12);
            CHECK(r <= hi + 1e-12);
            CHECK(std::abs(phi) <= 35.0 * M_PI / 180.0 + 1e-12);
        }
    }
}

TEST_CASE("inverse kinematics unit cases") {
    const double L1 = 0.195, L2 = 0.195;
    SUBCASE("r^2 = L1^2 + L2^2 gives theta2 = 0 and theta1 = phi") {
        const double r = std::sqrt(L1 * L1 + L2 * L2);
        const JointAngles ja = inverse_kinematics(r, 0.7, L1, L2, IkVariant::Arctan);
        CHECK(ja.theta2 == 0.0);
        CHECK(ja.theta1 == 0.7);
    }
    SUBCASE("the published arctan form does not close at full extension") {
        const double r = L1 + L2;
        const JointAngles ja = inverse_kinematics(r, 0.0, L1, L2, IkVariant::Arctan);
        CHECK(ja.theta2 == doctest::Approx(M_PI / 4.0));  // arctan(1)
        CHECK(ik_radius_residual(r, 0.0, L1, L2, IkVariant::Arctan) > 1e-3);
        CHECK(ik_radius_residual(r, 0.0, L1, L2, IkVariant::Arccos) <= 1e-12);
    }
    SUBCASE("out-of-reach radii are rejected") {
        CHECK_THROWS_AS(inverse_kinematics(0.5, 0.0, L1, L2), std::invalid_argument);
    }
}

TEST_CASE("forward kinematics matches a complex-arithmetic oracle") {
    const double L1 = 0.195, L2 = 0.17;
    SUBCASE("straight and folded configurations") {
        const PolarPoint straight = forward_kinematics(0.0, 0.0, L1, L2);
        CHECK(straight.r == doctest::Approx(L1 + L2).epsilon(1e-15));
        CHECK(straight.phi == doctest::Approx(0.0));
        const PolarPoint folded = forward_kinematics(0.3, M_PI, L1, L2);
        CHECK(folded.r == doctest::Approx(std::abs(L1 - L2)).epsilon(1e-12));
    }
    SUBCASE("random configurations with deflections") {
        std::uint32_t rng = 12345;
        auto next = [&]() {
            rng ^= rng << 13;
            rng ^= rng >> 17;
            rng ^= rng << 5;
            return rng * (1.0 / 4294967296.0) * 2.0 * M_PI - M_PI;
        };
        for (int i = 0; i < 200; ++i) {
            const double t1 = next(), t2 = next();
            const double v1 = 0.02 * next() / M_PI, v2 = 0.02 * next() / M_PI;
            const PolarPoint got = forward_kinematics(t1, t2, L1, L2, v1, v2);
            const std::complex<double> z =
                std::complex<double>(L1, v1) * std::polar(1.0, t1) +
                std::complex<double>(L2, v2) * std::polar(1.0, t1 + t2);
            CHECK(std::abs(got.r - std::abs(z)) <= 1e-12);
            CHECK(std::abs(std::remainder(got.phi - std::arg(z), 2.0 * M_PI)) <= 1e-12);
        }
    }
}

TEST_CASE("two-link generator smooths the polar joints and reports residuals") {
    PolarProfile pp;
    pp.kind = PolarKind::Square;
    TwoLinkReferenceGenerator gen(pp, 2.0 * M_PI * 2.0, 0.9, 18.0);
    gen.warm_up(10.0);
    double max_res = 0.0;
    double max_acc = 0.0;
    for (int k = 0; k < 4000; ++k) {
        gen.advance_dimensionless(18.0 * 0.005);
        max_res = std::max(max_res, gen.fk_residual());
        max_acc = std::max(max_acc, std::abs(gen.joint1().theta_ddot_d));
    }
    CHECK(max_res > 1e-4);       // arctan-form residual is genuinely nonzero
    CHECK(std::isfinite(max_acc));
    CHECK(max_acc > 0.0);
    // the smoothed joints remain bounded per the reach of the waveforms
    CHECK(std::abs(gen.joint1().theta_d) <= M_PI);
    CHECK(std::abs(gen.joint2().theta_d) <= M_PI);
}
