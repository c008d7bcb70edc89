#include <doctest.h>

#include <cmath>

#include "flexbeam/observer.hpp"
#include "flexbeam/params.hpp"
#include "flexbeam/plant.hpp"

using namespace flexbeam;

namespace {

DimensionlessParams link1() {
    return nondimensionalize(
        load_params(std::string(FLEXBEAM_DATA_DIR) + "/quanser_link1.json"));
}

DimensionlessParams zero_coupling(DimensionlessParams d) {
    d.A = 0.0;
    d.a = 0.0;
    d.b = 0.0;
    return d;
}

struct ObserverTestRig {
    DimensionlessParams dp;
    int n;
    RiemannSimulator plant;
    ObserverSimulator obs;
    ObserverGains og;
    SensorRig sensors;

    ObserverTestRig(const DimensionlessParams& d, int n_)
        : dp(d),
          n(n_),
          plant(d, n_),
          obs(d, n_),
          og(),
          sensors(d, SensorOptions{}, d.sqrt_eps() / n_, 0.07) {
        KernelSolveOptions opt;
        opt.n = n_;
        const ObserverKernels ok = solve_observer_kernels(d, opt);
        og = compute_observer_gains(ok, d, {-6.0, 0.0}, {-7.5, 0.0});
    }
};

}  // namespace

TEST_CASE("observer initialized on the plant stays on the plant") {
    const DimensionlessParams dp = link1();
    const int n = 48;
    ObserverTestRig rig(dp, n);
    std::vector<double> xi0(n + 1), eta0(n + 1);
    for (int j = 0; j <= n; ++j) {
        xi0[j] = 0.3 * std::sin(M_PI * j / double(n));
        eta0[j] = 0.1 * std::cos(2.0 * M_PI * j / double(n));
    }
    RiemannState s = make_admissible_state(dp, xi0, eta0, {0.04, 0.01});
    ObserverState os;
    os.xi_hat = s.xi;
    os.eta_hat = s.eta;
    os.X_hat = s.X;
    Measurements m_prev = rig.sensors.measure(s, 0.0, 0.0);
    for (int k = 0; k < 300; ++k) {
        rig.plant.step(s, 0.1, 0.0, 0.0);
        const Measurements m_now = rig.sensors.measure(s, 0.0, 0.0);
        rig.obs.step(os, m_prev, m_now, rig.og, 0.0, 0.0);
        m_prev = m_now;
    }
    const ObserverErrorNorm e = observer_error_norm(os, s);
    CHECK(e.total <= 1e-12);  // rounding-level growth only
}

TEST_CASE("zero-coupling error flushes within two crossing times") {
    const DimensionlessParams dp = zero_coupling(link1());
    const int n = 64;
    ObserverTestRig rig(dp, n);
    RiemannState s = RiemannState::zero(n);  // plant at rest
    ObserverState os = ObserverState::constant_init(n, 1.0);
    os.X_hat = s.X;  // matched tip estimate
    Measurements m_prev = rig.sensors.measure(s, 0.0, 0.0);
    const double T = 2.0 * dp.sqrt_eps();
    const long long steps = llround(T / rig.plant.dt()) + 2;
    for (long long k = 0; k < steps; ++k) {
        rig.plant.step(s, 0.0, 0.0, 0.0);
        const Measurements m_now = rig.sensors.measure(s, 0.0, 0.0);
        rig.obs.step(os, m_prev, m_now, rig.og, 0.0, 0.0);
        m_prev = m_now;
    }
    const ObserverErrorNorm e = observer_error_norm(os, s);
    CHECK(e.total <= 1e-24);
}

TEST_CASE("stress initialization decays by many orders of magnitude") {
    const DimensionlessParams dp = link1();
    const int n = 96;
    ObserverTestRig rig(dp, n);
    std::vector<double> xi0(n + 1, 0.0), eta0(n + 1, 0.0);
    for (int j = 0; j <= n; ++j) xi0[j] = 0.2 * std::sin(M_PI * j / double(n));
    RiemannState s = make_admissible_state(dp, xi0, eta0, {0.0, 0.0});
    ObserverState os = ObserverState::constant_init(n, 1.0);
    os.X_hat = s.X;
    const double e0 = observer_error_norm(os, s).total;
    Measurements m_prev = rig.sensors.measure(s, 0.0, 0.0);
    const long long steps = llround(20.0 / rig.plant.dt());
    for (long long k = 0; k < steps; ++k) {
        rig.plant.step(s, 0.0, 0.0, 0.0);
        const Measurements m_now = rig.sensors.measure(s, 0.0, 0.0);
        rig.obs.step(os, m_prev, m_now, rig.og, 0.0, 0.0);
        m_prev = m_now;
    }
    const double eT = observer_error_norm(os, s).total;
    CHECK(eT / e0 <= 1e-6);
}

TEST_CASE("observer error norm components") {
    const int n = 32;
    RiemannState s = RiemannState::zero(n);
    ObserverState os = ObserverState::constant_init(n, 0.0);
    CHECK(observer_error_norm(os, s).total == 0.0);
    os = ObserverState::constant_init(n, 1.0);
    for (int j = 0; j <= n; ++j) os.eta_hat[j] = 0.0;
    const ObserverErrorNorm e = observer_error_norm(os, s);
    CHECK(e.total == doctest::Approx(1.0).epsilon(1e-12));  // constant, no slope part
    CHECK(e.xi_h1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.eta_h1 == 0.0);
    CHECK(e.X_sq == 0.0);
}

TEST_CASE("filtered differentiator tracks slow sinusoid rates within 2 percent") {
    const double wn = 200.0, zeta = 0.9, dt = 1e-4;
    const double w = wn / 200.0;  // well below the cutoff
    FilteredDifferentiator f(wn, zeta, dt);
    f.prime(0.0, 0);
    double worst = 0.0;
    const double T = 3.0 * 2.0 * M_PI / w;
    const long long steps = llround(T / dt);
    for (long long k = 0; k < steps; ++k) {
        const double t = k * dt;
        const double y = f.update(std::sin(w * t));
        if (t > 0.5 * T) {
            worst = std::max(worst, std::abs(y - w * std::cos(w * t)));
        }
    }
    CHECK(worst <= 0.02 * w);
}

TEST_CASE("filtered differentiator settles to zero on constants") {
    FilteredDifferentiator f(50.0, 0.9, 1e-3);
    f.prime(3.7, 0);
    for (int k = 0; k < 2000; ++k) {
        CHECK(std::abs(f.update(3.7)) <= 1e-12);
    }
}

TEST_CASE("strain emulation round-trips the tip deflection") {
    const DimensionlessParams dp = link1();
    SensorOptions so;
    so.emulate_strain = true;
    SensorRig rig(dp, so, 1e-3, 0.07);
    RiemannState s = RiemannState::zero(16);
    s.X << 0.0, 0.12;
    s.dtheta = 0.05;
    const Measurements m = rig.measure(s, 0.0, 0.0);
    const double v0_true = 0.12 - (1.0 + dp.R) * 0.05;
    CHECK(m.E_b == doctest::Approx(1.5 * dp.Lw * v0_true).epsilon(1e-14));
    CHECK(m.v0 == doctest::Approx(v0_true).epsilon(1e-13));
    CHECK(m.v0_x == doctest::Approx(2.0 * v0_true).epsilon(1e-13));
}

TEST_CASE("direct measurements assemble the boundary values exactly") {
    const DimensionlessParams dp = link1();
    SensorRig rig(dp, SensorOptions{}, 1e-3, 0.07);
    const int n = 24;
    std::vector<double> xi0(n + 1), eta0(n + 1);
    for (int j = 0; j <= n; ++j) {
        xi0[j] = 0.3 + 0.1 * j / double(n);
        eta0[j] = -0.2;
    }
    const RiemannState s = make_admissible_state(dp, xi0, eta0, {0.07, 0.02});
    const Measurements m = rig.measure(s, 0.4, 0.1);
    CHECK(m.xi0 == s.xi[0]);
    CHECK(m.CX == doctest::Approx(2.0 * dp.sqrt_eps() * s.X(0)).epsilon(1e-14));
    CHECK(m.dtheta_dot == s.dtheta_dot);
    CHECK(m.theta == doctest::Approx(s.dtheta + 0.4).epsilon(1e-14));
}

TEST_CASE("error transform produces the cascade structure") {
    const DimensionlessParams dp = link1();
    const int n = 64;
    KernelSolveOptions opt;
    opt.n = n;
    const ObserverKernels ok = solve_observer_kernels(dp, opt);

    SUBCASE("transform inverts the direct map") {
        // build xi_err from a known beta via the direct transform, then solve back
        std::vector<double> beta(n + 1), xi_err(n + 1, 0.0), eta_err(n + 1, 0.0);
        for (int j = 0; j <= n; ++j) beta[j] = std::sin(2.5 * j / double(n)) + 0.2;
        const double h = 1.0 / n;
        std::vector<double> row(n + 1);
        for (int i = 0; i <= n; ++i) {
            for (int m = 0; m <= i; ++m) row[m] = ok.psi.at(i, m) * beta[m];
            xi_err[i] = beta[i] + trapz_range(row, 0, i, h);
        }
        std::vector<double> alpha_out, beta_out;
        error_target_transform(xi_err, eta_err, ok, alpha_out, beta_out);
        for (int j = 0; j <= n; j += 8) {
            CHECK(beta_out[j] == doctest::Approx(beta[j]).epsilon(1e-10));
        }
    }

    SUBCASE("alpha equation residual shrinks under refinement") {
        // run the observer against a resting plant from a smooth compatible
        // error field, convert to cascade coordinates, and difference
        // sqrt(eps) alpha_t = -alpha_x - int S11 alpha
        std::vector<double> resid;
        for (int nn : {32, 64}) {
            KernelSolveOptions o2;
            o2.n = nn;
            const ObserverKernels okn = solve_observer_kernels(dp, o2);
            const ObserverGains og = compute_observer_gains(okn, dp, {-6.0, 0.0},
                                                            {-7.5, 0.0});
            const TriangleGrid S21 = compute_S21(okn);
            const TriangleGrid S11 = compute_S11(okn, S21);
            RiemannSimulator plant(dp, nn);
            ObserverSimulator obsim(dp, nn);
            SensorRig rig(dp, SensorOptions{}, plant.dt(), 0.07);
            RiemannState s = RiemannState::zero(nn);
            ObserverState os;
            os.xi_hat.resize(nn + 1);
            os.eta_hat.resize(nn + 1);
            for (int j = 0; j <= nn; ++j) {
                // vanishes at both ends: compatible with the error BCs
                os.xi_hat[j] = 0.4 * std::sin(M_PI * j / double(nn));
                os.eta_hat[j] = 0.2 * std::sin(M_PI * j / double(nn));
            }
            os.X_hat = s.X;
            Measurements m_prev = rig.measure(s, 0.0, 0.0);
            auto alpha_of = [&](const ObserverState& o) {
                std::vector<double> xe(nn + 1), ee(nn + 1), a, b;
                for (int j = 0; j <= nn; ++j) {
                    xe[j] = o.xi_hat[j] - s.xi[j];
                    ee[j] = o.eta_hat[j] - s.eta[j];
                }
                error_target_transform(xe, ee, okn, a, b);
                return a;
            };
            double worst = 0.0;
            const double h = 1.0 / nn;
            const int kmax = nn / 4;  // fixed fraction of a crossing time
            for (int k = 0; k < kmax; ++k) {
                const std::vector<double> a_old = alpha_of(os);
                plant.step(s, 0.0, 0.0, 0.0);
                const Measurements m_now = rig.measure(s, 0.0, 0.0);
                obsim.step(os, m_prev, m_now, og, 0.0, 0.0);
                m_prev = m_now;
                const std::vector<double> a_new = alpha_of(os);
                std::vector<double> ax(nn + 1);
                fd_derivative(a_old, h, ax);
                // interior nodes to the right of the inflow layer, which
                // spreads from x = 0 one node per step
                for (int j = k + 3; j < nn - 1; ++j) {
                    std::vector<double> row(j + 1);
                    for (int m = 0; m <= j; ++m) row[m] = S11.at(j, m) * a_old[m];
                    const double rhs = -ax[j] - trapz_range(row, 0, j, h);
                    const double lhs =
                        dp.sqrt_eps() * (a_new[j] - a_old[j]) / plant.dt();
                    worst = std::max(worst, std::abs(lhs - rhs));
                }
            }
            resid.push_back(worst);
        }
        CHECK(resid[1] <= 0.75 * resid[0]);
    }
}

TEST_CASE("single-step observer contract") {
    const DimensionlessParams dp = link1();
    const int n = 24;
    KernelSolveOptions opt;
    opt.n = n;
    const ObserverKernels ok = solve_observer_kernels(dp, opt);
    const ObserverGains og = compute_observer_gains(ok, dp, {-6.0, 0.0}, {-7.5, 0.0});
    ObserverState os = ObserverState::constant_init(n, 0.1);
    Measurements m;  // resting plant
    SUBCASE("matches the stateful simulator step for step") {
        ObserverSimulator sim(dp, n);
        ObserverState a = os, b = os;
        sim.step(a, m, m, og, 0.0, 0.0);
        b = step_observer(b, m, m, og, dp, 0.0, dp.sqrt_eps() / n);
        for (int j = 0; j <= n; ++j) {
            CHECK(a.xi_hat[j] == b.xi_hat[j]);
            CHECK(a.eta_hat[j] == b.eta_hat[j]);
        }
        CHECK(a.X_hat == b.X_hat);
    }
    SUBCASE("the CFL-exact dt contract is enforced") {
        CHECK_THROWS_AS(step_observer(os, m, m, og, dp, 0.0, 2.0 * dp.sqrt_eps() / n),
                        std::invalid_argument);
    }
    SUBCASE("gains on a different grid are rejected") {
        ObserverState big = ObserverState::constant_init(2 * n, 0.1);
        CHECK_THROWS_AS(step_observer(big, m, m, og, dp, 0.0, dp.sqrt_eps() / (2 * n)),
                        std::invalid_argument);
    }
}

TEST_CASE("gaussian measurement noise is reproducible and optional") {
    const DimensionlessParams dp = link1();
    SensorOptions so;
    so.noise_theta = 0.01;
    so.seed = 7;
    SensorRig a(dp, so, 1e-3, 0.07);
    SensorRig b(dp, so, 1e-3, 0.07);
    RiemannState s = RiemannState::zero(8);
    const Measurements ma = a.measure(s, 0.0, 0.0);
    const Measurements mb = b.measure(s, 0.0, 0.0);
    CHECK(ma.theta == mb.theta);
    CHECK(ma.theta != 0.0);
}
