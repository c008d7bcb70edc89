#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flexbeam/harness.hpp"

using namespace flexbeam;

namespace {

PhysicalParams link1_params() {
    return load_params(std::string(FLEXBEAM_DATA_DIR) + "/quanser_link1.json");
}

Scenario small_scenario() {
    Scenario s;
    s.links = {link1_params()};
    s.link_paths = {"quanser_link1.json"};
    s.grid_n = 48;
    s.time_scale = 18.0;
    s.horizon_s = 6.0 / 18.0;
    s.controller.type = ControllerType::BacksteppingSF;
    s.initial.xi_amp = 0.3;
    s.initial.eta_amp = 0.2;
    return s;
}

}  // namespace

TEST_CASE("metrics definitions") {
    const std::vector<double> zero2{0.0, 0.0};
    CHECK(metrics(zero2, zero2).rmse == 0.0);
    const std::vector<double> c2{2.0, 2.0, 2.0};
    const std::vector<double> z3{0.0, 0.0, 0.0};
    const Metrics m = metrics(c2, z3);
    CHECK(m.rmse == 2.0);
    CHECK(m.mae == 2.0);
    CHECK(m.me == 2.0);
    const std::vector<double> e{3.0, -4.0};
    const Metrics m2 = metrics(e, zero2);
    CHECK(m2.rmse == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(m2.mae == 3.5);
    CHECK(m2.me == 4.0);
    CHECK_THROWS_AS(metrics(e, z3), std::invalid_argument);
}

TEST_CASE("decay_fit on synthetic data") {
    std::vector<double> t(200), v(200), c(200);
    for (int i = 0; i < 200; ++i) {
        t[i] = 0.05 * i;
        v[i] = 3.0 * std::exp(-2.0 * t[i]);
        c[i] = 0.7;
    }
    const DecayFit f = decay_fit(t, v, 0.5);
    CHECK(f.rate == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(f.r2 >= 0.999999);
    const DecayFit fc = decay_fit(t, c, 0.5);
    CHECK(std::abs(fc.rate) <= 1e-12);
    std::vector<double> bad = v;
    bad[150] = -1.0;
    CHECK_THROWS_AS(decay_fit(t, bad, 0.5), std::invalid_argument);
}

TEST_CASE("zero scenario produces identically zero series") {
    Scenario s = small_scenario();
    s.initial = InitialConditions{};
    const SimResult r = run_scenario(s);
    const LinkResult& L = r.links[0];
    for (double v : L.dtheta) CHECK(v == 0.0);
    for (double v : L.w_tip) CHECK(v == 0.0);
    for (double v : L.U) CHECK(v == 0.0);
    CHECK(L.omega0_initial == 0.0);
    CHECK(L.settling_time == 0.0);
}

TEST_CASE("lyapunov monitor values") {
    const DimensionlessParams dp = nondimensionalize(link1_params());
    KernelSolveOptions opt;
    opt.n = 32;
    const Eigen::RowVector2d K = place_state_gain(dp, {-2.0, 0.0}, {-2.5, 0.0});
    const ControlKernels ck = solve_control_kernels(dp, K, opt);
    const InverseKernels ik = solve_inverse_kernels(ck);
    const FeedbackGains fg = synthesize_feedback_gains(ck, ik, dp, 0.5);
    const LyapunovMonitor mon(dp, ck, ik, fg);

    SUBCASE("zero state gives zero") {
        RiemannState z = RiemannState::zero(32);
        std::vector<double> beta(33, 0.0);
        CHECK(mon.value(z, beta) == 0.0);
    }
    SUBCASE("P1 solves the closed-loop Lyapunov equation") {
        const StateMatrices sm = state_matrices(dp);
        const Eigen::Matrix2d Acl = sm.A + sm.B * fg.K;
        const Eigen::Matrix2d res = mon.P1() * Acl + Acl.transpose() * mon.P1() +
                                    Eigen::Matrix2d::Identity();
        CHECK(res.cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("unit eta with zero weight exponent integrates to sqrt(eps)/2") {
        // a_acute > 0 in the monitor, so check the value against the
        // directly computed weighted integral instead of the flat one
        RiemannState s = RiemannState::zero(32);
        for (double& v : s.eta) v = 1.0;
        std::vector<double> beta(33, 0.0);
        std::vector<double> w(33);
        for (int j = 0; j <= 32; ++j) {
            w[j] = std::exp(-mon.info().a_acute * (double(j) / 32));
        }
        const double expect = 0.5 * dp.sqrt_eps() * trapz(w, 1.0 / 32);
        CHECK(mon.value(s, beta) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("feasibility constants are populated") {
        CHECK(mon.info().L1_bar > 0.0);
        CHECK(mon.info().a_acute > 4.0 * mon.info().L1_bar);
        CHECK(mon.info().h_acute > 2.0);
        CHECK(mon.info().c_min == doctest::Approx(0.5 * std::exp(1.0) * mon.info().h_acute));
    }
}

TEST_CASE("state-feedback run decays with a monotone lyapunov tail") {
    Scenario s = small_scenario();
    s.horizon_s = 60.0 / 18.0;
    s.initial.X0 = {0.01, -0.02};
    const SimResult r = run_scenario(s);
    const LinkResult& L = r.links[0];
    CHECK(L.omega0_final < 1e-3 * L.omega0_initial);
    CHECK(L.beta_residual_sup < 1.0);
    // windowed maxima of V1 decrease after the transient
    const std::size_t m = L.lyapunov.size();
    REQUIRE(m > 40);
    double prev = -1.0;
    bool monotone = true;
    for (std::size_t w = m / 4; w + m / 8 <= m; w += m / 8) {
        double mx = 0.0;
        for (std::size_t i = w; i < w + m / 8; ++i) mx = std::max(mx, L.lyapunov[i]);
        if (prev >= 0.0 && mx > prev * (1.0 + 1e-6)) monotone = false;
        prev = mx;
    }
    CHECK(monotone);
}

TEST_CASE("determinism: identical scenarios give identical exports") {
    Scenario s = small_scenario();
    s.snapshot_times = {2.0};
    namespace fs = std::filesystem;
    const std::string d1 = "/tmp/flexbeam_det1", d2 = "/tmp/flexbeam_det2";
    export_result(run_scenario(s), s, d1);
    export_result(run_scenario(s), s, d2);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        std::ifstream f1(entry.path(), std::ios::binary);
        std::ifstream f2(fs::path(d2) / entry.path().filename(), std::ios::binary);
        std::stringstream a, b;
        a << f1.rdbuf();
        b << f2.rdbuf();
        CHECK(a.str() == b.str());
        CHECK_FALSE(a.str().empty());
        ++compared;
    }
    CHECK(compared >= 4);  // series, snapshot, summary, manifest
}

TEST_CASE("torque clamp bounds the recovered motor torque") {
    // clamp at a level that trims only the transient peak; a deep clamp
    // stalls the boundary cancellation entirely (no anti-windup here)
    Scenario s = small_scenario();
    s.horizon_s = 30.0 / 18.0;
    const SimResult free_run = run_scenario(s);
    double free_peak = 0.0;
    for (double tau : free_run.links[0].tau_m) free_peak = std::max(free_peak, std::abs(tau));
    s.tau_limit = 0.5 * free_peak;
    const SimResult r = run_scenario(s);
    double worst = 0.0;
    for (double tau : r.links[0].tau_m) worst = std::max(worst, std::abs(tau));
    CHECK(worst <= s.tau_limit * (1.0 + 1e-12));
    CHECK(worst >= 0.99 * s.tau_limit);  // the clamp actually engaged
    CHECK(r.links[0].omega0_final < 1e-3 * r.links[0].omega0_initial);
}

TEST_CASE("scenario JSON round trip and hash stability") {
    Scenario s = small_scenario();
    const std::string c1 = scenario_canonical_text(s);
    const std::string c2 = scenario_canonical_text(s);
    CHECK(c1 == c2);
    CHECK(fnv1a64(c1) == fnv1a64(c2));
    s.controller.c_acute = 0.7;
    CHECK(fnv1a64(scenario_canonical_text(s)) != fnv1a64(c1));
}

TEST_CASE("scenario parsing applies defaults and validates") {
    const std::string text = R"({
        "links": ["quanser_link1.json"],
        "grid_n": 32,
        "horizon_s": 0.5,
        "controller": {"type": "backstepping-of", "c_acute": 0.4},
        "reference": {"kind": "sinusoid", "amplitude": 0.3, "frequency_hz": 0.2}
    })";
    const Scenario s = scenario_from_json_text(text, FLEXBEAM_DATA_DIR);
    CHECK(s.grid_n == 32);
    CHECK(s.controller.type == ControllerType::BacksteppingOF);
    CHECK(s.reference.kind == ScenarioReferenceKind::Sinusoid);
    CHECK(s.time_scale == 18.0);
    CHECK_THROWS_AS(scenario_from_json_text("{\"links\": []}", ""), std::exception);
}

TEST_CASE("two-link polar scenario produces robot-level series") {
    // the second link's in-domain coupling needs the finer grid (the
    // boundary loop gain scales with h b^2)
    Scenario s;
    s.links = {link1_params(),
               load_params(std::string(FLEXBEAM_DATA_DIR) + "/quanser_link2.json")};
    s.link_paths = {"l1", "l2"};
    s.grid_n = 192;
    s.time_scale = 60.0;
    s.horizon_s = 2.0;
    s.controller.type = ControllerType::BacksteppingOF;
    s.reference.kind = ScenarioReferenceKind::PolarSinusoid;
    s.observer_init = 0.0;
    const SimResult r = run_scenario(s);
    REQUIRE(r.robot.has_value());
    CHECK(r.links.size() == 2);
    CHECK(r.robot->r_tip.size() == r.robot->t.size());
    bool finite = true;
    for (double v : r.robot->r_tip) {
        if (!std::isfinite(v) || v <= 0.0 || v > 1.0) finite = false;
    }
    CHECK(finite);
    for (const LinkResult& L : r.links) {
        for (double v : L.dtheta) CHECK(std::abs(v) < 1.0);
    }
    CHECK(r.robot->r_m.rmse <= 0.05);
    for (double v : r.robot->fk_residual) CHECK(v >= 0.0);
    // matched observer start: the estimate error stays at rounding level
    CHECK(r.links[0].omega_e_final <= 1e-10);
    CHECK(r.links[1].omega_e_final <= 1e-10);
}
