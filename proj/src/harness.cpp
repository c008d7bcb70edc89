#include "flexbeam/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace flexbeam {

namespace {

using json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ControllerType controller_type_from_string(const std::string& s) {
    if (s == "backstepping-sf") return ControllerType::BacksteppingSF;
    if (s == "backstepping-of") return ControllerType::BacksteppingOF;
    if (s == "lqr-ff") return ControllerType::LqrFF;
    if (s == "none") return ControllerType::None;
    throw std::invalid_argument("unknown controller type: " + s);
}

std::string controller_type_to_string(ControllerType t) {
    switch (t) {
        case ControllerType::BacksteppingSF: return "backstepping-sf";
        case ControllerType::BacksteppingOF: return "backstepping-of";
        case ControllerType::LqrFF: return "lqr-ff";
        case ControllerType::None: return "none";
    }
    return "none";
}

ScenarioReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "zero") return ScenarioReferenceKind::Zero;
    if (s == "sinusoid") return ScenarioReferenceKind::Sinusoid;
    if (s == "square") return ScenarioReferenceKind::Square;
    if (s == "sawtooth") return ScenarioReferenceKind::Sawtooth;
    if (s == "polar-sinusoid") return ScenarioReferenceKind::PolarSinusoid;
    if (s == "polar-square") return ScenarioReferenceKind::PolarSquare;
    if (s == "polar-sawtooth") return ScenarioReferenceKind::PolarSawtooth;
    throw std::invalid_argument("unknown reference kind: " + s);
}

std::string reference_kind_to_string(ScenarioReferenceKind k) {
    switch (k) {
        case ScenarioReferenceKind::Zero: return "zero";
        case ScenarioReferenceKind::Sinusoid: return "sinusoid";
        case ScenarioReferenceKind::Square: return "square";
        case ScenarioReferenceKind::Sawtooth: return "sawtooth";
        case ScenarioReferenceKind::PolarSinusoid: return "polar-sinusoid";
        case ScenarioReferenceKind::PolarSquare: return "polar-square";
        case ScenarioReferenceKind::PolarSawtooth: return "polar-sawtooth";
    }
    return "zero";
}

bool is_polar(ScenarioReferenceKind k) {
    return k == ScenarioReferenceKind::PolarSinusoid ||
           k == ScenarioReferenceKind::PolarSquare ||
           k == ScenarioReferenceKind::PolarSawtooth;
}

ReferenceKind to_profile_kind(ScenarioReferenceKind k) {
    switch (k) {
        case ScenarioReferenceKind::Sinusoid: return ReferenceKind::Sinusoid;
        case ScenarioReferenceKind::Square: return ReferenceKind::Square;
        case ScenarioReferenceKind::Sawtooth: return ReferenceKind::Sawtooth;
        default: return ReferenceKind::Zero;
    }
}

PolarKind to_polar_kind(ScenarioReferenceKind k) {
    switch (k) {
        case ScenarioReferenceKind::PolarSquare: return PolarKind::Square;
        case ScenarioReferenceKind::PolarSawtooth: return PolarKind::Sawtooth;
        default: return PolarKind::Sinusoid;
    }
}

}  // namespace

void Scenario::validate() const {
    if (links.empty()) throw std::invalid_argument("scenario: needs at least one link");
    if (grid_n < 8) throw std::invalid_argument("scenario: grid_n must be >= 8");
    if (!(horizon_s > 0.0)) throw std::invalid_argument("scenario: horizon must be > 0");
    if (!(time_scale > 0.0)) throw std::invalid_argument("scenario: time_scale must be > 0");
    if (is_polar(reference.kind) && links.size() != 2) {
        throw std::invalid_argument("scenario: polar references need exactly two links");
    }
    for (const auto& p : links) p.validate();
}

Scenario scenario_from_json_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario parse failure: ") + e.what());
    }
    Scenario s;
    for (const auto& lp : j.at("links")) {
        std::filesystem::path p = lp.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        s.link_paths.push_back(p.string());
        s.links.push_back(load_params(p.string()));
    }
    s.grid_n = j.value("grid_n", 256);
    s.horizon_s = j.value("horizon_s", 31.0);
    s.time_scale = j.value("time_scale", 18.0);
    if (j.contains("controller")) {
        const auto& c = j["controller"];
        s.controller.type = controller_type_from_string(c.value("type", "backstepping-of"));
        s.controller.c_acute = c.value("c_acute", 0.5);
        if (c.contains("state_poles")) {
            s.controller.state_poles = {c["state_poles"][0].get<double>(),
                                        c["state_poles"][1].get<double>()};
        }
        if (c.contains("observer_poles")) {
            s.controller.observer_poles = {c["observer_poles"][0].get<double>(),
                                           c["observer_poles"][1].get<double>()};
        }
        if (c.contains("lqr_q_diag")) {
            for (int i = 0; i < 4; ++i) s.controller.lqr_q_diag[i] = c["lqr_q_diag"][i];
        }
        s.controller.lqr_r = c.value("lqr_r", 1.0);
    }
    if (j.contains("reference")) {
        const auto& r = j["reference"];
        s.reference.kind = reference_kind_from_string(r.value("kind", "zero"));
        s.reference.amplitude = r.value("amplitude", 0.0);
        s.reference.frequency_hz = r.value("frequency_hz", 0.2);
        s.reference.wn_factor = r.value("wn_factor", 20.0);
        s.reference.zeta = r.value("zeta", 0.9);
    }
    s.observer_init = j.value("observer_init", 1.0);
    s.run_observer = j.value("run_observer", false);
    if (j.contains("initial")) {
        const auto& i = j["initial"];
        s.initial.xi_amp = i.value("xi_amp", 0.0);
        s.initial.eta_amp = i.value("eta_amp", 0.0);
        if (i.contains("X0")) s.initial.X0 = {i["X0"][0].get<double>(), i["X0"][1].get<double>()};
    }
    if (j.contains("sensors")) {
        const auto& sn = j["sensors"];
        s.sensors.emulate_strain = sn.value("emulate_strain", false);
        s.sensors.filtered_rates = sn.value("filtered_rates", false);
        s.sensors.wn_factor = sn.value("wn_factor", 20.0);
        s.sensors.zeta = sn.value("zeta", 0.9);
        s.sensors.noise_theta = sn.value("noise_theta", 0.0);
        s.sensors.noise_strain = sn.value("noise_strain", 0.0);
        s.sensors.seed = sn.value("seed", 1u);
    }
    s.kernel_tol = j.value("kernel_tol", 1e-10);
    s.kernel_max_iter = j.value("kernel_max_iter", 200);
    s.max_rows = j.value("max_rows", 4001);
    if (j.contains("snapshot_times")) {
        for (const auto& v : j["snapshot_times"]) s.snapshot_times.push_back(v.get<double>());
    }
    s.seed = j.value("seed", 1u);
    s.tau_limit = j.value("tau_limit", 0.0);
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_text(ss.str(),
                                   std::filesystem::path(path).parent_path().string());
}

std::string scenario_canonical_text(const Scenario& s) {
    json j;
    json links = json::array();
    for (const auto& p : s.links) links.push_back(json::parse(params_to_json_text(p)));
    j["links"] = links;
    j["grid_n"] = s.grid_n;
    j["horizon_s"] = json::parse(fmt17(s.horizon_s));
    j["time_scale"] = json::parse(fmt17(s.time_scale));
    j["controller"] = {
        {"type", controller_type_to_string(s.controller.type)},
        {"c_acute", json::parse(fmt17(s.controller.c_acute))},
        {"state_poles", {s.controller.state_poles[0], s.controller.state_poles[1]}},
        {"observer_poles", {s.controller.observer_poles[0], s.controller.observer_poles[1]}},
        {"lqr_q_diag", {s.controller.lqr_q_diag[0], s.controller.lqr_q_diag[1],
                        s.controller.lqr_q_diag[2], s.controller.lqr_q_diag[3]}},
        {"lqr_r", json::parse(fmt17(s.controller.lqr_r))},
    };
    j["reference"] = {
        {"kind", reference_kind_to_string(s.reference.kind)},
        {"amplitude", json::parse(fmt17(s.reference.amplitude))},
        {"frequency_hz", json::parse(fmt17(s.reference.frequency_hz))},
        {"wn_factor", json::parse(fmt17(s.reference.wn_factor))},
        {"zeta", json::parse(fmt17(s.reference.zeta))},
    };
    j["observer_init"] = json::parse(fmt17(s.observer_init));
    j["run_observer"] = s.run_observer;
    j["initial"] = {{"xi_amp", json::parse(fmt17(s.initial.xi_amp))},
                    {"eta_amp", json::parse(fmt17(s.initial.eta_amp))},
                    {"X0", {s.initial.X0[0], s.initial.X0[1]}}};
    j["sensors"] = {{"emulate_strain", s.sensors.emulate_strain},
                    {"filtered_rates", s.sensors.filtered_rates},
                    {"wn_factor", s.sensors.wn_factor},
                    {"zeta", s.sensors.zeta},
                    {"noise_theta", s.sensors.noise_theta},
                    {"noise_strain", s.sensors.noise_strain},
                    {"seed", s.sensors.seed}};
    j["kernel_tol"] = json::parse(fmt17(s.kernel_tol));
    j["kernel_max_iter"] = s.kernel_max_iter;
    j["max_rows"] = s.max_rows;
    j["snapshot_times"] = s.snapshot_times;
    j["seed"] = s.seed;
    j["tau_limit"] = json::parse(fmt17(s.tau_limit));
    return j.dump();
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Metrics metrics(std::span<const double> series, std::span<const double> reference) {
    if (series.size() != reference.size()) {
        throw std::invalid_argument("metrics: series length mismatch");
    }
    Metrics m;
    if (series.empty()) return m;
    double sq = 0.0, ab = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double e = series[i] - reference[i];
        sq += e * e;
        ab += std::abs(e);
        mx = std::max(mx, std::abs(e));
    }
    m.rmse = std::sqrt(sq / series.size());
    m.mae = ab / series.size();
    m.me = mx;
    return m;
}

DecayFit decay_fit(std::span<const double> t, std::span<const double> v,
                   double tail_fraction) {
    if (t.size() != v.size() || t.size() < 4) {
        throw std::invalid_argument("decay_fit: need at least 4 samples");
    }
    const std::size_t start =
        static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * t.size()));
    std::vector<double> xs, ys;
    for (std::size_t i = start; i < t.size(); ++i) {
        if (!(v[i] > 0.0)) {
            throw std::invalid_argument("decay_fit: non-positive values in tail");
        }
        xs.push_back(t[i]);
        ys.push_back(std::log(v[i]));
    }
    if (xs.size() < 2) throw std::invalid_argument("decay_fit: tail too short");
    const double nn = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double denom = nn * sxx - sx * sx;
    DecayFit f;
    if (std::abs(denom) < 1e-300) return f;
    const double slope = (nn * sxy - sx * sy) / denom;
    f.rate = -slope;
    const double sst = syy - sy * sy / nn;
    const double ssr = slope * (sxy - sx * sy / nn);
    f.r2 = (sst > 0.0) ? ssr / sst : 1.0;
    return f;
}

LyapunovMonitor::LyapunovMonitor(const DimensionlessParams& dp, const ControlKernels& ck,
                                 const InverseKernels& ik, const FeedbackGains& fg)
    : dp_(dp) {
    const int n = ck.n();
    const double h = ck.h();
    const double b = dp.b;
    const StateMatrices sm = state_matrices(dp);
    const Eigen::Matrix2d Acl = sm.A + sm.B * fg.K;
    P1_ = solve_lyapunov_2x2(Acl, Eigen::Matrix2d::Identity());

    // L1_bar: sup norms of the coupling terms on the solved grids
    double t1 = dp.epsilon * (1.0 + dp.R);
    double t2 = 0.0;
    {
        CoshConvolver conv(n, b);
        std::vector<double> c0(n + 1), c1(n + 1), o0(n + 1), o1(n + 1);
        for (int j = 0; j <= n; ++j) {
            c0[j] = ik.lambda[j](0);
            c1[j] = ik.lambda[j](1);
        }
        conv.apply(c0, o0);
        conv.apply(c1, o1);
        for (int j = 0; j <= n; ++j) {
            t2 = std::max(t2, 0.5 * b * b * std::hypot(o0[j], o1[j]));
        }
    }
    // column convolutions of sigma and rho with the cosh(b(x-z)) weight
    double t3 = 0.0, t4 = 0.0;
    {
        std::vector<double> ch(n + 1), sh(n + 1), qc(n + 1), qs(n + 1);
        for (int j = 0; j <= n; ++j) {
            ch[j] = std::cosh(b * j * h);
            sh[j] = std::sinh(b * j * h);
        }
        for (const bool use_sigma : {true, false}) {
            const TriangleGrid& g = use_sigma ? ik.sigma : ik.rho;
            for (int j = 0; j <= n; ++j) {
                qc[j] = 0.0;
                qs[j] = 0.0;
                for (int m = j + 1; m <= n; ++m) {
                    qc[m] = qc[m - 1] + 0.5 * h * (ch[m - 1] * g.at(m - 1, j) + ch[m] * g.at(m, j));
                    qs[m] = qs[m - 1] + 0.5 * h * (sh[m - 1] * g.at(m - 1, j) + sh[m] * g.at(m, j));
                }
                for (int i = j; i <= n; ++i) {
                    const double conv = ch[i] * (qc[i] - qc[j]) - sh[i] * (qs[i] - qs[j]);
                    const double cosh_xy = std::cosh(b * (i - j) * h);
                    if (use_sigma) {
                        t3 = std::max(t3, 0.5 * b * b * std::abs(-cosh_xy + conv));
                    } else {
                        t4 = std::max(t4, 0.5 * b * b * std::abs(cosh_xy + conv));
                    }
                }
            }
        }
    }
    const double L1 = std::max({t1, t2, t3, t4});
    info_.L1_bar = L1;
    for (double g : fg.G_fun) info_.G_sup = std::max(info_.G_sup, std::abs(g));
    info_.a_acute = 1.01 * (4.0 * L1 + std::sqrt(16.0 * L1 * L1 + 4.0 * L1));
    const double PB = (P1_ * sm.B).norm();
    const double term1 = 8.0 * PB * PB + 2.0;  // lambda_min(Q1) = 1
    const double term2 = 2.0 * L1 / info_.a_acute;  // gamma' = 2 G_sup cancels
    info_.h_acute = 1.01 * std::max(term1, term2);
    info_.c_min = 0.5 * info_.h_acute * std::exp(1.0);
    info_.feasible = fg.c_acute > info_.c_min;

    wexp_minus_.resize(n + 1);
    wexp_plus_.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = j * h;
        wexp_minus_[j] = std::exp(-info_.a_acute * x);
        wexp_plus_[j] = info_.h_acute * std::exp(x);
    }
}

double LyapunovMonitor::value(const RiemannState& s, std::span<const double> beta) const {
    const int n = s.n();
    const double h = 1.0 / n;
    const double se = dp_.sqrt_eps();
    double ieta = 0.0, ibeta = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double w = trap_weight(j, n);
        ieta += w * wexp_minus_[j] * s.eta[j] * s.eta[j];
        ibeta += w * wexp_plus_[j] * beta[j] * beta[j];
    }
    ieta *= h;
    ibeta *= h;
    return 0.5 * se * ieta + 0.5 * se * ibeta + 0.5 * beta[n] * beta[n] +
           (s.X.transpose() * P1_ * s.X)(0, 0);
}

double omega0_norm(const RiemannState& s) {
    const int n = s.n();
    const double h = 1.0 / n;
    return s.dtheta * s.dtheta + s.dtheta_dot * s.dtheta_dot + h1_norm_sq(s.xi, h) +
           h1_norm_sq(s.eta, h) + s.X.squaredNorm();
}

namespace {

// Per-link closed-loop runtime.
struct LinkRuntime {
    DimensionlessParams dp;
    std::unique_ptr<RiemannSimulator> sim;
    ControlKernels ck;
    InverseKernels ik;
    FeedbackGains fg;
    bool has_control = false;
    ObserverKernels ok;
    ObserverGains og;
    std::unique_ptr<ObserverSimulator> obsim;
    bool has_observer = false;
    LqrGains lqr;
    std::unique_ptr<LyapunovMonitor> lyap;
    std::unique_ptr<SensorRig> rig;
    std::unique_ptr<ReferenceGenerator> ref;  // non-polar
    RiemannState state;
    ObserverState obs;
    Measurements meas_prev;
    double beta_prev = 0.0;
    bool has_beta_prev = false;
    double omega0_init = 0.0;
    double omega_e_init = 0.0;
    double last_above = 0.0;
    bool ever_above = false;
    bool still_above = false;
    std::size_t next_snapshot = 0;
    // scratch
    std::vector<double> scratch_a, scratch_b;
};

double h1_norm_sq_scratch(const std::vector<double>& f, double h, std::vector<double>& d) {
    d.resize(f.size());
    fd_derivative(f, h, d);
    return l2_norm_sq(f, h) + l2_norm_sq(d, h);
}

}  // namespace

SimResult run_scenario(const Scenario& s) {
    s.validate();
    const int n = s.grid_n;
    const std::size_t nlinks = s.links.size();
    const bool polar = is_polar(s.reference.kind);

    SimResult result;
    result.scenario_hash = fnv1a64(scenario_canonical_text(s));
    result.links.resize(nlinks);

    std::vector<LinkRuntime> rt(nlinks);
    KernelSolveOptions kopt;
    kopt.n = n;
    kopt.tol = s.kernel_tol;
    kopt.max_iter = s.kernel_max_iter;

    const bool need_control = s.controller.type == ControllerType::BacksteppingSF ||
                              s.controller.type == ControllerType::BacksteppingOF;
    const bool need_observer =
        s.controller.type == ControllerType::BacksteppingOF || s.run_observer;

    // polar reference shared across the two joints
    std::unique_ptr<TwoLinkReferenceGenerator> polar_gen;
    if (polar) {
        PolarProfile pp;
        pp.kind = to_polar_kind(s.reference.kind);
        pp.L1_star = s.links[0].L_star;
        pp.L2_star = s.links[1].L_star;
        const double wn = s.reference.wn_factor * 2.0 * M_PI *
                          std::max(s.reference.frequency_hz, 1e-3);
        polar_gen = std::make_unique<TwoLinkReferenceGenerator>(pp, wn, s.reference.zeta,
                                                                s.time_scale);
        polar_gen->warm_up(1.0 / std::max(s.reference.frequency_hz, 1e-3));
    }

    for (std::size_t li = 0; li < nlinks; ++li) {
        LinkRuntime& L = rt[li];
        L.dp = nondimensionalize(s.links[li]);
        L.sim = std::make_unique<RiemannSimulator>(L.dp, n);

        if (need_control) {
            const Eigen::RowVector2d K = place_state_gain(
                L.dp, {s.controller.state_poles[0], 0.0}, {s.controller.state_poles[1], 0.0});
            L.ck = solve_control_kernels(L.dp, K, kopt);
            L.ik = solve_inverse_kernels(L.ck);
            L.fg = synthesize_feedback_gains(L.ck, L.ik, L.dp, s.controller.c_acute);
            L.lyap = std::make_unique<LyapunovMonitor>(L.dp, L.ck, L.ik, L.fg);
            L.has_control = true;
        }
        if (need_observer) {
            L.ok = solve_observer_kernels(L.dp, kopt);
            L.og = compute_observer_gains(L.ok, L.dp,
                                          {s.controller.observer_poles[0], 0.0},
                                          {s.controller.observer_poles[1], 0.0});
            L.obsim = std::make_unique<ObserverSimulator>(L.dp, n);
            L.has_observer = true;
        }
        if (s.controller.type == ControllerType::LqrFF) {
            Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
            for (int i = 0; i < 4; ++i) Q(i, i) = s.controller.lqr_q_diag[i];
            L.lqr = lqr_feedforward_gains(L.dp, Q, s.controller.lqr_r);
        }

        // initial plant state
        std::vector<double> xi0(n + 1, 0.0), eta0(n + 1, 0.0);
        for (int j = 0; j <= n; ++j) {
            const double x = static_cast<double>(j) / n;
            xi0[j] = s.initial.xi_amp * std::sin(M_PI * x);
            eta0[j] = s.initial.eta_amp * std::cos(M_PI * x);
        }
        L.state = make_admissible_state(L.dp, std::move(xi0), std::move(eta0),
                                        {s.initial.X0[0], s.initial.X0[1]});
        L.obs = ObserverState::constant_init(n, s.observer_init);
        L.obs.X_hat = L.state.X;

        if (!polar) {
            ReferenceProfile prof;
            prof.kind = to_profile_kind(s.reference.kind);
            prof.amplitude = s.reference.amplitude;
            prof.frequency_hz = s.reference.frequency_hz;
            prof.wn_factor = s.reference.wn_factor;
            prof.zeta = s.reference.zeta;
            prof.time_scale = s.time_scale;
            L.ref = std::make_unique<ReferenceGenerator>(prof);
            L.ref->warm_up();
        }
        // rate filters must pass the beam band, not just the reference band
        const double ref_rate =
            2.0 * M_PI * std::max(s.reference.frequency_hz, 0.05) / s.time_scale;
        const double beam_rate = M_PI / L.dp.sqrt_eps();
        SensorOptions so = s.sensors;
        so.seed = s.sensors.seed + static_cast<std::uint32_t>(li);
        L.rig = std::make_unique<SensorRig>(L.dp, so, L.sim->dt(),
                                            std::max(ref_rate, beam_rate));

        L.omega0_init = omega0_norm(L.state);
        if (L.has_observer) {
            L.omega_e_init = observer_error_norm(L.obs, L.state).total;
        }
    }

    const double dt = rt[0].sim->dt();
    result.dt = dt;
    const double horizon = s.horizon_dimensionless();
    const long long steps = std::max<long long>(1, llround(std::ceil(horizon / dt)));
    result.steps = steps;
    const long long stride = std::max<long long>(1, steps / std::max(1, s.max_rows - 1));
    const double buffer_t = 1.0 * s.time_scale;  // 1 s dimensional settling buffer

    std::vector<ReferenceSample> ref_begin(nlinks), ref_end(nlinks);
    auto sample_refs = [&](std::vector<ReferenceSample>& out) {
        for (std::size_t li = 0; li < nlinks; ++li) {
            if (polar) {
                out[li] = (li == 0) ? polar_gen->joint1() : polar_gen->joint2();
            } else {
                out[li] = rt[li].ref->sample_dimensionless();
            }
        }
    };

    sample_refs(ref_begin);
    for (std::size_t li = 0; li < nlinks; ++li) {
        rt[li].meas_prev = rt[li].rig->measure(rt[li].state, ref_begin[li].theta_d,
                                               ref_begin[li].theta_dot_d);
    }

    for (long long k = 0; k <= steps; ++k) {
        const double t = k * dt;
        sample_refs(ref_begin);

        // controls at the step start
        std::vector<double> Us(nlinks, 0.0);
        for (std::size_t li = 0; li < nlinks; ++li) {
            LinkRuntime& L = rt[li];
            const ReferenceSample& rs = ref_begin[li];
            switch (s.controller.type) {
                case ControllerType::BacksteppingSF:
                    Us[li] = state_feedback_u(L.state, L.fg, rs.theta_ddot_d);
                    break;
                case ControllerType::BacksteppingOF:
                    Us[li] = output_feedback_u(L.obs.xi_hat, L.obs.eta_hat, L.obs.X_hat,
                                               L.meas_prev.xi0, L.fg, rs.theta_ddot_d);
                    break;
                case ControllerType::LqrFF:
                    Us[li] = lqr_ff_u(L.lqr, L.meas_prev.dtheta, L.meas_prev.dtheta_dot,
                                      L.meas_prev.v0, L.meas_prev.v0_t, rs.theta_d,
                                      rs.theta_dot_d);
                    break;
                case ControllerType::None:
                    Us[li] = 0.0;
                    break;
            }
            if (s.tau_limit > 0.0) {
                // clamp the recovered motor torque and fold back into U
                const double tau = torque_from_u(Us[li], rs.theta_d, rs.theta_dot_d,
                                                 rs.theta_ddot_d, L.dp);
                const double clamped = std::clamp(tau, -s.tau_limit, s.tau_limit);
                Us[li] += clamped - tau;
            }
        }

        // record
        const bool record = (k % stride == 0) || k == steps;
        for (std::size_t li = 0; li < nlinks; ++li) {
            LinkRuntime& L = rt[li];
            LinkResult& out = result.links[li];
            const ReferenceSample& rs = ref_begin[li];

            double beta1 = 0.0;
            if (L.has_control) {
                beta1 = backstepping_transform_at_x1(L.state.xi, L.state.eta, L.state.X, L.ck);
                if (L.has_beta_prev && k > 0) {
                    const double res =
                        std::abs((beta1 - L.beta_prev) / dt +
                                 L.fg.c_acute * 0.5 * (beta1 + L.beta_prev));
                    out.beta_residual_sup = std::max(out.beta_residual_sup, res);
                }
                L.beta_prev = beta1;
                L.has_beta_prev = true;
            }

            const double omega0 =
                L.state.dtheta * L.state.dtheta + L.state.dtheta_dot * L.state.dtheta_dot +
                h1_norm_sq_scratch(L.state.xi, 1.0 / n, L.scratch_a) +
                h1_norm_sq_scratch(L.state.eta, 1.0 / n, L.scratch_a) +
                L.state.X.squaredNorm();
            const double thr = 1e-8 * L.omega0_init;
            if (L.omega0_init > 0.0 && omega0 > thr) {
                L.last_above = t;
                L.ever_above = true;
                L.still_above = true;
            } else {
                L.still_above = false;
            }

            double omega_e = 0.0, omega_a = 0.0;
            if (L.has_observer) {
                const ObserverErrorNorm oe = observer_error_norm(L.obs, L.state);
                omega_e = oe.total;
                omega_a = omega0 +
                          h1_norm_sq_scratch(L.obs.xi_hat, 1.0 / n, L.scratch_a) +
                          h1_norm_sq_scratch(L.obs.eta_hat, 1.0 / n, L.scratch_a) +
                          L.obs.X_hat.squaredNorm();
            }
            out.max_abs_U = std::max(out.max_abs_U, std::abs(Us[li]));

            if (record) {
                const PhysicalOutputs po = physical_outputs(L.state, L.dp);
                out.t.push_back(t);
                out.theta_d.push_back(rs.theta_d);
                out.theta_d_raw.push_back(rs.raw);
                out.dtheta.push_back(L.state.dtheta);
                out.dtheta_dot.push_back(L.state.dtheta_dot);
                out.v_tip.push_back(po.v_tip);
                out.w_tip.push_back(po.w_tip);
                out.v_hub.push_back(po.v_hub);
                out.U.push_back(Us[li]);
                out.tau_m.push_back(torque_from_u(Us[li], rs.theta_d, rs.theta_dot_d,
                                                  rs.theta_ddot_d, L.dp));
                out.energy.push_back(field_energy(L.state));
                if (L.has_control) {
                    const std::vector<double> beta = backstepping_transform(
                        L.state.xi, L.state.eta, L.state.X, L.ck);
                    out.lyapunov.push_back(L.lyap->value(L.state, beta));
                } else {
                    out.lyapunov.push_back(0.0);
                }
                out.beta1.push_back(beta1);
                out.omega0.push_back(omega0);
                out.omega_e.push_back(omega_e);
                out.omega_a.push_back(omega_a);
                const int half = n / 2;
                out.wx0_true.push_back((L.state.xi[0] - L.state.eta[0]) / 2.0);
                out.wxh_true.push_back((L.state.xi[half] - L.state.eta[half]) / 2.0);
                if (L.has_observer) {
                    out.wx0_hat.push_back((L.obs.xi_hat[0] - L.obs.eta_hat[0]) / 2.0);
                    out.wxh_hat.push_back((L.obs.xi_hat[half] - L.obs.eta_hat[half]) / 2.0);
                    out.xhat1.push_back(L.obs.X_hat(0));
                    out.xhat2.push_back(L.obs.X_hat(1));
                    out.xi_hat_0.push_back(L.obs.xi_hat[0]);
                    out.xi_hat_half.push_back(L.obs.xi_hat[half]);
                    out.xi_hat_1.push_back(L.obs.xi_hat[n]);
                    out.eta_hat_0.push_back(L.obs.eta_hat[0]);
                    out.eta_hat_half.push_back(L.obs.eta_hat[half]);
                    out.eta_hat_1.push_back(L.obs.eta_hat[n]);
                } else {
                    out.wx0_hat.push_back(0.0);
                    out.wxh_hat.push_back(0.0);
                    out.xhat1.push_back(0.0);
                    out.xhat2.push_back(0.0);
                    out.xi_hat_0.push_back(0.0);
                    out.xi_hat_half.push_back(0.0);
                    out.xi_hat_1.push_back(0.0);
                    out.eta_hat_0.push_back(0.0);
                    out.eta_hat_half.push_back(0.0);
                    out.eta_hat_1.push_back(0.0);
                }
                if (L.next_snapshot < s.snapshot_times.size() &&
                    t >= s.snapshot_times[L.next_snapshot] - 1e-12) {
                    out.snapshots.push_back({t, {L.state.xi, L.state.eta}});
                    ++L.next_snapshot;
                }
            }
        }

        if (polar && record) {
            RobotResult& rb = result.robot ? *result.robot : result.robot.emplace();
            rb.t.push_back(t);
            rb.r_ref.push_back(polar_gen->r_d());
            rb.phi_ref.push_back(polar_gen->phi_d());
            const double th1 = ref_begin[0].theta_d + rt[0].state.dtheta;
            const double th2 = ref_begin[1].theta_d + rt[1].state.dtheta;
            const PhysicalOutputs p0 = physical_outputs(rt[0].state, rt[0].dp);
            const PhysicalOutputs p1 = physical_outputs(rt[1].state, rt[1].dp);
            const PolarPoint tip = forward_kinematics(
                th1, th2, s.links[0].L_star, s.links[1].L_star,
                p0.v_tip * s.links[0].L_star, p1.v_tip * s.links[1].L_star);
            rb.r_tip.push_back(tip.r);
            rb.phi_tip.push_back(tip.phi);
            rb.fk_residual.push_back(polar_gen->fk_residual());
        }

        if (k == steps) break;

        // advance references, plant, measurements, observer
        if (polar) {
            polar_gen->advance_dimensionless(dt);
        } else {
            for (auto& L : rt) L.ref->advance_dimensionless(dt);
        }
        sample_refs(ref_end);
        for (std::size_t li = 0; li < nlinks; ++li) {
            LinkRuntime& L = rt[li];
            L.sim->step(L.state, Us[li], ref_begin[li].theta_ddot_d,
                        ref_end[li].theta_ddot_d);
            const Measurements m_now = L.rig->measure(L.state, ref_end[li].theta_d,
                                                      ref_end[li].theta_dot_d);
            if (L.has_observer) {
                L.obsim->step(L.obs, L.meas_prev, m_now, L.og,
                              ref_begin[li].theta_ddot_d, ref_end[li].theta_ddot_d);
            }
            L.meas_prev = m_now;
        }
    }

    // summaries
    for (std::size_t li = 0; li < nlinks; ++li) {
        LinkRuntime& L = rt[li];
        LinkResult& out = result.links[li];
        out.omega0_initial = L.omega0_init;
        out.omega0_final = out.omega0.empty() ? 0.0 : out.omega0.back();
        out.omega_e_initial = L.omega_e_init;
        out.omega_e_final = out.omega_e.empty() ? 0.0 : out.omega_e.back();
        out.settling_time = (L.omega0_init > 0.0 && L.ever_above && !L.still_above)
                                ? L.last_above + dt
                                : (L.omega0_init > 0.0 ? -1.0 : 0.0);
        if (L.has_control) out.lyap = L.lyap->info();

        // post-buffer metric window
        std::vector<double> zt, zz, e1, e2, e3, e4, e5, r4, r5;
        for (std::size_t i = 0; i < out.t.size(); ++i) {
            if (out.t[i] < buffer_t) continue;
            zz.push_back(0.0);
            e1.push_back(out.dtheta[i]);
            e2.push_back(out.w_tip[i]);
            e3.push_back(out.v_tip[i]);
            e4.push_back(out.wx0_hat[i]);
            r4.push_back(out.wx0_true[i]);
            e5.push_back(out.wxh_hat[i]);
            r5.push_back(out.wxh_true[i]);
        }
        if (!e1.empty()) {
            out.dtheta_m = metrics(e1, zz);
            out.w_tip_m = metrics(e2, zz);
            out.v_tip_m = metrics(e3, zz);
            if (L.has_observer) {
                out.wx0_m = metrics(e4, r4);
                out.wxh_m = metrics(e5, r5);
            }
        }

        auto fit_tail = [&](const std::vector<double>& v) -> DecayFit {
            // fit the decaying segment: ignore the range after the series
            // reaches its numerical floor relative to the peak
            double peak = 0.0;
            for (double x : v) peak = std::max(peak, x);
            const double floor_v = std::max(1e-11 * peak, 1e-300);
            std::size_t last = 0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (v[i] > floor_v) last = i;
            }
            std::vector<double> ft, fv;
            for (std::size_t i = 0; i <= last && i < v.size(); ++i) {
                if (v[i] > 0.0) {
                    ft.push_back(out.t[i]);
                    fv.push_back(v[i]);
                }
            }
            if (ft.size() < 8) return DecayFit{};
            return decay_fit(ft, fv, 0.6);
        };
        out.omega0_fit = fit_tail(out.omega0);
        if (L.has_observer) out.omega_e_fit = fit_tail(out.omega_e);
    }
    if (result.robot) {
        RobotResult& rb = *result.robot;
        std::vector<double> rr, rf, pr, pf;
        for (std::size_t i = 0; i < rb.t.size(); ++i) {
            if (rb.t[i] < buffer_t) continue;
            rr.push_back(rb.r_tip[i]);
            rf.push_back(rb.r_ref[i]);
            pr.push_back(rb.phi_tip[i]);
            pf.push_back(rb.phi_ref[i]);
        }
        if (!rr.empty()) {
            rb.r_m = metrics(rr, rf);
            rb.phi_m = metrics(pr, pf);
        }
    }
    return result;
}

namespace {

void write_csv(const std::string& path, const std::vector<std::string>& names,
               const std::vector<const std::vector<double>*>& cols) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << names[c] << (c + 1 < names.size() ? "," : "\n");
    }
    const std::size_t rows = cols.empty() ? 0 : cols[0]->size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out << fmt17((*cols[c])[r]) << (c + 1 < cols.size() ? "," : "\n");
        }
    }
}

json metrics_json(const Metrics& m) {
    return {{"rmse", m.rmse}, {"mae", m.mae}, {"me", m.me}};
}

}  // namespace

void export_result(const SimResult& r, const Scenario& s, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    for (std::size_t li = 0; li < r.links.size(); ++li) {
        const LinkResult& L = r.links[li];
        const std::string path =
            (fs::path(out_dir) / ("link" + std::to_string(li + 1) + "_series.csv")).string();
        write_csv(path,
                  {"t", "theta_d", "theta_d_raw", "dtheta", "dtheta_dot", "v_tip", "w_tip",
                   "v_hub", "U", "tau_m", "energy", "lyapunov", "beta1", "omega0",
                   "omega_e", "omega_a", "wx0_true", "wx0_hat", "wxhalf_true",
                   "wxhalf_hat", "xhat1", "xhat2", "xi_hat_0", "xi_hat_half", "xi_hat_1",
                   "eta_hat_0", "eta_hat_half", "eta_hat_1"},
                  {&L.t, &L.theta_d, &L.theta_d_raw, &L.dtheta, &L.dtheta_dot, &L.v_tip,
                   &L.w_tip, &L.v_hub, &L.U, &L.tau_m, &L.energy, &L.lyapunov, &L.beta1,
                   &L.omega0, &L.omega_e, &L.omega_a, &L.wx0_true, &L.wx0_hat,
                   &L.wxh_true, &L.wxh_hat, &L.xhat1, &L.xhat2, &L.xi_hat_0,
                   &L.xi_hat_half, &L.xi_hat_1, &L.eta_hat_0, &L.eta_hat_half,
                   &L.eta_hat_1});
        for (std::size_t si = 0; si < L.snapshots.size(); ++si) {
            const auto& snap = L.snapshots[si];
            const int n = static_cast<int>(snap.second.first.size()) - 1;
            std::vector<double> xs(n + 1);
            for (int j = 0; j <= n; ++j) xs[j] = static_cast<double>(j) / n;
            const std::string spath =
                (fs::path(out_dir) / ("link" + std::to_string(li + 1) + "_snapshot" +
                                      std::to_string(si) + ".csv"))
                    .string();
            write_csv(spath, {"x", "xi", "eta"},
                      {&xs, &snap.second.first, &snap.second.second});
        }
    }
    if (r.robot) {
        const RobotResult& rb = *r.robot;
        write_csv((fs::path(out_dir) / "robot.csv").string(),
                  {"t", "r_ref", "phi_ref", "r_tip", "phi_tip", "fk_residual"},
                  {&rb.t, &rb.r_ref, &rb.phi_ref, &rb.r_tip, &rb.phi_tip, &rb.fk_residual});
    }

    json summary;
    summary["format_version"] = 1;
    json jl = json::array();
    for (const LinkResult& L : r.links) {
        json e;
        e["dtheta"] = metrics_json(L.dtheta_m);
        e["w_tip"] = metrics_json(L.w_tip_m);
        e["v_tip"] = metrics_json(L.v_tip_m);
        e["wx_probe_0"] = metrics_json(L.wx0_m);
        e["wx_probe_half"] = metrics_json(L.wxh_m);
        e["max_abs_U"] = L.max_abs_U;
        e["omega0_initial"] = L.omega0_initial;
        e["omega0_final"] = L.omega0_final;
        e["omega_e_initial"] = L.omega_e_initial;
        e["omega_e_final"] = L.omega_e_final;
        e["beta_residual_sup"] = L.beta_residual_sup;
        e["settling_time"] = L.settling_time;
        e["omega0_fit"] = {{"rate", L.omega0_fit.rate}, {"r2", L.omega0_fit.r2}};
        e["omega_e_fit"] = {{"rate", L.omega_e_fit.rate}, {"r2", L.omega_e_fit.r2}};
        e["lyapunov"] = {{"a_acute", L.lyap.a_acute}, {"h_acute", L.lyap.h_acute},
                         {"L1_bar", L.lyap.L1_bar},   {"G_sup", L.lyap.G_sup},
                         {"c_min", L.lyap.c_min},     {"feasible", L.lyap.feasible}};
        jl.push_back(e);
    }
    summary["links"] = jl;
    if (r.robot) {
        summary["robot"] = {{"r", metrics_json(r.robot->r_m)},
                            {"phi", metrics_json(r.robot->phi_m)}};
    }
    std::ofstream(std::filesystem::path(out_dir) / "summary.json") << summary.dump(2) << "\n";

    json manifest;
    manifest["format_version"] = 1;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(r.scenario_hash));
    manifest["scenario_hash"] = hex;
    manifest["grid_n"] = s.grid_n;
    manifest["dt"] = r.dt;
    manifest["steps"] = r.steps;
    manifest["kernel_tol"] = s.kernel_tol;
    manifest["time_scale"] = s.time_scale;
    manifest["horizon_s"] = s.horizon_s;
    std::ofstream(std::filesystem::path(out_dir) / "manifest.json") << manifest.dump(2) << "\n";
}

}  // namespace flexbeam
