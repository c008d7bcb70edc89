#include "flexbeam/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbeam {

namespace {

bool finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// RK4 for the joint ODE  J ddth = c dth + U  with U held over the step.
void advance_joint(double& th, double& thd, double cJ, double UoverJ, double dt) {
    auto f = [&](double, double v) { return cJ * v + UoverJ; };
    const double k1 = f(th, thd);
    const double k2 = f(th, thd + 0.5 * dt * k1);
    const double k3 = f(th, thd + 0.5 * dt * k2);
    const double k4 = f(th, thd + dt * k3);
    // position integrates the velocity stages
    const double v1 = thd;
    const double v2 = thd + 0.5 * dt * k1;
    const double v3 = thd + 0.5 * dt * k2;
    const double v4 = thd + dt * k3;
    th += dt / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
    thd += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// RK4 for Xdot = A X + B u(tau) + D g(tau) with linear u, g over the step.
Eigen::Vector2d advance_tip(const StateMatrices& sm, Eigen::Vector2d X, double u0,
                            double u1, double g0, double g1, double dt) {
    auto f = [&](double a, const Eigen::Vector2d& x) -> Eigen::Vector2d {
        const double u = u0 + a * (u1 - u0);
        const double g = g0 + a * (g1 - g0);
        return sm.A * x + sm.B * u + sm.D * g;
    };
    const Eigen::Vector2d k1 = f(0.0, X);
    const Eigen::Vector2d k2 = f(0.5, X + 0.5 * dt * k1);
    const Eigen::Vector2d k3 = f(0.5, X + 0.5 * dt * k2);
    const Eigen::Vector2d k4 = f(1.0, X + dt * k3);
    return X + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

RiemannState RiemannState::zero(int n) {
    RiemannState s;
    s.xi.assign(n + 1, 0.0);
    s.eta.assign(n + 1, 0.0);
    return s;
}

RiemannSimulator::RiemannSimulator(const DimensionlessParams& dp, int n)
    : dp_(dp),
      sm_(state_matrices(dp)),
      n_(n),
      h_(1.0 / n),
      se_(dp.sqrt_eps()),
      dt_(dp.sqrt_eps() / n),
      b2h_(0.5 * dp.b * dp.b),
      conv_(n, dp.b),
      S_(n + 1),
      diff_(n + 1),
      xi_new_(n + 1),
      eta_new_(n + 1) {
    if (n < 2) throw std::invalid_argument("RiemannSimulator: n must be >= 2");
}

void RiemannSimulator::step(RiemannState& s, double U, double theta_dd_begin,
                            double theta_dd_end) {
    if (s.n() != n_) throw std::invalid_argument("RiemannSimulator: state grid mismatch");
    if (!finite(s.xi) || !finite(s.eta) || !s.X.allFinite() ||
        !std::isfinite(s.dtheta) || !std::isfinite(s.dtheta_dot)) {
        throw std::runtime_error("RiemannSimulator: non-finite state at t = " +
                                 std::to_string(s.t));
    }

    // beginning-of-step source, shared by both transport equations
    for (int j = 0; j <= n_; ++j) diff_[j] = s.xi[j] - s.eta[j];
    conv_.apply(diff_, S_);
    for (int j = 0; j <= n_; ++j) {
        S_[j] = b2h_ * S_[j] - dp_.epsilon * (1.0 + dp_.R - j * h_) * theta_dd_begin;
    }

    // transport: xi right-to-left, eta left-to-right, one node per step
    for (int j = 0; j < n_; ++j) {
        xi_new_[j] = s.xi[j + 1] + 0.5 * h_ * (S_[j + 1] + S_[j]);
    }
    for (int j = n_; j >= 1; --j) {
        eta_new_[j] = s.eta[j - 1] + 0.5 * h_ * (S_[j - 1] + S_[j]);
    }

    advance_joint(s.dtheta, s.dtheta_dot, dp_.c / dp_.J, U / dp_.J, dt_);
    s.X = advance_tip(sm_, s.X, s.xi[0], xi_new_[0], theta_dd_begin, theta_dd_end, dt_);

    eta_new_[0] = -xi_new_[0] + (sm_.C * s.X)(0, 0);
    xi_new_[n_] = -eta_new_[n_] + 2.0 * se_ * dp_.R * s.dtheta_dot;

    s.xi.swap(xi_new_);
    s.eta.swap(eta_new_);
    s.t += dt_;
}

RiemannState step_riemann(const RiemannState& s, double U, double theta_dd,
                          const DimensionlessParams& dp, double dt) {
    const int n = s.n();
    const double dt_exact = dp.sqrt_eps() / n;
    if (std::abs(dt - dt_exact) > 1e-12 * dt_exact) {
        throw std::invalid_argument("step_riemann: dt violates the CFL-exact contract");
    }
    RiemannSimulator sim(dp, n);
    RiemannState out = s;
    sim.step(out, U, theta_dd, theta_dd);
    return out;
}

WaveSimulator::WaveSimulator(const DimensionlessParams& dp, int n, double cfl)
    : dp_(dp), n_(n), h_(1.0 / n), se_(dp.sqrt_eps()), conv_(n, dp.b) {
    if (n < 4) throw std::invalid_argument("WaveSimulator: n must be >= 4");
    if (!(cfl > 0.0) || cfl > 1.0) {
        throw std::invalid_argument("WaveSimulator: dt must satisfy dt <= sqrt(eps) h");
    }
    dt_ = cfl * se_ * h_;
    w_prev_.assign(n + 1, 0.0);
    w_curr_.assign(n + 1, 0.0);
}

std::vector<double> WaveSimulator::accel(const std::vector<double>& w,
                                         double theta_dd) const {
    // eps w_tt = w_xx + b^2 int_0^x cosh(b(x-y)) w_y dy - eps (1+R-x) thdd
    std::vector<double> wy(n_ + 1), cvl(n_ + 1), a(n_ + 1, 0.0);
    fd_derivative(w, h_, wy);
    conv_.apply(wy, cvl);
    for (int j = 1; j < n_; ++j) {
        const double wxx = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (h_ * h_);
        a[j] = (wxx + dp_.b * dp_.b * cvl[j]) / dp_.epsilon -
               (1.0 + dp_.R - j * h_) * theta_dd;
    }
    // tip mass: m (w_tt(0) + (1+R) thdd) = w_x(0)
    const double wx0 = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h_);
    a[0] = wx0 / dp_.m - (1.0 + dp_.R) * theta_dd;
    return a;
}

void WaveSimulator::init(const std::vector<double>& w0, const std::vector<double>& v0,
                         double dtheta0, double dtheta_dot0, double theta_dd0) {
    if (static_cast<int>(w0.size()) != n_ + 1 || static_cast<int>(v0.size()) != n_ + 1) {
        throw std::invalid_argument("WaveSimulator: initial data size mismatch");
    }
    w_curr_ = w0;
    dtheta_ = dtheta0;
    dtheta_dot_ = dtheta_dot0;
    const std::vector<double> a = accel(w0, theta_dd0);
    w_prev_.resize(n_ + 1);
    for (int j = 0; j <= n_; ++j) {
        w_prev_[j] = w0[j] - dt_ * v0[j] + 0.5 * dt_ * dt_ * a[j];
    }
    // hub value follows the joint exactly
    w_prev_[n_] = w0[n_] - dt_ * dp_.R * dtheta_dot0;
    t_ = 0.0;
}

std::vector<double> WaveSimulator::next_w(double theta_dd) const {
    const std::vector<double> a = accel(w_curr_, theta_dd);
    std::vector<double> w_next(n_ + 1);
    for (int j = 0; j < n_; ++j) {
        w_next[j] = 2.0 * w_curr_[j] - w_prev_[j] + dt_ * dt_ * a[j];
    }
    return w_next;
}

void WaveSimulator::step(double U, double theta_dd_begin, double theta_dd_end) {
    (void)theta_dd_end;
    std::vector<double> w_next = next_w(theta_dd_begin);
    const double thd_old = dtheta_dot_;
    advance_joint(dtheta_, dtheta_dot_, dp_.c / dp_.J, U / dp_.J, dt_);
    w_next[n_] = w_curr_[n_] + 0.5 * dt_ * dp_.R * (thd_old + dtheta_dot_);
    w_prev_.swap(w_curr_);
    w_curr_.swap(w_next);
    t_ += dt_;
    U_last_ = U;

    double m = 0.0;
    for (double x : w_curr_) m = std::max(m, std::abs(x));
    if (!(m < 1e6)) {
        throw std::runtime_error("WaveSimulator: instability detected (norm growth)");
    }
}

DisplacementState WaveSimulator::state(double theta_dd) const {
    DisplacementState ds;
    ds.w = w_curr_;
    ds.w_t.resize(n_ + 1);
    const std::vector<double> w_next = next_w(theta_dd);
    for (int j = 0; j < n_; ++j) {
        ds.w_t[j] = (w_next[j] - w_prev_[j]) / (2.0 * dt_);
    }
    ds.w_t[n_] = dp_.R * dtheta_dot_;  // hub follows the joint exactly
    ds.dtheta = dtheta_;
    ds.dtheta_dot = dtheta_dot_;
    ds.t = t_;
    return ds;
}

DisplacementState step_wave_oracle(const DisplacementState& s, double U, double theta_dd,
                                   const DimensionlessParams& dp, double dt) {
    const int n = s.n();
    const double bound = dp.sqrt_eps() / n;
    if (dt > bound * (1.0 + 1e-12)) {
        throw std::invalid_argument("step_wave_oracle: dt exceeds the stability bound");
    }
    WaveSimulator sim(dp, n, dt / bound);
    sim.init(s.w, s.w_t, s.dtheta, s.dtheta_dot, theta_dd);
    sim.step(U, theta_dd, theta_dd);
    DisplacementState out = sim.state(theta_dd);
    out.t = s.t + dt;
    out.Phi = reconstruct_phi(riemann_from_displacement(out, dp), dp);
    return out;
}

RiemannState riemann_from_displacement(const DisplacementState& ds,
                                       const DimensionlessParams& dp) {
    const int n = ds.n();
    const double se = dp.sqrt_eps();
    RiemannState rs = RiemannState::zero(n);
    std::vector<double> wx(n + 1);
    fd_derivative(ds.w, 1.0 / n, wx);
    for (int j = 0; j <= n; ++j) {
        rs.xi[j] = se * ds.w_t[j] + wx[j];
        rs.eta[j] = se * ds.w_t[j] - wx[j];
    }
    rs.X << ds.w_t[0], ds.w[0];
    rs.dtheta = ds.dtheta;
    rs.dtheta_dot = ds.dtheta_dot;
    rs.t = ds.t;
    return rs;
}

DisplacementState displacement_from_riemann(const RiemannState& rs,
                                            const DimensionlessParams& dp) {
    const int n = rs.n();
    const double se = dp.sqrt_eps();
    DisplacementState ds;
    ds.w_t.resize(n + 1);
    std::vector<double> wx(n + 1);
    for (int j = 0; j <= n; ++j) {
        ds.w_t[j] = (rs.xi[j] + rs.eta[j]) / (2.0 * se);
        wx[j] = (rs.xi[j] - rs.eta[j]) / 2.0;
    }
    ds.w.resize(n + 1);
    trapz_prefix(wx, 1.0 / n, ds.w);
    for (int j = 0; j <= n; ++j) ds.w[j] += rs.X(1);
    ds.Phi = reconstruct_phi(rs, dp);
    ds.dtheta = rs.dtheta;
    ds.dtheta_dot = rs.dtheta_dot;
    ds.t = rs.t;
    return ds;
}

std::vector<double> reconstruct_phi(const RiemannState& rs, const DimensionlessParams& dp) {
    const int n = rs.n();
    std::vector<double> wy(n + 1), phi(n + 1);
    for (int j = 0; j <= n; ++j) wy[j] = (rs.xi[j] - rs.eta[j]) / 2.0;
    CoshConvolver conv(n, dp.b);
    conv.apply_sinh(wy, phi);
    for (int j = 0; j <= n; ++j) phi[j] *= -dp.b;
    return phi;
}

PhysicalOutputs physical_outputs(const RiemannState& rs, const DimensionlessParams& dp) {
    const int n = rs.n();
    PhysicalOutputs o;
    o.dtheta = rs.dtheta;
    o.w_tip = rs.X(1);
    o.v_tip = rs.X(1) - (1.0 + dp.R) * rs.dtheta;
    std::vector<double> wx(n + 1);
    for (int j = 0; j <= n; ++j) wx[j] = (rs.xi[j] - rs.eta[j]) / 2.0;
    const double w_hub = rs.X(1) + trapz(wx, 1.0 / n);
    o.v_hub = w_hub - dp.R * rs.dtheta;
    return o;
}

double field_energy(const RiemannState& rs) {
    const int n = rs.n();
    std::vector<double> q(n + 1);
    for (int j = 0; j <= n; ++j) q[j] = rs.xi[j] * rs.xi[j] + rs.eta[j] * rs.eta[j];
    return 0.25 * trapz(q, 1.0 / n);
}

RiemannState make_admissible_state(const DimensionlessParams& dp,
                                   std::vector<double> xi, std::vector<double> eta,
                                   const Eigen::Vector2d& X) {
    if (xi.size() != eta.size() || xi.size() < 3) {
        throw std::invalid_argument("make_admissible_state: bad field sizes");
    }
    const int n = static_cast<int>(xi.size()) - 1;
    const double se = dp.sqrt_eps();
    const StateMatrices sm = state_matrices(dp);
    RiemannState s;
    s.xi = std::move(xi);
    s.eta = std::move(eta);
    s.X = X;
    const double eta0 = -s.xi[0] + (sm.C * X)(0, 0);
    const double shift = eta0 - s.eta[0];
    for (double& v : s.eta) v += shift;
    s.dtheta_dot = (s.xi[n] + s.eta[n]) / (2.0 * se * dp.R);
    std::vector<double> wx(n + 1);
    for (int j = 0; j <= n; ++j) wx[j] = (s.xi[j] - s.eta[j]) / 2.0;
    s.dtheta = (trapz(wx, 1.0 / n) + X(1)) / dp.R;
    return s;
}

}  // namespace flexbeam
