#include "flexbeam/observer.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbeam {

namespace {

Eigen::Vector2d advance_xhat(const StateMatrices& sm, const Eigen::Vector2d& L,
                             Eigen::Vector2d X, double u0, double u1, double y0,
                             double y1, double g0, double g1, double dt) {
    auto f = [&](double a, const Eigen::Vector2d& x) -> Eigen::Vector2d {
        const double u = u0 + a * (u1 - u0);
        const double y = y0 + a * (y1 - y0);
        const double g = g0 + a * (g1 - g0);
        return sm.A * x + sm.B * u + sm.D * g - L * ((sm.C * x)(0, 0) - y);
    };
    const Eigen::Vector2d k1 = f(0.0, X);
    const Eigen::Vector2d k2 = f(0.5, X + 0.5 * dt * k1);
    const Eigen::Vector2d k3 = f(0.5, X + 0.5 * dt * k2);
    const Eigen::Vector2d k4 = f(1.0, X + dt * k3);
    return X + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

ObserverState ObserverState::constant_init(int n, double value) {
    ObserverState os;
    os.xi_hat.assign(n + 1, value);
    os.eta_hat.assign(n + 1, value);
    return os;
}

ObserverSimulator::ObserverSimulator(const DimensionlessParams& dp, int n)
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
      eta_new_(n + 1) {}

void ObserverSimulator::step(ObserverState& os, const Measurements& m_begin,
                             const Measurements& m_end, const ObserverGains& og,
                             double theta_dd_begin, double theta_dd_end) {
    if (os.n() != n_) throw std::invalid_argument("ObserverSimulator: state grid mismatch");
    for (double v : os.xi_hat) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("ObserverSimulator: non-finite state at t = " +
                                     std::to_string(os.t));
        }
    }

    for (int j = 0; j <= n_; ++j) diff_[j] = os.xi_hat[j] - os.eta_hat[j];
    conv_.apply(diff_, S_);
    for (int j = 0; j <= n_; ++j) {
        S_[j] = b2h_ * S_[j] - dp_.epsilon * (1.0 + dp_.R - j * h_) * theta_dd_begin;
    }
    const double inj = os.xi_hat[0] - m_begin.xi0;

    for (int j = 0; j < n_; ++j) {
        xi_new_[j] = os.xi_hat[j + 1] + 0.5 * h_ * (S_[j + 1] + S_[j]) -
                     0.5 * h_ * (og.Gamma_xi[j + 1] + og.Gamma_xi[j]) * inj;
    }
    for (int j = n_; j >= 1; --j) {
        eta_new_[j] = os.eta_hat[j - 1] + 0.5 * h_ * (S_[j - 1] + S_[j]) -
                      0.5 * h_ * (og.Gamma_eta[j - 1] + og.Gamma_eta[j]) * inj;
    }

    os.X_hat = advance_xhat(sm_, og.L, os.X_hat, m_begin.xi0, m_end.xi0, m_begin.CX,
                            m_end.CX, theta_dd_begin, theta_dd_end, dt_);

    eta_new_[0] = -m_end.xi0 + m_end.CX;
    xi_new_[n_] = -eta_new_[n_] + 2.0 * se_ * dp_.R * m_end.dtheta_dot;

    os.xi_hat.swap(xi_new_);
    os.eta_hat.swap(eta_new_);
    os.t += dt_;
}

ObserverState step_observer(const ObserverState& os, const Measurements& m_begin,
                            const Measurements& m_end, const ObserverGains& og,
                            const DimensionlessParams& dp, double theta_dd, double dt) {
    const int n = os.n();
    const double dt_exact = dp.sqrt_eps() / n;
    if (std::abs(dt - dt_exact) > 1e-12 * dt_exact) {
        throw std::invalid_argument("step_observer: dt violates the CFL-exact contract");
    }
    if (static_cast<int>(og.Gamma_xi.size()) != n + 1) {
        throw std::invalid_argument("step_observer: gains on a different grid");
    }
    ObserverSimulator sim(dp, n);
    ObserverState out = os;
    sim.step(out, m_begin, m_end, og, theta_dd, theta_dd);
    return out;
}

FilteredDifferentiator::FilteredDifferentiator(double wn, double zeta, double dt) {
    const double K = 2.0 / dt;
    const double a0 = K * K + 2.0 * zeta * wn * K + wn * wn;
    b0_ = wn * wn * K / a0;
    b2_ = -wn * wn * K / a0;
    a1_ = (-2.0 * K * K + 2.0 * wn * wn) / a0;
    a2_ = (K * K - 2.0 * zeta * wn * K + wn * wn) / a0;
    primed_ = false;
}

double FilteredDifferentiator::update(double u) {
    // direct form II transposed; b1 = 0
    const double y = b0_ * u + z1_;
    z1_ = -a1_ * y + z2_;
    z2_ = b2_ * u - a2_ * y;
    return y;
}

void FilteredDifferentiator::prime(double u0, int settle_samples) {
    // steady state for a constant input (zero output): z1 = z2 = b2 u0
    z1_ = b2_ * u0;
    z2_ = b2_ * u0;
    for (int i = 0; i < settle_samples; ++i) update(u0);
    primed_ = true;
}

SensorRig::SensorRig(const DimensionlessParams& dp, const SensorOptions& opt, double dt,
                     double reference_rate)
    : dp_(dp), opt_(opt), rng_(opt.seed ? opt.seed : 1u) {
    if (opt.filtered_rates) {
        const double wn = opt.wn_factor * std::max(reference_rate, 1e-6);
        theta_filter_ = FilteredDifferentiator(wn, opt.zeta, dt);
        v0_filter_ = FilteredDifferentiator(wn, opt.zeta, dt);
        // settling horizon ~ 6 / (zeta wn)
        warmup_left_ = static_cast<int>(6.0 / (opt.zeta * wn * dt)) + 1;
    }
}

double SensorRig::gauss(double sigma) {
    if (sigma <= 0.0) return 0.0;
    if (spare_gauss_) {
        const double v = *spare_gauss_;
        spare_gauss_.reset();
        return sigma * v;
    }
    // Box-Muller on a xorshift stream
    auto next = [&]() {
        rng_ ^= rng_ << 13;
        rng_ ^= rng_ >> 17;
        rng_ ^= rng_ << 5;
        return (rng_ + 0.5) * (1.0 / 4294967296.0);
    };
    const double u1 = next();
    const double u2 = next();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_gauss_ = r * std::sin(2.0 * M_PI * u2);
    return sigma * r * std::cos(2.0 * M_PI * u2);
}

Measurements SensorRig::measure(const RiemannState& rs, double theta_d,
                                double theta_dot_d) {
    Measurements m;
    const double oneR = 1.0 + dp_.R;
    const double v0_true = rs.X(1) - oneR * rs.dtheta;
    m.theta = rs.dtheta + theta_d + gauss(opt_.noise_theta);
    m.E_b = 1.5 * dp_.Lw * v0_true + gauss(opt_.noise_strain);
    m.dtheta = m.theta - theta_d;

    if (opt_.emulate_strain) {
        m.v0 = 2.0 * m.E_b / (3.0 * dp_.Lw);
        m.v0_x = 4.0 * m.E_b / (3.0 * dp_.Lw);
    } else {
        m.v0 = v0_true;
        m.v0_x = (rs.xi[0] - rs.eta[0]) / 2.0 + rs.dtheta;
    }

    if (opt_.filtered_rates) {
        if (first_) {
            theta_filter_.prime(m.theta, 0);
            v0_filter_.prime(m.v0, 0);
            first_ = false;
        }
        m.theta_dot = theta_filter_.update(m.theta);
        m.v0_t = v0_filter_.update(m.v0);
        if (warmup_left_ > 0) {
            --warmup_left_;
            m.settled = false;
        }
        m.dtheta_dot = m.theta_dot - theta_dot_d;
        const double w_t0 = m.v0_t + oneR * m.dtheta_dot;
        const double w_x0 = m.v0_x - m.dtheta;
        m.xi0 = dp_.sqrt_eps() * w_t0 + w_x0;
        m.CX = 2.0 * dp_.sqrt_eps() * w_t0;
    } else {
        m.theta_dot = rs.dtheta_dot + theta_dot_d;
        m.v0_t = rs.X(0) - oneR * rs.dtheta_dot;
        m.dtheta_dot = rs.dtheta_dot;
        m.xi0 = rs.xi[0];
        m.CX = 2.0 * dp_.sqrt_eps() * rs.X(0);
    }
    return m;
}

ObserverErrorNorm observer_error_norm(const ObserverState& os, const RiemannState& rs) {
    if (os.n() != rs.n()) throw std::invalid_argument("observer_error_norm: grid mismatch");
    const int n = os.n();
    const double h = 1.0 / n;
    std::vector<double> exi(n + 1), eeta(n + 1);
    for (int j = 0; j <= n; ++j) {
        exi[j] = os.xi_hat[j] - rs.xi[j];
        eeta[j] = os.eta_hat[j] - rs.eta[j];
    }
    ObserverErrorNorm r;
    r.xi_h1 = h1_norm_sq(exi, h);
    r.eta_h1 = h1_norm_sq(eeta, h);
    r.X_sq = (os.X_hat - rs.X).squaredNorm();
    r.total = r.xi_h1 + r.eta_h1 + r.X_sq;
    return r;
}

void error_target_transform(const std::vector<double>& xi_err,
                            const std::vector<double>& eta_err,
                            const ObserverKernels& ok, std::vector<double>& alpha_out,
                            std::vector<double>& beta_out) {
    const int n = ok.n();
    if (static_cast<int>(xi_err.size()) != n + 1) {
        throw std::invalid_argument("error_target_transform: grid mismatch");
    }
    const double h = 1.0 / n;
    beta_out.assign(n + 1, 0.0);
    alpha_out.assign(n + 1, 0.0);
    // forward Volterra march: beta(x) + int_0^x psi(x,y) beta(y) dy = xi_err(x)
    beta_out[0] = xi_err[0];
    for (int i = 1; i <= n; ++i) {
        double s = 0.5 * ok.psi.at(i, 0) * beta_out[0];
        for (int m = 1; m < i; ++m) s += ok.psi.at(i, m) * beta_out[m];
        const double pivot = 1.0 + 0.5 * h * ok.psi.at(i, i);
        beta_out[i] = (xi_err[i] - h * s) / pivot;
    }
    std::vector<double> row(n + 1);
    for (int i = 0; i <= n; ++i) {
        for (int m = 0; m <= i; ++m) row[m] = ok.phi.at(i, m) * beta_out[m];
        alpha_out[i] = eta_err[i] - trapz_range(row, 0, i, h);
    }
}

// S21(x,y) = (b^2/2) cosh(b(x-y)) - int_y^x psi(x,z) S21(z,y) dz
TriangleGrid compute_S21(const ObserverKernels& ok) {
    const int n = ok.n();
    const double h = 1.0 / n;
    const double b2h = 0.5 * ok.b * ok.b;
    TriangleGrid S21(n, Domain::Lower);
    for (int j = 0; j <= n; ++j) {
        S21.at(j, j) = b2h;
        for (int i = j + 1; i <= n; ++i) {
            double s = 0.5 * ok.psi.at(i, j) * S21.at(j, j);
            for (int m = j + 1; m < i; ++m) s += ok.psi.at(i, m) * S21.at(m, j);
            const double pivot = 1.0 + 0.5 * h * ok.psi.at(i, i);
            const double forcing = b2h * std::cosh(ok.b * (i - j) * h);
            S21.at(i, j) = (forcing - h * s) / pivot;
        }
    }
    return S21;
}

// S11(x,y) = (b^2/2) cosh(b(x-y)) - int_y^x phi(x,z) S21(z,y) dz
TriangleGrid compute_S11(const ObserverKernels& ok, const TriangleGrid& S21) {
    const int n = ok.n();
    const double h = 1.0 / n;
    const double b2h = 0.5 * ok.b * ok.b;
    TriangleGrid S11(n, Domain::Lower);
    std::vector<double> row(n + 1);
    for (int j = 0; j <= n; ++j) {
        for (int i = j; i <= n; ++i) {
            for (int m = j; m <= i; ++m) row[m] = ok.phi.at(i, m) * S21.at(m, j);
            S11.at(i, j) = b2h * std::cosh(ok.b * (i - j) * h) - trapz_range(row, j, i, h);
        }
    }
    return S11;
}

}  // namespace flexbeam
