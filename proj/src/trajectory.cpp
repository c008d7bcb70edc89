#include "flexbeam/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbeam {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double raw_reference(const ReferenceProfile& p, double t_s) {
    const double f = p.frequency_hz;
    switch (p.kind) {
        case ReferenceKind::Zero:
            return 0.0;
        case ReferenceKind::Sinusoid:
            return p.amplitude * std::sin(2.0 * M_PI * f * t_s);
        case ReferenceKind::Square:
            return p.amplitude * sgn(std::sin(2.0 * M_PI * f * t_s));
        case ReferenceKind::Sawtooth:
            return 2.0 * p.amplitude * (f * t_s - std::floor(f * t_s + 0.5));
    }
    return 0.0;
}

ReferenceGenerator::ReferenceGenerator(const ReferenceProfile& p) : p_(p) {
    const double f = std::max(p.frequency_hz, 1e-6);
    wn_ = p.wn_factor * 2.0 * M_PI * f;
    zeta_ = p.zeta;
}

void ReferenceGenerator::rk4(double dt, double u0, double um, double u1) {
    auto acc = [&](double u, double y, double yd) {
        return wn_ * wn_ * (u - y) - 2.0 * zeta_ * wn_ * yd;
    };
    const double k1y = yd_, k1v = acc(u0, y_, yd_);
    const double k2y = yd_ + 0.5 * dt * k1v, k2v = acc(um, y_ + 0.5 * dt * k1y, yd_ + 0.5 * dt * k1v);
    const double k3y = yd_ + 0.5 * dt * k2v, k3v = acc(um, y_ + 0.5 * dt * k2y, yd_ + 0.5 * dt * k2v);
    const double k4y = yd_ + dt * k3v, k4v = acc(u1, y_ + dt * k3y, yd_ + dt * k3v);
    y_ += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    yd_ += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

void ReferenceGenerator::warm_up() {
    if (p_.kind == ReferenceKind::Zero) return;
    const double period = 1.0 / std::max(p_.frequency_hz, 1e-6);
    const double settle = 8.0 / (zeta_ * wn_);
    const double span = std::max(period, settle);
    const int steps = 4000;
    const double dt = span / steps;
    t_ = -span;
    y_ = raw_reference(p_, t_);
    yd_ = 0.0;
    for (int i = 0; i < steps; ++i) {
        advance_seconds(dt);
    }
    t_ = 0.0;
}

void ReferenceGenerator::advance_seconds(double dt_s) {
    if (p_.kind == ReferenceKind::Zero) {
        t_ += dt_s;
        return;
    }
    rk4(dt_s, raw_reference(p_, t_), raw_reference(p_, t_ + 0.5 * dt_s),
        raw_reference(p_, t_ + dt_s));
    t_ += dt_s;
}

ReferenceSample ReferenceGenerator::sample_seconds() const {
    ReferenceSample s;
    s.raw = raw_reference(p_, t_);
    s.theta_d = y_;
    s.theta_dot_d = yd_;
    s.theta_ddot_d = wn_ * wn_ * (s.raw - y_) - 2.0 * zeta_ * wn_ * yd_;
    return s;
}

ReferenceSample ReferenceGenerator::sample_dimensionless() const {
    ReferenceSample s = sample_seconds();
    s.theta_dot_d /= p_.time_scale;
    s.theta_ddot_d /= p_.time_scale * p_.time_scale;
    return s;
}

ReferenceSample theta_ref(const ReferenceProfile& p, double t_dim, double dt_dim) {
    if (t_dim < 0.0) throw std::invalid_argument("theta_ref: t must be >= 0");
    ReferenceGenerator gen(p);
    gen.warm_up();
    double t = 0.0;
    while (t + dt_dim <= t_dim) {
        gen.advance_dimensionless(dt_dim);
        t += dt_dim;
    }
    if (t_dim > t) gen.advance_dimensionless(t_dim - t);
    return gen.sample_dimensionless();
}

double PolarProfile::r1() const { return (L1_star + L2_star) * (2.0 + std::sqrt(3.0)) / 4.0; }
double PolarProfile::r2() const { return (L1_star + L2_star) * (2.0 - std::sqrt(3.0)) / 4.0; }

void PolarProfile::eval(double t_s, double& r_d, double& phi_d) const {
    const double amp = 35.0 * M_PI / 180.0;
    switch (kind) {
        case PolarKind::Sinusoid:
            r_d = r1() + r2() * std::cos(1.2 * M_PI * t_s);
            phi_d = amp * std::sin(0.4 * M_PI * t_s);
            break;
        case PolarKind::Square:
            r_d = r1() + r2() * sgn(std::cos(0.4 * M_PI * t_s));
            phi_d = amp * sgn(std::sin(0.2 * M_PI * t_s));
            break;
        case PolarKind::Sawtooth:
            r_d = r1() + r2() * (std::floor(0.4 * t_s + 0.5) - 0.4 * t_s);
            phi_d = amp * (0.2 * t_s - std::floor(0.2 * t_s + 0.5));
            break;
    }
}

JointAngles inverse_kinematics(double r_d, double phi_d, double L1, double L2,
                               IkVariant variant) {
    const double lo = std::abs(L1 - L2);
    const double hi = L1 + L2;
    if (r_d < lo - 1e-12 || r_d > hi + 1e-12) {
        throw std::invalid_argument("inverse_kinematics: radius out of reach");
    }
    const double arg = (r_d * r_d - L1 * L1 - L2 * L2) / (2.0 * L1 * L2);
    JointAngles ja;
    if (variant == IkVariant::Arctan) {
        ja.theta2 = std::atan(arg);
    } else {
        ja.theta2 = std::acos(std::clamp(arg, -1.0, 1.0));
    }
    ja.theta1 = phi_d - std::atan(L2 * std::sin(ja.theta2) /
                                  (L1 + L2 * std::cos(ja.theta2)));
    return ja;
}

PolarPoint forward_kinematics(double theta1, double theta2, double L1, double L2,
                              double v1_tip, double v2_tip) {
    const double c1 = std::cos(theta1), s1 = std::sin(theta1);
    const double c12 = std::cos(theta1 + theta2), s12 = std::sin(theta1 + theta2);
    const double px = L1 * c1 - v1_tip * s1 + L2 * c12 - v2_tip * s12;
    const double py = L1 * s1 + v1_tip * c1 + L2 * s12 + v2_tip * c12;
    PolarPoint p;
    p.r = std::hypot(px, py);
    p.phi = std::atan2(py, px);
    return p;
}

double ik_radius_residual(double r_d, double phi_d, double L1, double L2,
                          IkVariant variant) {
    const JointAngles ja = inverse_kinematics(r_d, phi_d, L1, L2, variant);
    return std::abs(forward_kinematics(ja.theta1, ja.theta2, L1, L2).r - r_d);
}

TwoLinkReferenceGenerator::TwoLinkReferenceGenerator(const PolarProfile& polar, double wn,
                                                     double zeta, double time_scale,
                                                     IkVariant variant)
    : polar_(polar), variant_(variant), wn_(wn), zeta_(zeta), time_scale_(time_scale) {
    refresh_raw();
    const JointAngles ja = inverse_kinematics(r_d_, phi_d_, polar_.L1_star,
                                              polar_.L2_star, variant_);
    y1_ = ja.theta1;
    y2_ = ja.theta2;
}

void TwoLinkReferenceGenerator::refresh_raw() { polar_.eval(t_, r_d_, phi_d_); }

void TwoLinkReferenceGenerator::rk4(double& y, double& yd, double dt, double u0,
                                    double um, double u1) {
    auto acc = [&](double u, double yy, double yv) {
        return wn_ * wn_ * (u - yy) - 2.0 * zeta_ * wn_ * yv;
    };
    const double k1y = yd, k1v = acc(u0, y, yd);
    const double k2y = yd + 0.5 * dt * k1v, k2v = acc(um, y + 0.5 * dt * k1y, yd + 0.5 * dt * k1v);
    const double k3y = yd + 0.5 * dt * k2v, k3v = acc(um, y + 0.5 * dt * k2y, yd + 0.5 * dt * k2v);
    const double k4y = yd + dt * k3v, k4v = acc(u1, y + dt * k3y, yd + dt * k3v);
    y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    yd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

void TwoLinkReferenceGenerator::advance_seconds(double dt_s) {
    double r0, p0, rm, pm, r1v, p1v;
    polar_.eval(t_, r0, p0);
    polar_.eval(t_ + 0.5 * dt_s, rm, pm);
    polar_.eval(t_ + dt_s, r1v, p1v);
    const JointAngles j0 = inverse_kinematics(r0, p0, polar_.L1_star, polar_.L2_star, variant_);
    const JointAngles jm = inverse_kinematics(rm, pm, polar_.L1_star, polar_.L2_star, variant_);
    const JointAngles j1 = inverse_kinematics(r1v, p1v, polar_.L1_star, polar_.L2_star, variant_);
    rk4(y1_, yd1_, dt_s, j0.theta1, jm.theta1, j1.theta1);
    rk4(y2_, yd2_, dt_s, j0.theta2, jm.theta2, j1.theta2);
    t_ += dt_s;
    refresh_raw();
}

void TwoLinkReferenceGenerator::warm_up(double period_s) {
    const int steps = 4000;
    const double dt = period_s / steps;
    t_ = -period_s;
    refresh_raw();
    const JointAngles ja = inverse_kinematics(r_d_, phi_d_, polar_.L1_star,
                                              polar_.L2_star, variant_);
    y1_ = ja.theta1;
    y2_ = ja.theta2;
    yd1_ = yd2_ = 0.0;
    for (int i = 0; i < steps; ++i) advance_seconds(dt);
    t_ = 0.0;
    refresh_raw();
}

void TwoLinkReferenceGenerator::advance_dimensionless(double dt_dim) {
    advance_seconds(dt_dim / time_scale_);
}

ReferenceSample TwoLinkReferenceGenerator::joint1() const {
    ReferenceSample s;
    const JointAngles ja = inverse_kinematics(r_d_, phi_d_, polar_.L1_star,
                                              polar_.L2_star, variant_);
    s.raw = ja.theta1;
    s.theta_d = y1_;
    s.theta_dot_d = yd1_ / time_scale_;
    s.theta_ddot_d = (wn_ * wn_ * (s.raw - y1_) - 2.0 * zeta_ * wn_ * yd1_) /
                     (time_scale_ * time_scale_);
    return s;
}

ReferenceSample TwoLinkReferenceGenerator::joint2() const {
    ReferenceSample s;
    const JointAngles ja = inverse_kinematics(r_d_, phi_d_, polar_.L1_star,
                                              polar_.L2_star, variant_);
    s.raw = ja.theta2;
    s.theta_d = y2_;
    s.theta_dot_d = yd2_ / time_scale_;
    s.theta_ddot_d = (wn_ * wn_ * (s.raw - y2_) - 2.0 * zeta_ * wn_ * yd2_) /
                     (time_scale_ * time_scale_);
    return s;
}

double TwoLinkReferenceGenerator::fk_residual() const {
    return ik_radius_residual(r_d_, phi_d_, polar_.L1_star, polar_.L2_star, variant_);
}

}  // namespace flexbeam
