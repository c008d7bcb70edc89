// Reference generation and two-link planar kinematics.
//
// Raw waveforms (sinusoid / square / sawtooth, and the polar tip profiles)
// are generated exactly, then passed through a second-order smoothing
// filter so the tracked reference has bounded first and second derivatives;
// filter derivatives come from the filter ODE, not from differencing.
// Profiles are defined in seconds; rates convert to dimensionless time by
// the profile's time_scale.
#pragma once

#include <cstdint>
#include <vector>

namespace flexbeam {

enum class ReferenceKind {
    Zero,
    Sinusoid,
    Square,
    Sawtooth,
};

struct ReferenceProfile {
    ReferenceKind kind = ReferenceKind::Zero;
    double amplitude = 0.0;      ///< rad (peak)
    double frequency_hz = 0.0;
    double wn_factor = 20.0;     ///< smoothing cutoff = wn_factor * 2 pi f
    double zeta = 0.9;
    double time_scale = 18.0;    ///< dimensionless time units per second
};

struct ReferenceSample {
    double theta_d = 0.0;
    double theta_dot_d = 0.0;   ///< per dimensionless time
    double theta_ddot_d = 0.0;  ///< per dimensionless time squared
    double raw = 0.0;           ///< unsmoothed waveform value
};

/// Raw waveform value at t seconds.
double raw_reference(const ReferenceProfile& p, double t_s);

/// Stateful smoothed-reference generator; advance in time order.
class ReferenceGenerator {
public:
    explicit ReferenceGenerator(const ReferenceProfile& p);

    /// Integrate the smoothing filter over one waveform period (or the
    /// filter settling time, whichever is longer) ending at t = 0.
    void warm_up();

    void advance_seconds(double dt_s);
    void advance_dimensionless(double dt_dim) { advance_seconds(dt_dim / p_.time_scale); }

    double t_seconds() const { return t_; }
    ReferenceSample sample_seconds() const;
    ReferenceSample sample_dimensionless() const;

private:
    void rk4(double dt, double u0, double um, double u1);

    ReferenceProfile p_;
    double wn_ = 0.0, zeta_ = 0.0;
    double y_ = 0.0, yd_ = 0.0;
    double t_ = 0.0;
};

/// Convenience: warmed generator advanced to dimensionless time t.
ReferenceSample theta_ref(const ReferenceProfile& p, double t_dim,
                          double dt_dim = 1e-3);

// --- two-link polar tip profiles ---

enum class PolarKind { Sinusoid, Square, Sawtooth };

struct PolarProfile {
    PolarKind kind = PolarKind::Sinusoid;
    double L1_star = 0.195;
    double L2_star = 0.195;

    double r1() const;  ///< (L1+L2)(2+sqrt(3))/4
    double r2() const;  ///< (L1+L2)(2-sqrt(3))/4
    void eval(double t_s, double& r_d, double& phi_d) const;
};

enum class IkVariant { Arctan, Arccos };

struct JointAngles {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// Inverse kinematics of the two-link chain; the Arctan variant evaluates
///   theta2 = arctan((r^2 - L1^2 - L2^2) / (2 L1 L2))
/// as published (its forward-kinematics residual is reported rather than
/// corrected); Arccos uses the law-of-cosines angle.
JointAngles inverse_kinematics(double r_d, double phi_d, double L1, double L2,
                               IkVariant variant = IkVariant::Arctan);

struct PolarPoint {
    double r = 0.0;
    double phi = 0.0;
};

/// Planar chain composition; optional per-link transverse tip deflections
/// (expressed in each link's moving frame, same length units as L1/L2).
PolarPoint forward_kinematics(double theta1, double theta2, double L1, double L2,
                              double v1_tip = 0.0, double v2_tip = 0.0);

/// |fk_r(ik(r, phi)) - r| for the given variant.
double ik_radius_residual(double r_d, double phi_d, double L1, double L2,
                          IkVariant variant);

/// Per-joint smoothed references for a polar tip profile: exact polar
/// waveform -> printed inverse kinematics -> per-joint smoothing filters.
class TwoLinkReferenceGenerator {
public:
    TwoLinkReferenceGenerator(const PolarProfile& polar, double wn, double zeta,
                              double time_scale, IkVariant variant = IkVariant::Arctan);

    void warm_up(double period_s);
    void advance_dimensionless(double dt_dim);

    ReferenceSample joint1() const;
    ReferenceSample joint2() const;
    double r_d() const { return r_d_; }
    double phi_d() const { return phi_d_; }
    double fk_residual() const;  ///< arctan-variant radius residual at current t

private:
    void refresh_raw();
    void rk4(double& y, double& yd, double dt, double u0, double um, double u1);
    void advance_seconds(double dt_s);

    PolarProfile polar_;
    IkVariant variant_;
    double wn_, zeta_, time_scale_;
    double t_ = 0.0;
    double r_d_ = 0.0, phi_d_ = 0.0;
    double y1_ = 0.0, yd1_ = 0.0, y2_ = 0.0, yd2_ = 0.0;
};

}  // namespace flexbeam
