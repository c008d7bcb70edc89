// Time-domain simulation of the coupled transport system
//   sqrt(eps) xi_t  =  xi_x  + (b^2/2) int_0^x cosh(b(x-y))(xi - eta) dy - eps(1+R-x) thdd_d
//   sqrt(eps) eta_t = -eta_x + (b^2/2) int_0^x cosh(b(x-y))(xi - eta) dy - eps(1+R-x) thdd_d
//   xi(1,t)  = -eta(1,t) + 2 sqrt(eps) R dtheta_dot
//   eta(0,t) = -xi(0,t) + C X
//   Xdot = A X + B xi(0,t) + D thdd_d,     J dtheta_ddot = c dtheta_dot + U
// plus a second-order wave-equation oracle for the displacement form.
//
// x = 1 is the hub (joint side), x = 0 carries the tip mass. Stepping is
// CFL-exact (dt = sqrt(eps) h) so transport is a node shift; sources use
// the beginning-of-step state with trapezoid weights along characteristics.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "flexbeam/grid.hpp"
#include "flexbeam/params.hpp"

namespace flexbeam {

struct RiemannState {
    std::vector<double> xi;
    std::vector<double> eta;
    Eigen::Vector2d X = Eigen::Vector2d::Zero();  // (w_t(0), w(0))
    double dtheta = 0.0;
    double dtheta_dot = 0.0;
    double t = 0.0;

    int n() const { return static_cast<int>(xi.size()) - 1; }
    static RiemannState zero(int n);
};

struct DisplacementState {
    std::vector<double> w;
    std::vector<double> w_t;
    std::vector<double> Phi;
    double dtheta = 0.0;
    double dtheta_dot = 0.0;
    double t = 0.0;

    int n() const { return static_cast<int>(w.size()) - 1; }
};

struct PhysicalOutputs {
    double dtheta = 0.0;
    double v_tip = 0.0;  ///< transverse displacement at x = 0, moving frame
    double w_tip = 0.0;  ///< tip tracking error (fixed reference frame)
    double v_hub = 0.0;  ///< should vanish for consistent states
};

class RiemannSimulator {
public:
    RiemannSimulator(const DimensionlessParams& dp, int n);

    double dt() const { return dt_; }
    int n() const { return n_; }
    const DimensionlessParams& params() const { return dp_; }

    /// Advance one CFL-exact step. theta_dd is sampled at the step start
    /// and end (stages interpolate linearly).
    void step(RiemannState& s, double U, double theta_dd_begin, double theta_dd_end);

private:
    DimensionlessParams dp_;
    StateMatrices sm_;
    int n_;
    double h_, se_, dt_, b2h_;
    CoshConvolver conv_;
    std::vector<double> S_, diff_, xi_new_, eta_new_;
};

/// One-off step with contract checks (dt must equal sqrt(eps)/n... the
/// CFL-exact value for the grid of s). Wraps RiemannSimulator.
RiemannState step_riemann(const RiemannState& s, double U, double theta_dd,
                          const DimensionlessParams& dp, double dt);

class WaveSimulator {
public:
    /// dt = cfl * sqrt(eps) h, cfl in (0, 1].
    WaveSimulator(const DimensionlessParams& dp, int n, double cfl = 0.5);

    double dt() const { return dt_; }
    void init(const std::vector<double>& w0, const std::vector<double>& v0,
              double dtheta0, double dtheta_dot0, double theta_dd0);
    void step(double U, double theta_dd_begin, double theta_dd_end);

    double t() const { return t_; }
    double dtheta() const { return dtheta_; }
    double dtheta_dot() const { return dtheta_dot_; }
    /// Displacement and velocity at the current time (velocity via a
    /// virtual forward step, centered difference).
    DisplacementState state(double theta_dd) const;

private:
    std::vector<double> accel(const std::vector<double>& w, double theta_dd) const;
    std::vector<double> next_w(double theta_dd) const;

    DimensionlessParams dp_;
    int n_;
    double h_, se_, dt_, t_ = 0.0;
    CoshConvolver conv_;
    std::vector<double> w_prev_, w_curr_;
    double dtheta_ = 0.0, dtheta_dot_ = 0.0;
    double U_last_ = 0.0;
};

DisplacementState step_wave_oracle(const DisplacementState& s, double U,
                                   double theta_dd, const DimensionlessParams& dp,
                                   double dt);

RiemannState riemann_from_displacement(const DisplacementState& ds,
                                       const DimensionlessParams& dp);
DisplacementState displacement_from_riemann(const RiemannState& rs,
                                            const DimensionlessParams& dp);

/// Phi(x) = -b int_0^x sinh(b(x-y)) w_y(y) dy with w_y = (xi - eta)/2.
std::vector<double> reconstruct_phi(const RiemannState& rs, const DimensionlessParams& dp);

PhysicalOutputs physical_outputs(const RiemannState& rs, const DimensionlessParams& dp);

/// 1/4 int (xi^2 + eta^2) dx  =  1/2 int (eps w_t^2 + w_x^2) dx.
double field_energy(const RiemannState& rs);

/// Build a state satisfying the boundary compatibilities: eta is shifted so
/// eta(0) = -xi(0) + C X, dtheta_dot comes from the hub relation, and
/// dtheta from the clamped-hub identity dtheta = [int (xi-eta)/2 + w(0)]/R.
RiemannState make_admissible_state(const DimensionlessParams& dp,
                                   std::vector<double> xi, std::vector<double> eta,
                                   const Eigen::Vector2d& X);

}  // namespace flexbeam
