// Boundary observer: a copy of the plant driven by the measured boundary
// values with output-error injection
//   sqrt(eps) xihat_t  =  xihat_x  + source(xihat, etahat) - Gamma_xi(x)  (xihat(0) - xi(0))
//   sqrt(eps) etahat_t = -etahat_x + source(xihat, etahat) - Gamma_eta(x) (xihat(0) - xi(0))
//   xihat(1)  = -etahat(1) + 2 sqrt(eps) R dtheta_dot            (measured rate)
//   etahat(0) = -xi(0) + C X                                     (measured values)
//   Xhat_dot  = A Xhat + B xi(0) + D thdd_d - L (C Xhat - C X)
// plus emulation of the boundary sensing chain: encoder angle, base strain,
// and filtered differentiation.
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "flexbeam/gains.hpp"
#include "flexbeam/grid.hpp"
#include "flexbeam/kernels.hpp"
#include "flexbeam/params.hpp"
#include "flexbeam/plant.hpp"

namespace flexbeam {

struct ObserverState {
    std::vector<double> xi_hat;
    std::vector<double> eta_hat;
    Eigen::Vector2d X_hat = Eigen::Vector2d::Zero();
    double t = 0.0;

    int n() const { return static_cast<int>(xi_hat.size()) - 1; }
    static ObserverState constant_init(int n, double value);
};

struct Measurements {
    // primary signals
    double theta = 0.0;
    double E_b = 0.0;
    // derived per the sensing chain
    double v0 = 0.0;
    double v0_x = 0.0;
    double theta_dot = 0.0;
    double v0_t = 0.0;
    // assembled observer inputs
    double xi0 = 0.0;
    double CX = 0.0;
    double dtheta = 0.0;
    double dtheta_dot = 0.0;
    bool settled = true;  ///< false while the rate filters warm up
};

class ObserverSimulator {
public:
    ObserverSimulator(const DimensionlessParams& dp, int n);
    double dt() const { return dt_; }

    /// One CFL-exact step; measurement samples at the step start and end.
    void step(ObserverState& os, const Measurements& m_begin, const Measurements& m_end,
              const ObserverGains& og, double theta_dd_begin, double theta_dd_end);

private:
    DimensionlessParams dp_;
    StateMatrices sm_;
    int n_;
    double h_, se_, dt_, b2h_;
    CoshConvolver conv_;
    std::vector<double> S_, diff_, xi_new_, eta_new_;
};

ObserverState step_observer(const ObserverState& os, const Measurements& m_begin,
                            const Measurements& m_end, const ObserverGains& og,
                            const DimensionlessParams& dp, double theta_dd, double dt);

/// Second-order low-pass acting as a filtered differentiator,
/// H(s) = wn^2 s / (s^2 + 2 zeta wn s + wn^2), discretized bilinearly.
class FilteredDifferentiator {
public:
    FilteredDifferentiator() = default;
    FilteredDifferentiator(double wn, double zeta, double dt);
    double update(double u);
    void prime(double u0, int settle_samples);
    bool primed() const { return primed_; }

private:
    double b0_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
    double z1_ = 0.0, z2_ = 0.0;
    bool primed_ = false;
};

struct SensorOptions {
    bool emulate_strain = false;   ///< derive v0, v0_x through the strain map
    bool filtered_rates = false;   ///< rates through FilteredDifferentiator
    double wn_factor = 20.0;       ///< filter cutoff as a multiple of the reference rate
    double zeta = 0.9;
    double noise_theta = 0.0;      ///< additive Gaussian std-dev (0 = off)
    double noise_strain = 0.0;
    std::uint32_t seed = 1;
};

/// Sensing chain from plant state to observer measurements. Holds the
/// filter states; call measure() once per simulation step in time order.
class SensorRig {
public:
    SensorRig(const DimensionlessParams& dp, const SensorOptions& opt, double dt,
              double reference_rate);

    Measurements measure(const RiemannState& rs, double theta_d, double theta_dot_d);

private:
    double gauss(double sigma);

    DimensionlessParams dp_;
    SensorOptions opt_;
    FilteredDifferentiator theta_filter_, v0_filter_;
    int warmup_left_ = 0;
    bool first_ = true;
    std::uint32_t rng_ = 1;
    std::optional<double> spare_gauss_;
};

struct ObserverErrorNorm {
    double total = 0.0;   ///< H1(xi)^2 + H1(eta)^2 + |X|^2
    double xi_h1 = 0.0;
    double eta_h1 = 0.0;
    double X_sq = 0.0;
};

ObserverErrorNorm observer_error_norm(const ObserverState& os, const RiemannState& rs);

/// Map error fields to the cascade coordinates: solve
/// beta~ + int_0^x psi(x,y) beta~(y) dy = xi~ (second-kind Volterra) and
/// alpha~ = eta~ - int_0^x phi(x,y) beta~(y) dy.
void error_target_transform(const std::vector<double>& xi_err,
                            const std::vector<double>& eta_err,
                            const ObserverKernels& ok, std::vector<double>& alpha_out,
                            std::vector<double>& beta_out);

/// Cascade couplings: S21(x,y) = (b^2/2) cosh(b(x-y)) + int_y^x psi(x,z) S21(z,y) dz
/// and S11(x,y) = (b^2/2) cosh(b(x-y)) + int_y^x phi(x,z) S21(z,y) dz.
TriangleGrid compute_S21(const ObserverKernels& ok);
TriangleGrid compute_S11(const ObserverKernels& ok, const TriangleGrid& S21);

}  // namespace flexbeam
