// Physical link-joint parameters and their dimensionless counterparts.
#pragma once

#include <string>

#include <Eigen/Dense>

namespace flexbeam {

/// Measured parameters of one flexible link plus its drive joint.
/// Lengths in meters, moduli in Pa, inertias in SI units. The joint
/// damping coefficient c_star may be negative.
struct PhysicalParams {
    double E_star = 0.0;       ///< Young's modulus [Pa]
    double G_star = 0.0;       ///< shear modulus [Pa]
    double rho_star = 0.0;     ///< density [kg/m^3]
    double A_star = 0.0;       ///< cross-section area [m^2]
    double I_star = 0.0;       ///< area moment of inertia [m^4]
    double k_prime = 0.0;      ///< shear coefficient, in (0, 1]
    double omega0_star = 0.0;  ///< time-scaling constant (first natural frequency)
    double L_star = 0.0;       ///< link length [m]
    double R_star = 0.0;       ///< joint disk radius [m]
    double J_star = 0.0;       ///< joint inertia moment [kg m^2]
    double m_star = 0.0;       ///< tip mass [kg]
    double c_star = 0.0;       ///< joint damping coefficient (signed)
    double Kt = 0.0;           ///< motor torque constant [N m / A]
    double Lw_star = 0.0;      ///< link thickness [m]

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Scale-free parameter set. All simulation, kernel, and gain code works
/// exclusively with these quantities; time is measured in units of
/// 1/omega0_star and lengths in units of L_star.
struct DimensionlessParams {
    double A = 0.0;
    double I = 0.0;
    double R = 0.0;
    double G = 0.0;
    double rho = 0.0;
    double J = 0.0;
    double c = 0.0;
    double m = 0.0;
    double k_prime = 0.0;
    double omega0 = 0.0;   ///< carried through for time conversions
    double Lw = 0.0;       ///< thickness over link length (strain map)
    double Kt = 0.0;

    // derived
    double epsilon = 0.0;  ///< rho / (k' G), square of inverse wave speed
    double mu = 0.0;       ///< rho * I; the slender design sets it to zero
    double a = 0.0;        ///< A * rho
    double b = 0.0;        ///< sqrt(a / epsilon) in-domain coupling strength

    double sqrt_eps() const { return std::sqrt(epsilon); }
};

/// Companion matrices of the tip-mass ODE
///   Xdot = A X + B xi(0,t) + D theta_ddot_d,  X = (w_t(0), w(0))'.
struct StateMatrices {
    Eigen::Matrix2d A;
    Eigen::Vector2d B;
    Eigen::RowVector2d C;
    Eigen::Vector2d D;
};

DimensionlessParams nondimensionalize(const PhysicalParams& p);
StateMatrices state_matrices(const DimensionlessParams& dp);

/// Load/store the structured JSON config (keys mirror the member names).
/// Unknown keys and missing keys are rejected.
PhysicalParams load_params(const std::string& path);
PhysicalParams params_from_json_text(const std::string& text);
std::string params_to_json_text(const PhysicalParams& p);
void save_params(const PhysicalParams& p, const std::string& path);

}  // namespace flexbeam
