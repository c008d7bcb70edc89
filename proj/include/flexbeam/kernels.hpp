// Backstepping kernel solvers on triangular domains.
//
// Control kernels (k, l, gamma):
//   k_x = -k_y - (b^2/2) cosh(b(x-y)) + (b^2/2) I[k+l](x,y)
//   l_x = +l_y + (b^2/2) cosh(b(x-y)) - (b^2/2) I[k+l](x,y)
//   gamma_x = sqrt(eps) gamma A - l(x,0) C
//   k(x,0) = -l(x,0) - sqrt(eps) gamma(x) B,   l(x,x) = 0,   gamma(0) = -K
// with I[w](x,y) = integral_y^x cosh(b(z-y)) w(x,z) dz.
//
// Observer kernels (psi, phi), stored on the same lower triangle y <= x
// (their boundary data psi(1,y) = -phi(1,y), the diagonal condition
// phi(x,x) = 0, and the output-injection gains psi(x,0), phi(x,0) all
// live there). The signs below are fixed by requiring that the transformed
// error fields obey the cascade
//   sqrt(eps) alpha~_t = -alpha~_x - int_0^x S11 alpha~,
//   sqrt(eps) beta~_t  =  beta~_x  - int_0^x S21 alpha~,
// with no residual beta~ coupling:
//   phi_x - phi_y =  (b^2/2) cosh(b(x-y)) + (b^2/2) J[psi-phi](x,y)
//   psi_x + psi_y = -(b^2/2) cosh(b(x-y)) - (b^2/2) J[psi-phi](x,y)
// with J[w](x,y) = integral_y^x cosh(b(x-z)) w(z,y) dz.
//
// Each family is integrated along its characteristics (trapezoid rule,
// second order) and iterated to a joint fixed point; the nonlocal
// integrals use the previous iterate. Inverse kernels are obtained
// directly from the composition identity (second-kind Volterra
// equations, solved by marching without iteration):
//   rho(x,z)   = k(x,z) + integral_z^x rho(x,y) k(y,z) dy
//   sigma(x,z) = l(x,z) + integral_z^x rho(x,y) l(y,z) dy
//   lambda(x)  = gamma(x) + integral_0^x rho(x,y) gamma(y) dy
#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "flexbeam/grid.hpp"
#include "flexbeam/params.hpp"

namespace flexbeam {

struct KernelSolveOptions {
    int n = 256;
    double tol = 1e-10;   ///< sup-norm change stopping threshold
    int max_iter = 200;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> deltas;  ///< sup-norm change per sweep
};

class KernelConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControlKernels {
    TriangleGrid k;      // Lower
    TriangleGrid l;      // Lower
    std::vector<Eigen::RowVector2d> gamma;
    Eigen::RowVector2d K = Eigen::RowVector2d::Zero();
    double b = 0.0;
    double sqrt_eps = 0.0;
    SolveDiagnostics diag;
    /// |sqrt(eps) gamma(0) B + 2 l(0,0)|, reported (not corrected); the
    /// y = 0 boundary condition wins at the corner.
    double corner_mismatch = 0.0;

    int n() const { return k.n(); }
    double h() const { return k.h(); }
};

struct InverseKernels {
    TriangleGrid rho;    // Lower
    TriangleGrid sigma;  // Lower
    std::vector<Eigen::RowVector2d> lambda;

    int n() const { return rho.n(); }
};

struct ObserverKernels {
    TriangleGrid psi;  // Lower (y <= x)
    TriangleGrid phi;  // Lower
    double b = 0.0;
    SolveDiagnostics diag;

    int n() const { return psi.n(); }
};

struct ControlResidualReport {
    double k_eq = 0.0;      ///< sup interior residual of the k equation
    double l_eq = 0.0;
    double gamma_eq = 0.0;
    double bc_k = 0.0;      ///< sup |k(x,0) + l(x,0) + sqrt(eps) gamma(x) B|
    double bc_l_diag = 0.0; ///< sup |l(x,x)|
    double bc_gamma = 0.0;  ///< |gamma(0) + K|
    double corner_mismatch = 0.0;

    double max_eq() const { return std::max({k_eq, l_eq, gamma_eq}); }
};

struct ObserverResidualReport {
    double phi_eq = 0.0;
    double psi_eq = 0.0;
    double bc_phi_diag = 0.0;  ///< sup |phi(x,x)|
    double bc_psi_edge = 0.0;  ///< sup |psi(1,y) + phi(1,y)|

    double max_eq() const { return std::max(phi_eq, psi_eq); }
};

ControlKernels solve_control_kernels(const DimensionlessParams& dp,
                                     const Eigen::RowVector2d& K,
                                     const KernelSolveOptions& opt = {});

ObserverKernels solve_observer_kernels(const DimensionlessParams& dp,
                                       const KernelSolveOptions& opt = {});

InverseKernels solve_inverse_kernels(const ControlKernels& ck);

ControlResidualReport control_kernel_residual(const ControlKernels& ck,
                                              const DimensionlessParams& dp);
ObserverResidualReport observer_kernel_residual(const ObserverKernels& ok);

enum class Axis { X, Y };

/// Finite-difference derivative of a lower-triangle grid sampled along the
/// x = 1 row, 2nd order where the stencil fits. Requires n >= 8.
std::vector<double> kernel_derivative(const TriangleGrid& g, Axis which);

}  // namespace flexbeam
