// Scenario orchestration: closed-loop runs, metrics, Lyapunov monitoring,
// decay fitting, and CSV/JSON export.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexbeam/control.hpp"
#include "flexbeam/gains.hpp"
#include "flexbeam/kernels.hpp"
#include "flexbeam/observer.hpp"
#include "flexbeam/params.hpp"
#include "flexbeam/plant.hpp"
#include "flexbeam/trajectory.hpp"

namespace flexbeam {

enum class ControllerType { BacksteppingSF, BacksteppingOF, LqrFF, None };

enum class ScenarioReferenceKind {
    Zero,
    Sinusoid,
    Square,
    Sawtooth,
    PolarSinusoid,
    PolarSquare,
    PolarSawtooth,
};

struct ControllerConfig {
    ControllerType type = ControllerType::BacksteppingOF;
    double c_acute = 0.5;
    std::array<double, 2> state_poles{-2.0, -2.5};
    std::array<double, 2> observer_poles{-6.0, -7.5};
    std::array<double, 4> lqr_q_diag{1.0, 1.0, 1.0, 1.0};
    double lqr_r = 1.0;
};

struct ScenarioReference {
    ScenarioReferenceKind kind = ScenarioReferenceKind::Zero;
    double amplitude = 0.0;
    double frequency_hz = 0.2;
    double wn_factor = 20.0;
    double zeta = 0.9;
};

struct InitialConditions {
    double xi_amp = 0.0;   ///< xi0(x) = amp sin(pi x)
    double eta_amp = 0.0;  ///< eta0(x) = amp cos(pi x), then shifted admissible
    std::array<double, 2> X0{0.0, 0.0};
};

struct Scenario {
    std::vector<std::string> link_paths;
    std::vector<PhysicalParams> links;  ///< resolved configs
    int grid_n = 256;
    double horizon_s = 31.0;
    double time_scale = 18.0;  ///< dimensionless time units per second
    ControllerConfig controller;
    ScenarioReference reference;
    double observer_init = 1.0;
    bool run_observer = false;  ///< force the observer on for SF/None runs
    InitialConditions initial;
    SensorOptions sensors;
    double kernel_tol = 1e-10;
    int kernel_max_iter = 200;
    int max_rows = 4001;
    std::vector<double> snapshot_times;
    std::uint32_t seed = 1;
    double tau_limit = 0.0;  ///< motor torque clamp; 0 disables

    double horizon_dimensionless() const { return horizon_s * time_scale; }
    void validate() const;
};

Scenario scenario_from_json_text(const std::string& text, const std::string& base_dir);
Scenario load_scenario(const std::string& path);
/// Canonical serialization used for the reproducibility hash.
std::string scenario_canonical_text(const Scenario& s);
std::uint64_t fnv1a64(const std::string& text);

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double me = 0.0;
};

/// Standard error statistics of (series - reference).
Metrics metrics(std::span<const double> series, std::span<const double> reference);

struct DecayFit {
    double rate = 0.0;  ///< positive = decaying
    double r2 = 0.0;
};

/// Least-squares line on log(values) over the trailing fraction of the series.
DecayFit decay_fit(std::span<const double> t, std::span<const double> v,
                   double tail_fraction);

struct LyapunovInfo {
    double a_acute = 0.0;
    double h_acute = 0.0;
    double L1_bar = 0.0;
    double G_sup = 0.0;
    double c_min = 0.0;   ///< smallest c_acute satisfying the feasibility window
    bool feasible = false;
};

/// Weighted-energy monitor
///   V1 = sqrt(eps)/2 int e^{-a x} eta^2 + sqrt(eps)/2 int h e^{x} beta^2
///        + beta(1)^2 / 2 + X' P1 X
/// with P1 from the closed-loop Lyapunov equation (Q1 = I) and (a, h) from
/// the feasibility inequalities evaluated on the solved kernel grids.
class LyapunovMonitor {
public:
    LyapunovMonitor(const DimensionlessParams& dp, const ControlKernels& ck,
                    const InverseKernels& ik, const FeedbackGains& fg);

    double value(const RiemannState& s, std::span<const double> beta) const;
    const LyapunovInfo& info() const { return info_; }
    const Eigen::Matrix2d& P1() const { return P1_; }

private:
    DimensionlessParams dp_;
    Eigen::Matrix2d P1_;
    LyapunovInfo info_;
    std::vector<double> wexp_minus_;  // e^{-a x} nodal weights
    std::vector<double> wexp_plus_;   // h e^{x}
};

struct LinkResult {
    // decimated time series
    std::vector<double> t, theta_d, theta_d_raw, dtheta, dtheta_dot;
    std::vector<double> v_tip, w_tip, v_hub, U, tau_m, energy, lyapunov, beta1;
    std::vector<double> omega0, omega_e, omega_a;
    std::vector<double> wx0_true, wx0_hat, wxh_true, wxh_hat, xhat1, xhat2;
    std::vector<double> xi_hat_0, xi_hat_half, xi_hat_1;
    std::vector<double> eta_hat_0, eta_hat_half, eta_hat_1;
    // summary
    Metrics dtheta_m, w_tip_m, v_tip_m, wx0_m, wxh_m;
    double max_abs_U = 0.0;
    double omega0_initial = 0.0, omega0_final = 0.0;
    double omega_e_initial = 0.0, omega_e_final = 0.0;
    double beta_residual_sup = 0.0;   ///< sup_t |d beta(1)/dt + c_acute beta(1)|
    double settling_time = -1.0;      ///< last t with omega0 > 1e-8 omega0(0)
    DecayFit omega0_fit, omega_e_fit;
    LyapunovInfo lyap;
    // full-field snapshots (t, xi, eta)
    std::vector<std::pair<double, std::pair<std::vector<double>, std::vector<double>>>>
        snapshots;
};

struct RobotResult {
    std::vector<double> t, r_ref, phi_ref, r_tip, phi_tip, fk_residual;
    Metrics r_m, phi_m;
};

struct SimResult {
    std::uint64_t scenario_hash = 0;
    double dt = 0.0;
    long long steps = 0;
    std::vector<LinkResult> links;
    std::optional<RobotResult> robot;
};

SimResult run_scenario(const Scenario& s);

/// Writes link<i>_series.csv, robot.csv, summary.json, manifest.json and
/// snapshot CSVs into out_dir (created if missing).
void export_result(const SimResult& r, const Scenario& s, const std::string& out_dir);

/// Omega0 = |dtheta|^2 + |dtheta_dot|^2 + H1(xi)^2 + H1(eta)^2 + |X|^2.
double omega0_norm(const RiemannState& s);

}  // namespace flexbeam
