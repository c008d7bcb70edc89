// flexbeam command-line interface.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flexbeam/control.hpp"
#include "flexbeam/gains.hpp"
#include "flexbeam/harness.hpp"
#include "flexbeam/kernels.hpp"
#include "flexbeam/params.hpp"
#include "flexbeam/verify.hpp"

namespace {

using flexbeam::ControllerType;
using json = nlohmann::ordered_json;

std::string default_out_dir() {
    const char* env = std::getenv("FLEXBEAM_OUT_DIR");
    return env ? env : "out";
}

void dump_kernel_csv(const flexbeam::TriangleGrid& g, const std::string& path) {
    std::ofstream out(path);
    out << "x,y,value\n";
    char buf[128];
    for (int i = 0; i <= g.n(); ++i) {
        for (int j = 0; j <= i; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", g.x(i), g.y(j),
                          g.at(i, j));
            out << buf;
        }
    }
}

json row2_json(const Eigen::RowVector2d& r) { return json::array({r(0), r(1)}); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-control toolkit for slender flexible link-joints"};
    app.require_subcommand(1);

    // params show
    auto* params_cmd = app.add_subcommand("params", "parameter utilities");
    params_cmd->require_subcommand(1);
    auto* params_show = params_cmd->add_subcommand("show", "print physical and dimensionless sets");
    std::string link_path;
    params_show->add_option("--link", link_path, "link config JSON")->required();

    // kernels solve
    auto* kernels_cmd = app.add_subcommand("kernels", "kernel solvers");
    kernels_cmd->require_subcommand(1);
    auto* kernels_solve = kernels_cmd->add_subcommand("solve", "solve and dump all kernels");
    std::string k_link;
    int k_n = 256;
    double k_tol = 1e-10;
    std::string k_out = default_out_dir();
    std::vector<double> k_poles{-2.0, -2.5};
    kernels_solve->add_option("--link", k_link)->required();
    kernels_solve->add_option("--n", k_n, "grid subdivisions");
    kernels_solve->add_option("--tol", k_tol, "fixed-point stop tolerance");
    kernels_solve->add_option("--out", k_out, "output directory");
    kernels_solve->add_option("--poles", k_poles, "state-gain poles")->expected(2);

    // gains synth
    auto* gains_cmd = app.add_subcommand("gains", "gain synthesis");
    gains_cmd->require_subcommand(1);
    auto* gains_synth = gains_cmd->add_subcommand("synth", "synthesize and report all gains");
    std::string g_link;
    double g_cacute = 0.5;
    int g_n = 256;
    std::vector<double> g_poles{-2.0, -2.5};
    std::vector<double> g_obs_poles{-6.0, -7.5};
    std::string g_out;
    gains_synth->add_option("--link", g_link)->required();
    gains_synth->add_option("--c-acute", g_cacute, "boundary damping design parameter");
    gains_synth->add_option("--poles", g_poles)->expected(2);
    gains_synth->add_option("--observer-poles", g_obs_poles)->expected(2);
    gains_synth->add_option("--n", g_n);
    gains_synth->add_option("--out", g_out, "write the JSON report here (default stdout)");

    // run
    auto* run_cmd = app.add_subcommand("run", "run a closed-loop scenario");
    std::string r_scenario, r_out = default_out_dir(), r_controller;
    run_cmd->add_option("--scenario", r_scenario)->required();
    run_cmd->add_option("--out", r_out);
    run_cmd->add_option("--controller", r_controller,
                        "override: backstepping-sf | backstepping-of | lqr-ff | none");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep over scenario copies");
    std::string s_scenario, s_param, s_out = default_out_dir();
    sweep_cmd->add_option("--scenario", s_scenario)->required();
    sweep_cmd->add_option("--param", s_param, "e.g. c_acute=0.1,0.3,0.5")->required();
    sweep_cmd->add_option("--out", s_out);

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
    std::string v_data = "data", v_out = "acceptance_out";
    bool v_quick = false;
    verify_cmd->add_option("--data-dir", v_data);
    verify_cmd->add_option("--out", v_out);
    verify_cmd->add_flag("--quick", v_quick, "reduced grids and horizons");

    CLI11_PARSE(app, argc, argv);

    try {
        if (params_show->parsed()) {
            const flexbeam::PhysicalParams p = flexbeam::load_params(link_path);
            const flexbeam::DimensionlessParams d = flexbeam::nondimensionalize(p);
            std::cout << "physical:\n" << flexbeam::params_to_json_text(p);
            json jd;
            jd["A"] = d.A; jd["I"] = d.I; jd["R"] = d.R; jd["G"] = d.G;
            jd["rho"] = d.rho; jd["J"] = d.J; jd["c"] = d.c; jd["m"] = d.m;
            jd["epsilon"] = d.epsilon; jd["mu"] = d.mu; jd["a"] = d.a; jd["b"] = d.b;
            jd["sqrt_eps"] = d.sqrt_eps();
            jd["slender_note"] = "mu is reported but the design sets mu = 0";
            std::cout << "dimensionless:\n" << jd.dump(2) << "\n";
        } else if (kernels_solve->parsed()) {
            const auto p = flexbeam::load_params(k_link);
            const auto dp = flexbeam::nondimensionalize(p);
            flexbeam::KernelSolveOptions kopt;
            kopt.n = k_n;
            kopt.tol = k_tol;
            const Eigen::RowVector2d K = flexbeam::place_state_gain(
                dp, {k_poles[0], 0.0}, {k_poles[1], 0.0});
            const auto ck = flexbeam::solve_control_kernels(dp, K, kopt);
            const auto ik = flexbeam::solve_inverse_kernels(ck);
            const auto ok = flexbeam::solve_observer_kernels(dp, kopt);
            namespace fs = std::filesystem;
            fs::create_directories(k_out);
            dump_kernel_csv(ck.k, (fs::path(k_out) / "kernel_k.csv").string());
            dump_kernel_csv(ck.l, (fs::path(k_out) / "kernel_l.csv").string());
            dump_kernel_csv(ik.rho, (fs::path(k_out) / "kernel_rho.csv").string());
            dump_kernel_csv(ik.sigma, (fs::path(k_out) / "kernel_sigma.csv").string());
            dump_kernel_csv(ok.psi, (fs::path(k_out) / "kernel_psi.csv").string());
            dump_kernel_csv(ok.phi, (fs::path(k_out) / "kernel_phi.csv").string());
            {
                std::ofstream g((fs::path(k_out) / "kernel_gamma_lambda.csv").string());
                g << "x,gamma1,gamma2,lambda1,lambda2\n";
                char buf[160];
                for (int i = 0; i <= ck.n(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                                  ck.k.x(i), ck.gamma[i](0), ck.gamma[i](1),
                                  ik.lambda[i](0), ik.lambda[i](1));
                    g << buf;
                }
            }
            const auto rep = flexbeam::control_kernel_residual(ck, dp);
            const auto orep = flexbeam::observer_kernel_residual(ok);
            std::cout << "control kernels converged in " << ck.diag.iterations
                      << " sweeps (delta " << ck.diag.final_delta << ")\n"
                      << "residuals: k " << rep.k_eq << ", l " << rep.l_eq << ", gamma "
                      << rep.gamma_eq << ", corner " << rep.corner_mismatch << "\n"
                      << "observer kernels: " << ok.diag.iterations << " sweeps, residuals "
                      << orep.phi_eq << " / " << orep.psi_eq << "\n"
                      << "wrote kernel CSVs to " << k_out << "\n";
        } else if (gains_synth->parsed()) {
            const auto p = flexbeam::load_params(g_link);
            const auto dp = flexbeam::nondimensionalize(p);
            flexbeam::KernelSolveOptions kopt;
            kopt.n = g_n;
            const Eigen::RowVector2d K = flexbeam::place_state_gain(
                dp, {g_poles[0], 0.0}, {g_poles[1], 0.0});
            const auto ck = flexbeam::solve_control_kernels(dp, K, kopt);
            const auto ik = flexbeam::solve_inverse_kernels(ck);
            const auto fg = flexbeam::synthesize_feedback_gains(ck, ik, dp, g_cacute);
            const auto ok = flexbeam::solve_observer_kernels(dp, kopt);
            const auto og = flexbeam::compute_observer_gains(
                ok, dp, {g_obs_poles[0], 0.0}, {g_obs_poles[1], 0.0});
            const auto eq = flexbeam::u_equivalence_check(ck, ik, fg, dp, 50, 11);
            json j;
            j["c_acute"] = g_cacute;
            j["K"] = row2_json(fg.K);
            j["h"] = {{"h1", fg.hg.h1}, {"h2", fg.hg.h2}, {"h3", fg.hg.h3},
                      {"h4", fg.hg.h4}, {"h5", row2_json(fg.hg.h5)},
                      {"Theta", fg.hg.Theta}};
            j["H6"] = fg.hg.H6;
            j["H7"] = fg.hg.H7;
            j["n"] = {{"n1", fg.n1}, {"n2", fg.n2}, {"n3", row2_json(fg.n3)},
                      {"n4", fg.n4}, {"n5", fg.n5}, {"n_ff", fg.n_ff}};
            j["N6"] = fg.N6;
            j["N7"] = fg.N7;
            j["G_fun"] = fg.G_fun;
            j["observer"] = {{"L", {og.L(0), og.L(1)}},
                             {"observable_pole", og.observable_pole},
                             {"structural_zero", og.structural_zero},
                             {"Gamma_xi", og.Gamma_xi},
                             {"Gamma_eta", og.Gamma_eta}};
            j["equivalence_check"] = {{"max_rel_err", eq.max_rel_err},
                                      {"samples", eq.samples}};
            j["printed_form_for_reference"] = {{"n1", eq.printed.n1},
                                               {"n2", eq.printed.n2},
                                               {"n3", row2_json(eq.printed.n3)},
                                               {"n4", eq.printed.n4},
                                               {"n5", eq.printed.n5}};
            if (g_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::ofstream(g_out) << j.dump(2) << "\n";
                std::cout << "wrote gain report to " << g_out << "\n";
            }
        } else if (run_cmd->parsed()) {
            flexbeam::Scenario s = flexbeam::load_scenario(r_scenario);
            if (!r_controller.empty()) {
                if (r_controller == "backstepping-sf") s.controller.type = ControllerType::BacksteppingSF;
                else if (r_controller == "backstepping-of") s.controller.type = ControllerType::BacksteppingOF;
                else if (r_controller == "lqr-ff") s.controller.type = ControllerType::LqrFF;
                else if (r_controller == "none") s.controller.type = ControllerType::None;
                else throw std::invalid_argument("unknown controller: " + r_controller);
            }
            const auto result = flexbeam::run_scenario(s);
            flexbeam::export_result(result, s, r_out);
            std::cout << "scenario done: " << result.steps << " steps at dt " << result.dt
                      << ", wrote " << r_out << "\n";
        } else if (sweep_cmd->parsed()) {
            const auto eq_pos = s_param.find('=');
            if (eq_pos == std::string::npos) {
                throw std::invalid_argument("--param must look like name=v1,v2,...");
            }
            const std::string name = s_param.substr(0, eq_pos);
            std::vector<double> values;
            std::stringstream vs(s_param.substr(eq_pos + 1));
            for (std::string tok; std::getline(vs, tok, ',');) values.push_back(std::stod(tok));
            if (name != "c_acute") {
                throw std::invalid_argument("sweep supports: c_acute");
            }
            for (double v : values) {
                flexbeam::Scenario s = flexbeam::load_scenario(s_scenario);
                s.controller.c_acute = v;
                const auto result = flexbeam::run_scenario(s);
                std::ostringstream dir;
                dir << s_out << "/" << name << "_" << v;
                flexbeam::export_result(result, s, dir.str());
                std::cout << name << " = " << v << ": settling "
                          << result.links[0].settling_time << ", max|U| "
                          << result.links[0].max_abs_U << "\n";
            }
        } else if (verify_cmd->parsed()) {
            flexbeam::VerifyOptions vo;
            vo.data_dir = v_data;
            vo.out_dir = v_out;
            vo.quick = v_quick;
            return flexbeam::acceptance_main(vo, std::cout) == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
