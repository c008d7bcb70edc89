#include "flexbeam/kernels.hpp"

#include <cmath>
#include <sstream>

namespace flexbeam {

namespace {

// cosh/sinh tables at node coordinates and node differences
struct HyperTables {
    std::vector<double> ch, sh;    // cosh(b x_j), sinh(b x_j)
    std::vector<double> chd;       // cosh(b d h), d = node difference
    double b2h = 0.0;              // b^2 / 2

    HyperTables(int n, double b) : ch(n + 1), sh(n + 1), chd(n + 1), b2h(0.5 * b * b) {
        const double h = 1.0 / n;
        for (int j = 0; j <= n; ++j) {
            ch[j] = std::cosh(b * j * h);
            sh[j] = std::sinh(b * j * h);
            chd[j] = std::cosh(b * j * h);
        }
    }
};

// I[w](x_i, y_j) = integral_{y_j}^{x_i} cosh(b(z - y_j)) w(x_i, z) dz for a
// row-indexed integrand w(x, z); trapezoid via prefix splitting.
class RowConvolution {
public:
    RowConvolution(int n) : n_(n), h_(1.0 / n), pc_(n + 1), ps_(n + 1) {}

    // Load row i of (g1 + g2) as the integrand.
    void load_row_sum(const TriangleGrid& g1, const TriangleGrid& g2, int i,
                      const HyperTables& t) {
        i_ = i;
        pc_[0] = 0.0;
        ps_[0] = 0.0;
        double wprev = g1.at(i, 0) + g2.at(i, 0);
        for (int m = 1; m <= i; ++m) {
            const double w = g1.at(i, m) + g2.at(i, m);
            pc_[m] = pc_[m - 1] + 0.5 * h_ * (t.ch[m - 1] * wprev + t.ch[m] * w);
            ps_[m] = ps_[m - 1] + 0.5 * h_ * (t.sh[m - 1] * wprev + t.sh[m] * w);
            wprev = w;
        }
    }

    double eval(int j, const HyperTables& t) const {
        return t.ch[j] * (pc_[i_] - pc_[j]) - t.sh[j] * (ps_[i_] - ps_[j]);
    }

private:
    int n_;
    double h_;
    int i_ = 0;
    std::vector<double> pc_, ps_;
};

// J[w](x_i, y_j) = integral_{y_j}^{x_i} cosh(b(x_i - z)) w(z, y_j) dz for a
// column-indexed integrand w(z, y).
class ColConvolution {
public:
    ColConvolution(int n) : n_(n), h_(1.0 / n), qc_(n + 1), qs_(n + 1) {}

    // Load column j of (g1 - g2) as the integrand; z runs j..n.
    void load_col_diff(const TriangleGrid& g1, const TriangleGrid& g2, int j,
                       const HyperTables& t) {
        j_ = j;
        qc_[j] = 0.0;
        qs_[j] = 0.0;
        double wprev = g1.at(j, j) - g2.at(j, j);
        for (int m = j + 1; m <= n_; ++m) {
            const double w = g1.at(m, j) - g2.at(m, j);
            qc_[m] = qc_[m - 1] + 0.5 * h_ * (t.ch[m - 1] * wprev + t.ch[m] * w);
            qs_[m] = qs_[m - 1] + 0.5 * h_ * (t.sh[m - 1] * wprev + t.sh[m] * w);
            wprev = w;
        }
    }

    double eval(int i, const HyperTables& t) const {
        return t.ch[i] * (qc_[i] - qc_[j_]) - t.sh[i] * (qs_[i] - qs_[j_]);
    }

private:
    int n_;
    double h_;
    int j_ = 0;
    std::vector<double> qc_, qs_;
};

void validate_options(const KernelSolveOptions& opt) {
    if (opt.n < 8) throw std::invalid_argument("kernel solve: n must be >= 8");
    if (!(opt.tol > 0.0)) throw std::invalid_argument("kernel solve: tol must be > 0");
    if (opt.max_iter < 1) throw std::invalid_argument("kernel solve: max_iter must be >= 1");
}

[[noreturn]] void throw_no_convergence(const char* what, const SolveDiagnostics& d,
                                       double tol) {
    std::ostringstream os;
    os << what << ": no convergence after " << d.iterations
       << " sweeps; last delta = " << d.final_delta << " (tol " << tol << ")";
    if (d.deltas.size() >= 2) {
        const double ratio = d.deltas.back() / d.deltas[d.deltas.size() - 2];
        os << ", last contraction ratio = " << ratio;
    }
    throw KernelConvergenceError(os.str());
}

double gamma_max_abs_diff(const std::vector<Eigen::RowVector2d>& a,
                          const std::vector<Eigen::RowVector2d>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
    }
    return m;
}

}  // namespace

ControlKernels solve_control_kernels(const DimensionlessParams& dp,
                                     const Eigen::RowVector2d& K,
                                     const KernelSolveOptions& opt) {
    validate_options(opt);
    const int n = opt.n;
    const double h = 1.0 / n;
    const double se = dp.sqrt_eps();
    const double b = dp.b;
    const StateMatrices sm = state_matrices(dp);
    const HyperTables tab(n, b);

    ControlKernels ck;
    ck.k = TriangleGrid(n, Domain::Lower);
    ck.l = TriangleGrid(n, Domain::Lower);
    ck.gamma.assign(n + 1, Eigen::RowVector2d::Zero());
    ck.K = K;
    ck.b = b;
    ck.sqrt_eps = se;

    TriangleGrid k_prev = ck.k, l_prev = ck.l;
    TriangleGrid Fk(n, Domain::Lower), Fl(n, Domain::Lower);
    std::vector<Eigen::RowVector2d> gamma_prev(n + 1, Eigen::RowVector2d::Zero());
    RowConvolution conv(n);

    // trapezoid step matrices for gamma_x = sqrt(eps) gamma A - l(x,0) C
    const Eigen::Matrix2d Mplus =
        Eigen::Matrix2d::Identity() + 0.5 * h * se * sm.A;
    const Eigen::Matrix2d Minv =
        (Eigen::Matrix2d::Identity() - 0.5 * h * se * sm.A).inverse();

    for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
        // F grids from the previous iterate
        for (int i = 0; i <= n; ++i) {
            conv.load_row_sum(k_prev, l_prev, i, tab);
            for (int j = 0; j <= i; ++j) {
                const double forcing = tab.b2h * tab.chd[i - j];
                const double nonlocal = tab.b2h * conv.eval(j, tab);
                Fk.at(i, j) = -forcing + nonlocal;
                Fl.at(i, j) = forcing - nonlocal;
            }
        }

        // l: march along x + y = const away from the diagonal l(x,x) = 0.
        for (int i = 0; i <= n; ++i) ck.l.at(i, i) = 0.0;
        for (int i = 1; i <= n; ++i) {
            // first step off the diagonal starts at the characteristic's
            // half-grid diagonal foot, where F_l = b^2/2 exactly
            ck.l.at(i, i - 1) = 0.25 * h * (tab.b2h + Fl.at(i, i - 1));
        }
        for (int i = 2; i <= n; ++i) {
            for (int j = i - 2; j >= 0; --j) {
                ck.l.at(i, j) =
                    ck.l.at(i - 1, j + 1) + 0.5 * h * (Fl.at(i - 1, j + 1) + Fl.at(i, j));
            }
        }

        // gamma: trapezoid march with the fresh l(x,0)
        ck.gamma[0] = -K;
        for (int i = 0; i < n; ++i) {
            const Eigen::RowVector2d rhs =
                ck.gamma[i] * Mplus -
                0.5 * h * (ck.l.at(i, 0) + ck.l.at(i + 1, 0)) * sm.C;
            ck.gamma[i + 1] = rhs * Minv;
        }

        // k: march along x - y = const from the y = 0 boundary data
        for (int i = 0; i <= n; ++i) {
            ck.k.at(i, 0) = -ck.l.at(i, 0) - se * (ck.gamma[i] * sm.B)(0, 0);
        }
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= i; ++j) {
                ck.k.at(i, j) =
                    ck.k.at(i - 1, j - 1) + 0.5 * h * (Fk.at(i - 1, j - 1) + Fk.at(i, j));
            }
        }

        const double delta = std::max({TriangleGrid::max_abs_diff(ck.k, k_prev),
                                       TriangleGrid::max_abs_diff(ck.l, l_prev),
                                       gamma_max_abs_diff(ck.gamma, gamma_prev)});
        ck.diag.iterations = sweep;
        ck.diag.final_delta = delta;
        ck.diag.deltas.push_back(delta);
        if (!ck.k.all_finite() || !ck.l.all_finite()) {
            throw_no_convergence("control kernels diverged", ck.diag, opt.tol);
        }
        if (delta <= opt.tol) {
            ck.corner_mismatch =
                std::abs(se * (ck.gamma[0] * sm.B)(0, 0) + 2.0 * ck.l.at(0, 0));
            return ck;
        }
        k_prev = ck.k;
        l_prev = ck.l;
        gamma_prev = ck.gamma;
    }
    throw_no_convergence("control kernels", ck.diag, opt.tol);
}

ObserverKernels solve_observer_kernels(const DimensionlessParams& dp,
                                       const KernelSolveOptions& opt) {
    validate_options(opt);
    const int n = opt.n;
    const double h = 1.0 / n;
    const double b = dp.b;
    const HyperTables tab(n, b);

    ObserverKernels ok;
    ok.psi = TriangleGrid(n, Domain::Lower);
    ok.phi = TriangleGrid(n, Domain::Lower);
    ok.b = b;

    TriangleGrid psi_prev = ok.psi, phi_prev = ok.phi;
    TriangleGrid Fphi(n, Domain::Lower);  // F_psi = -F_phi
    ColConvolution conv(n);

    for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
        for (int j = 0; j <= n; ++j) {
            conv.load_col_diff(psi_prev, phi_prev, j, tab);
            for (int i = j; i <= n; ++i) {
                Fphi.at(i, j) = tab.b2h * tab.chd[i - j] + tab.b2h * conv.eval(i, tab);
            }
        }

        // phi: march along x + y = const from phi(x,x) = 0
        for (int i = 0; i <= n; ++i) ok.phi.at(i, i) = 0.0;
        for (int i = 1; i <= n; ++i) {
            ok.phi.at(i, i - 1) = 0.25 * h * (tab.b2h + Fphi.at(i, i - 1));
        }
        for (int i = 2; i <= n; ++i) {
            for (int j = i - 2; j >= 0; --j) {
                ok.phi.at(i, j) =
                    ok.phi.at(i - 1, j + 1) + 0.5 * h * (Fphi.at(i - 1, j + 1) + Fphi.at(i, j));
            }
        }

        // psi: march along x - y = const backward from psi(1,y) = -phi(1,y)
        for (int j = 0; j <= n; ++j) ok.psi.at(n, j) = -ok.phi.at(n, j);
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i; j >= 0; --j) {
                ok.psi.at(i, j) =
                    ok.psi.at(i + 1, j + 1) +
                    0.5 * h * (Fphi.at(i + 1, j + 1) + Fphi.at(i, j));
            }
        }

        const double delta = std::max(TriangleGrid::max_abs_diff(ok.phi, phi_prev),
                                      TriangleGrid::max_abs_diff(ok.psi, psi_prev));
        ok.diag.iterations = sweep;
        ok.diag.final_delta = delta;
        ok.diag.deltas.push_back(delta);
        if (!ok.phi.all_finite() || !ok.psi.all_finite()) {
            throw_no_convergence("observer kernels diverged", ok.diag, opt.tol);
        }
        if (delta <= opt.tol) return ok;
        phi_prev = ok.phi;
        psi_prev = ok.psi;
    }
    throw_no_convergence("observer kernels", ok.diag, opt.tol);
}

InverseKernels solve_inverse_kernels(const ControlKernels& ck) {
    const int n = ck.n();
    const double h = ck.h();
    const TriangleGrid& k = ck.k;
    const TriangleGrid& l = ck.l;

    InverseKernels ik;
    ik.rho = TriangleGrid(n, Domain::Lower);
    ik.sigma = TriangleGrid(n, Domain::Lower);
    ik.lambda.assign(n + 1, Eigen::RowVector2d::Zero());

    // rho(x,z) = k(x,z) + integral_z^x rho(x,y) k(y,z) dy: per row, march z
    // downward; the trapezoid node at y = z carries the unknown.
    for (int i = 0; i <= n; ++i) {
        ik.rho.at(i, i) = k.at(i, i);
        for (int j = i - 1; j >= 0; --j) {
            double s = 0.5 * ik.rho.at(i, i) * k.at(i, j);
            for (int m = j + 1; m < i; ++m) s += ik.rho.at(i, m) * k.at(m, j);
            const double pivot = 1.0 - 0.5 * h * k.at(j, j);
            if (std::abs(pivot) < 1e-12) {
                throw KernelConvergenceError(
                    "inverse kernels: singular pivot in the Volterra march");
            }
            ik.rho.at(i, j) = (k.at(i, j) + h * s) / pivot;
        }
    }

    // sigma(x,z) = l(x,z) + integral_z^x rho(x,y) l(y,z) dy, explicit
    for (int i = 0; i <= n; ++i) {
        ik.sigma.at(i, i) = l.at(i, i);
        for (int j = i - 1; j >= 0; --j) {
            double s = 0.5 * (ik.rho.at(i, j) * l.at(j, j) + ik.rho.at(i, i) * l.at(i, j));
            for (int m = j + 1; m < i; ++m) s += ik.rho.at(i, m) * l.at(m, j);
            ik.sigma.at(i, j) = l.at(i, j) + h * s;
        }
    }

    // lambda(x) = gamma(x) + integral_0^x rho(x,y) gamma(y) dy
    for (int i = 0; i <= n; ++i) {
        Eigen::RowVector2d s = Eigen::RowVector2d::Zero();
        if (i > 0) {
            s = 0.5 * (ik.rho.at(i, 0) * ck.gamma[0] + ik.rho.at(i, i) * ck.gamma[i]);
            for (int m = 1; m < i; ++m) s += ik.rho.at(i, m) * ck.gamma[m];
            s *= h;
        }
        ik.lambda[i] = ck.gamma[i] + s;
    }
    return ik;
}

ControlResidualReport control_kernel_residual(const ControlKernels& ck,
                                              const DimensionlessParams& dp) {
    const int n = ck.n();
    const double h = ck.h();
    const double se = ck.sqrt_eps;
    const StateMatrices sm = state_matrices(dp);
    const HyperTables tab(n, ck.b);
    RowConvolution conv(n);

    ControlResidualReport r;
    for (int i = 1; i < n; ++i) {
        conv.load_row_sum(ck.k, ck.l, i, tab);
        for (int j = 1; j <= i - 1; ++j) {
            const double kx = (ck.k.at(i + 1, j) - ck.k.at(i - 1, j)) / (2.0 * h);
            const double ky = (ck.k.at(i, j + 1) - ck.k.at(i, j - 1)) / (2.0 * h);
            const double lx = (ck.l.at(i + 1, j) - ck.l.at(i - 1, j)) / (2.0 * h);
            const double ly = (ck.l.at(i, j + 1) - ck.l.at(i, j - 1)) / (2.0 * h);
            const double forcing = tab.b2h * tab.chd[i - j];
            const double nonlocal = tab.b2h * conv.eval(j, tab);
            r.k_eq = std::max(r.k_eq, std::abs(kx + ky + forcing - nonlocal));
            r.l_eq = std::max(r.l_eq, std::abs(lx - ly - forcing + nonlocal));
        }
    }
    for (int i = 1; i < n; ++i) {
        const Eigen::RowVector2d gd = (ck.gamma[i + 1] - ck.gamma[i - 1]) / (2.0 * h);
        const Eigen::RowVector2d res = gd - se * ck.gamma[i] * sm.A + ck.l.at(i, 0) * sm.C;
        r.gamma_eq = std::max(r.gamma_eq, res.cwiseAbs().maxCoeff());
    }
    for (int i = 0; i <= n; ++i) {
        r.bc_l_diag = std::max(r.bc_l_diag, std::abs(ck.l.at(i, i)));
        r.bc_k = std::max(
            r.bc_k, std::abs(ck.k.at(i, 0) + ck.l.at(i, 0) + se * (ck.gamma[i] * sm.B)(0, 0)));
    }
    r.bc_gamma = (ck.gamma[0] + ck.K).cwiseAbs().maxCoeff();
    r.corner_mismatch = ck.corner_mismatch;
    return r;
}

ObserverResidualReport observer_kernel_residual(const ObserverKernels& ok) {
    const int n = ok.n();
    const double h = ok.psi.h();
    const HyperTables tab(n, ok.b);
    ColConvolution conv(n);

    ObserverResidualReport r;
    // residual needs column convolutions; evaluate column-by-column
    for (int j = 1; j <= n - 1; ++j) {
        conv.load_col_diff(ok.psi, ok.phi, j, tab);
        for (int i = j + 1; i < n; ++i) {
            const double px = (ok.phi.at(i + 1, j) - ok.phi.at(i - 1, j)) / (2.0 * h);
            const double py = (ok.phi.at(i, j + 1) - ok.phi.at(i, j - 1)) / (2.0 * h);
            const double sx = (ok.psi.at(i + 1, j) - ok.psi.at(i - 1, j)) / (2.0 * h);
            const double sy = (ok.psi.at(i, j + 1) - ok.psi.at(i, j - 1)) / (2.0 * h);
            const double F = tab.b2h * tab.chd[i - j] + tab.b2h * conv.eval(i, tab);
            r.phi_eq = std::max(r.phi_eq, std::abs(px - py - F));
            r.psi_eq = std::max(r.psi_eq, std::abs(sx + sy + F));
        }
    }
    for (int i = 0; i <= n; ++i) {
        r.bc_phi_diag = std::max(r.bc_phi_diag, std::abs(ok.phi.at(i, i)));
    }
    for (int j = 0; j <= n; ++j) {
        r.bc_psi_edge = std::max(r.bc_psi_edge, std::abs(ok.psi.at(n, j) + ok.phi.at(n, j)));
    }
    return r;
}

std::vector<double> kernel_derivative(const TriangleGrid& g, Axis which) {
    const int n = g.n();
    if (n < 8) throw std::invalid_argument("kernel_derivative: n too small (need n >= 8)");
    const double h = g.h();
    std::vector<double> out(n + 1);
    if (which == Axis::Y) {
        std::vector<double> row(n + 1);
        for (int j = 0; j <= n; ++j) row[j] = g.at(n, j);
        fd_derivative(row, h, out);
    } else {
        // one-sided d/dx at x = 1; near the corner the stencil leaves the
        // triangle, fall back to first order then linear extrapolation
        for (int j = 0; j <= n - 2; ++j) {
            out[j] = (3.0 * g.at(n, j) - 4.0 * g.at(n - 1, j) + g.at(n - 2, j)) / (2.0 * h);
        }
        out[n - 1] = (g.at(n, n - 1) - g.at(n - 1, n - 1)) / h;
        out[n] = 2.0 * out[n - 1] - out[n - 2];
    }
    return out;
}

}  // namespace flexbeam
