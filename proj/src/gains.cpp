#include "flexbeam/gains.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbeam {

namespace {

void require_conjugate_closed(std::complex<double> p1, std::complex<double> p2,
                              const char* what) {
    if (p1.real() >= 0.0 || p2.real() >= 0.0) {
        throw std::invalid_argument(std::string(what) +
                                    ": requested poles must have negative real parts");
    }
    const double imag_sum = std::abs((p1 + p2).imag());
    const double imag_prod = std::abs((p1 * p2).imag());
    if (imag_sum > 1e-12 || imag_prod > 1e-12) {
        throw std::invalid_argument(std::string(what) +
                                    ": poles must be real or a conjugate pair");
    }
}

}  // namespace

Eigen::RowVector2d place_state_gain(const DimensionlessParams& dp,
                                    std::complex<double> p1,
                                    std::complex<double> p2) {
    require_conjugate_closed(p1, p2, "place_state_gain");
    const double se = dp.sqrt_eps();
    const double m = dp.m;
    if (!(m > 0.0) || !(se > 0.0)) {
        throw std::invalid_argument("place_state_gain: uncontrollable pair (m, eps must be > 0)");
    }
    const double s = (p1 + p2).real();
    const double q = (p1 * p2).real();
    // char poly of A + B K is  z^2 - ((k1 - sqrt(eps))/m) z - k2/m
    Eigen::RowVector2d K;
    K << se + m * s, -m * q;
    return K;
}

namespace {

// W(z) = int_z^1 (k(1,y) + l(1,y)) cosh(b(y-z)) dy via prefix splitting
std::vector<double> boundary_row_convolution(const ControlKernels& ck, double b) {
    const int n = ck.n();
    const double h = ck.h();
    std::vector<double> ch(n + 1), sh(n + 1), sc(n + 1), ss(n + 1), W(n + 1);
    for (int j = 0; j <= n; ++j) {
        ch[j] = std::cosh(b * j * h);
        sh[j] = std::sinh(b * j * h);
    }
    // suffix trapezoids of cosh(by) w(y), sinh(by) w(y) with w = k(1,.) + l(1,.)
    sc[n] = 0.0;
    ss[n] = 0.0;
    for (int j = n - 1; j >= 0; --j) {
        const double w0 = ck.k.at(n, j) + ck.l.at(n, j);
        const double w1 = ck.k.at(n, j + 1) + ck.l.at(n, j + 1);
        sc[j] = sc[j + 1] + 0.5 * h * (ch[j] * w0 + ch[j + 1] * w1);
        ss[j] = ss[j + 1] + 0.5 * h * (sh[j] * w0 + sh[j + 1] * w1);
    }
    for (int z = 0; z <= n; ++z) {
        // cosh(b(y - z)) = cosh(by) cosh(bz) - sinh(by) sinh(bz)
        W[z] = ch[z] * sc[z] - sh[z] * ss[z];
    }
    return W;
}

}  // namespace

HGains compute_h_gains(const ControlKernels& ck, const InverseKernels& ik,
                       const DimensionlessParams& dp) {
    if (ik.n() != ck.n()) throw std::invalid_argument("compute_h_gains: grid mismatch");
    const int n = ck.n();
    const double h = ck.h();
    const double se = dp.sqrt_eps();
    const double b = dp.b;
    const double cJ = dp.c / dp.J;
    const double b2h = 0.5 * b * b;
    const StateMatrices sm = state_matrices(dp);

    HGains g;
    g.h1 = cJ - ck.k.at(n, n) / se;
    g.h2 = (ck.gamma[n] * sm.B)(0, 0) + ck.k.at(n, 0) / se;
    g.h3 = cJ;
    g.h4 = -ck.l.at(n, 0) / se;

    const std::vector<double> W = boundary_row_convolution(ck, b);
    const std::vector<double> k_y1 = kernel_derivative(ck.k, Axis::Y);
    const std::vector<double> l_y1 = kernel_derivative(ck.l, Axis::Y);
    std::vector<double> F_xi(n + 1), F_eta(n + 1);
    for (int j = 0; j <= n; ++j) {
        F_xi[j] = k_y1[j] / se - (b2h / se) * W[j];
        F_eta[j] = -l_y1[j] / se + (b2h / se) * W[j];
    }

    // h5 = gamma(1) A - h1 lambda(1) + h2 K - int F_xi(y) lambda(y) dy
    {
        Eigen::RowVector2d intFlam = Eigen::RowVector2d::Zero();
        for (int j = 0; j <= n; ++j) {
            intFlam += trap_weight(j, n) * F_xi[j] * ik.lambda[j];
        }
        intFlam *= h;
        g.h5 = ck.gamma[n] * sm.A - g.h1 * ik.lambda[n] + g.h2 * ck.K - intFlam;
    }

    // H6(z) = F_xi(z) + h1 rho(1,z) + int_z^1 F_xi(y) rho(y,z) dy
    // H7(z) = F_eta(z) + h1 sigma(1,z) + int_z^1 F_xi(y) sigma(y,z) dy
    g.H6.assign(n + 1, 0.0);
    g.H7.assign(n + 1, 0.0);
    std::vector<double> wr(n + 1), ws(n + 1);
    for (int z = 0; z <= n; ++z) {
        for (int y = z; y <= n; ++y) {
            wr[y] = F_xi[y] * ik.rho.at(y, z);
            ws[y] = F_xi[y] * ik.sigma.at(y, z);
        }
        g.H6[z] = F_xi[z] + g.h1 * ik.rho.at(n, z) + trapz_range(wr, z, n, h);
        g.H7[z] = F_eta[z] + g.h1 * ik.sigma.at(n, z) + trapz_range(ws, z, n, h);
    }

    // Theta: reference-acceleration forcing of the boundary trace
    {
        std::vector<double> w(n + 1);
        for (int j = 0; j <= n; ++j) {
            w[j] = (ck.k.at(n, j) + ck.l.at(n, j)) * (1.0 + dp.R - j * h);
        }
        g.Theta = (ck.gamma[n] * sm.D)(0, 0) + se * trapz(w, h);
    }
    return g;
}

FeedbackGains compute_n_gains(const ControlKernels& ck, const InverseKernels& ik,
                              const DimensionlessParams& dp, const HGains& hg,
                              double c_acute) {
    if (!(c_acute > 0.0)) throw std::invalid_argument("compute_n_gains: c_acute must be > 0");
    (void)ik;
    {
        // reject destabilizing gains; the marginal integrator of the K = 0
        // degenerate case is allowed (analytic oracle configurations)
        const StateMatrices smc = state_matrices(dp);
        const Eigen::Matrix2d Acl = smc.A + smc.B * ck.K;
        const Eigen::EigenSolver<Eigen::Matrix2d> es(Acl);
        if (es.eigenvalues()(0).real() > 1e-12 || es.eigenvalues()(1).real() > 1e-12) {
            throw std::invalid_argument("compute_n_gains: A + B K has an unstable eigenvalue");
        }
    }
    const int n = ck.n();
    const double h = ck.h();
    const double se = dp.sqrt_eps();
    const double b = dp.b;
    const double b2h = 0.5 * b * b;
    const double mu = dp.J / (2.0 * se * dp.R);
    const StateMatrices sm = state_matrices(dp);

    FeedbackGains fg;
    fg.c_acute = c_acute;
    fg.K = ck.K;
    fg.hg = hg;
    fg.n = n;
    fg.h = h;

    const double ch1 = c_acute + hg.h1;
    fg.n1 = -mu * ch1;
    fg.n2 = -mu * hg.h3;
    fg.n4 = -mu * (hg.h2 - hg.h4);
    fg.n5 = -mu / se;

    // int_0^1 H6(y) gamma(y) dy
    Eigen::RowVector2d H6gamma = Eigen::RowVector2d::Zero();
    {
        std::vector<double> w(n + 1);
        for (int c = 0; c < 2; ++c) {
            for (int j = 0; j <= n; ++j) w[j] = hg.H6[j] * ck.gamma[j](c);
            H6gamma(c) = trapz(w, h);
        }
    }
    fg.n3 = -mu * (ch1 * ck.gamma[n] - hg.h2 * ck.K + hg.h4 * sm.C + hg.h5 + H6gamma);

    // N6(z) = mu [ (c'+h1) k(1,z) + (b^2/2 sqrt(eps)) cosh(b(1-z)) - H6(z)
    //              + int_z^1 H6(y) k(y,z) dy ]
    // N7(z) = mu [ (c'+h1) l(1,z) - (b^2/2 sqrt(eps)) cosh(b(1-z)) - H7(z)
    //              + int_z^1 H6(y) l(y,z) dy ]
    fg.N6.assign(n + 1, 0.0);
    fg.N7.assign(n + 1, 0.0);
    std::vector<double> wk(n + 1), wl(n + 1);
    for (int z = 0; z <= n; ++z) {
        for (int m = z; m <= n; ++m) {
            wk[m] = hg.H6[m] * ck.k.at(m, z);
            wl[m] = hg.H6[m] * ck.l.at(m, z);
        }
        const double ik6 = trapz_range(wk, z, n, h);
        const double il6 = trapz_range(wl, z, n, h);
        const double chz = std::cosh(b * (n - z) * h);
        fg.N6[z] = mu * (ch1 * ck.k.at(n, z) + (b2h / se) * chz - hg.H6[z] + ik6);
        fg.N7[z] = mu * (ch1 * ck.l.at(n, z) - (b2h / se) * chz - hg.H7[z] + il6);
    }

    fg.n_ff = mu * (-se * dp.R - hg.Theta);

    // G(x) = sqrt(eps) gamma(x) D - int_0^x (k - l)(x, y) dy
    fg.G_fun.assign(n + 1, 0.0);
    {
        std::vector<double> row(n + 1);
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= i; ++j) row[j] = ck.k.at(i, j) - ck.l.at(i, j);
            fg.G_fun[i] = se * (ck.gamma[i] * sm.D)(0, 0) - trapz_range(row, 0, i, h);
        }
    }
    return fg;
}

FeedbackGains synthesize_feedback_gains(const ControlKernels& ck,
                                        const InverseKernels& ik,
                                        const DimensionlessParams& dp,
                                        double c_acute) {
    const HGains hg = compute_h_gains(ck, ik, dp);
    return compute_n_gains(ck, ik, dp, hg, c_acute);
}

PrintedGainSet printed_gain_set(const ControlKernels& ck, const InverseKernels& ik,
                                const DimensionlessParams& dp, double c_acute) {
    const int n = ck.n();
    const double h = ck.h();
    const double se = dp.sqrt_eps();
    const double b = dp.b;
    const double cJ = dp.c / dp.J;
    const double b2h = 0.5 * b * b;
    const StateMatrices sm = state_matrices(dp);
    const TriangleGrid& rho = ik.rho;
    const TriangleGrid& sig = ik.sigma;
    const Eigen::RowVector2d lam1 = ik.lambda[n];

    PrintedGainSet p;
    p.h1 = cJ - rho.at(n, n) / se;
    p.h2 = rho.at(n, 0) / se + (lam1 * sm.B)(0, 0);
    p.h3 = sig.at(n, n) / se + cJ;
    p.h4 = -sig.at(n, 0) / se;
    {
        CoshConvolver conv(n, b);
        std::vector<double> comp(n + 1), w(n + 1);
        Eigen::RowVector2d dbl = Eigen::RowVector2d::Zero();
        for (int c = 0; c < 2; ++c) {
            for (int j = 0; j <= n; ++j) comp[j] = ik.lambda[j](c);
            conv.apply(comp, w);
            for (int j = 0; j <= n; ++j) w[j] *= sig.at(n, j);
            dbl(c) = trapz(w, h);
        }
        p.h5 = -(b2h / se) * dbl - cJ * lam1 + lam1 * (sm.A + sm.B * ck.K);
    }
    const std::vector<double> rho_y1 = kernel_derivative(rho, Axis::Y);
    const std::vector<double> sig_y1 = kernel_derivative(sig, Axis::Y);
    p.H6.assign(n + 1, 0.0);
    p.H7.assign(n + 1, 0.0);
    {
        std::vector<double> ch(n + 1), sh(n + 1), pc(n + 1), ps(n + 1);
        for (int j = 0; j <= n; ++j) {
            ch[j] = std::cosh(b * j * h);
            sh[j] = std::sinh(b * j * h);
        }
        std::vector<double> f6(n + 1), f7(n + 1);
        for (int j = 0; j <= n; ++j) {
            pc[j] = 0.0;
            ps[j] = 0.0;
            for (int m = j + 1; m <= n; ++m) {
                pc[m] = pc[m - 1] +
                        0.5 * h * (ch[m - 1] * sig.at(m - 1, j) + ch[m] * sig.at(m, j));
                ps[m] = ps[m - 1] +
                        0.5 * h * (sh[m - 1] * sig.at(m - 1, j) + sh[m] * sig.at(m, j));
            }
            for (int m = j; m <= n; ++m) {
                const double inner = ch[m] * (pc[m] - pc[j]) - sh[m] * (ps[m] - ps[j]);
                const double chzy = std::cosh(b * (m - j) * h);
                f6[m] = (inner + chzy) * sig.at(n, m);
                f7[m] = (inner - chzy) * sig.at(n, m);
            }
            p.H6[j] = -(b2h / se) * trapz_range(f6, j, n, h) + cJ * rho.at(n, j) +
                      rho_y1[j] / se;
            p.H7[j] = -(b2h / se) * trapz_range(f7, j, n, h) - sig_y1[j] / se +
                      cJ * sig.at(n, j);
        }
    }
    const double pre = 1.0 / (2.0 * se * dp.R);
    p.n1 = -pre * (c_acute + p.h1);
    p.n2 = -pre * p.h3;
    p.n4 = -(p.h2 - p.h4) / (2.0 * dp.epsilon * dp.R);
    p.n5 = -1.0 / (2.0 * dp.epsilon * dp.R);
    Eigen::RowVector2d H7gamma = Eigen::RowVector2d::Zero();
    std::vector<double> w(n + 1);
    for (int c = 0; c < 2; ++c) {
        for (int j = 0; j <= n; ++j) w[j] = p.H7[j] * ck.gamma[j](c);
        H7gamma(c) = trapz(w, h);
    }
    p.n3 = -pre * ((c_acute + p.h1) * ck.gamma[n] + p.h2 * ck.gamma[0] + p.h4 * sm.C +
                   p.h5 + H7gamma);
    return p;
}

ObserverGains compute_observer_gains(const ObserverKernels& ok,
                                     const DimensionlessParams& dp,
                                     std::complex<double> p1,
                                     std::complex<double> p2) {
    require_conjugate_closed(p1, p2, "compute_observer_gains");
    const int n = ok.n();
    ObserverGains og;
    og.Gamma_xi.assign(n + 1, 0.0);
    og.Gamma_eta.assign(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        og.Gamma_xi[i] = ok.psi.at(i, 0);
        og.Gamma_eta[i] = ok.phi.at(i, 0);
    }
    // (A, C) sees only the tip velocity: one assignable eigenvalue. The
    // first requested pole goes there; the invariant position direction is
    // decoupled by the second component.
    const double se = dp.sqrt_eps();
    const double target = p1.real();
    og.L(0) = (-target - se / dp.m) / (2.0 * se);
    og.L(1) = 1.0 / (2.0 * se);
    og.observable_pole = -se / dp.m - 2.0 * se * og.L(0);
    og.structural_zero = true;
    return og;
}

Eigen::Matrix2d solve_lyapunov_2x2(const Eigen::Matrix2d& M, const Eigen::Matrix2d& Q) {
    Eigen::EigenSolver<Eigen::Matrix2d> es(M);
    if (es.eigenvalues()(0).real() >= 0.0 || es.eigenvalues()(1).real() >= 0.0) {
        throw std::invalid_argument("solve_lyapunov_2x2: M must be Hurwitz");
    }
    Eigen::Matrix3d S;
    Eigen::Vector3d rhs;
    // unknowns (p11, p12, p22); PM + M'P = -Q
    S << 2.0 * M(0, 0), 2.0 * M(1, 0), 0.0,
         M(0, 1), M(0, 0) + M(1, 1), M(1, 0),
         0.0, 2.0 * M(0, 1), 2.0 * M(1, 1);
    rhs << -Q(0, 0), -Q(0, 1), -Q(1, 1);
    const Eigen::Vector3d p = S.fullPivLu().solve(rhs);
    Eigen::Matrix2d P;
    P << p(0), p(1), p(1), p(2);
    return P;
}

namespace {

// dense Lyapunov solve M'P + PM = -W by Kronecker vectorization
Eigen::MatrixXd solve_lyapunov_dense(const Eigen::MatrixXd& M, const Eigen::MatrixXd& W) {
    const int n = static_cast<int>(M.rows());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n * n, n * n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                // vec(M'P): (M' ox I); vec(PM): (I ox M')
                S(i * n + j, k * n + j) += M(k, i);
                S(i * n + j, i * n + k) += M(k, j);
            }
        }
    }
    Eigen::VectorXd w(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) w(i * n + j) = -W(i, j);
    }
    const Eigen::VectorXd p = S.fullPivLu().solve(w);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) P(i, j) = p(i * n + j);
    }
    return 0.5 * (P + P.transpose());
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                     const Eigen::MatrixXd& Q, double r, const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd res =
        A.transpose() * P + P * A - P * B * B.transpose() * P / r + Q;
    return res.cwiseAbs().maxCoeff();
}

}  // namespace

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                           const Eigen::MatrixXd& Q, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("solve_care: control weight must be > 0");
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd Qr = 0.5 * (Q + Q.transpose());
    Qr += 1e-10 * Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = A;
    H.topRightCorner(n, n) = -(B * B.transpose()) / r;
    H.bottomLeftCorner(n, n) = -Qr;
    H.bottomRightCorner(n, n) = -A.transpose();

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.cast<std::complex<double>>());
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_care: eigensolver failed");

    Eigen::MatrixXcd U1(n, n), U2(n, n);
    int found = 0;
    for (int i = 0; i < 2 * n && found < n; ++i) {
        if (es.eigenvalues()(i).real() < 0.0) {
            U1.col(found) = es.eigenvectors().col(i).head(n);
            U2.col(found) = es.eigenvectors().col(i).tail(n);
            ++found;
        }
    }
    if (found != n) throw std::runtime_error("solve_care: stable subspace defective");
    const Eigen::MatrixXcd Pc = U2 * U1.fullPivLu().inverse();
    Eigen::MatrixXd P = Pc.real();
    P = 0.5 * (P + P.transpose());

    // Newton-Kleinman refinement; the eigenvector solution can lose digits
    // when the control channel is weak and the Hamiltonian is near-defective
    const double scale = std::max(1.0, Qr.cwiseAbs().maxCoeff());
    double best = care_residual(A, B, Qr, r, P);
    for (int it = 0; it < 30 && best > 1e-12 * std::max(scale, P.cwiseAbs().maxCoeff());
         ++it) {
        const Eigen::RowVectorXd K = -(B.transpose() * P) / r;
        const Eigen::MatrixXd Acl = A + B * K;
        Eigen::EigenSolver<Eigen::MatrixXd> ecl(Acl);
        bool stable = true;
        for (int i = 0; i < n; ++i) {
            if (ecl.eigenvalues()(i).real() >= 0.0) stable = false;
        }
        if (!stable) break;
        const Eigen::MatrixXd W = Qr + K.transpose() * K * r;
        const Eigen::MatrixXd Pn = solve_lyapunov_dense(Acl, W);
        const double rn = care_residual(A, B, Qr, r, Pn);
        if (!(rn < best)) break;
        P = Pn;
        best = rn;
    }
    if (best > 1e-6 * std::max(scale, P.cwiseAbs().maxCoeff())) {
        throw std::runtime_error("solve_care: residual too large, no convergence");
    }
    return P;
}

LqrGains lqr_feedforward_gains(const DimensionlessParams& dp,
                               const Eigen::Matrix4d& state_weight,
                               double control_weight) {
    // surrogate on (dtheta, dtheta_dot, q, q_dot), q = v(0,t): the joint ODE
    // plus the tip-mass equation closed with the quasi-static unit-length
    // restoring slope v_x(0) = -q.
    LqrGains lg;
    const double cJ = dp.c / dp.J;
    const double oR = 1.0 + dp.R;
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A(0, 1) = 1.0;
    A(1, 1) = cJ;
    A(2, 3) = 1.0;
    A(3, 0) = -1.0 / dp.m;
    A(3, 1) = -oR * cJ;
    A(3, 2) = -1.0 / dp.m;
    Eigen::Vector4d B;
    B << 0.0, 1.0 / dp.J, 0.0, -oR / dp.J;

    const Eigen::MatrixXd P = solve_care(A, B, state_weight, control_weight);
    const Eigen::RowVector4d Kfb = -(B.transpose() * P) / control_weight;

    lg.k1 = Kfb(0);
    lg.k2 = Kfb(1);
    lg.k3 = Kfb(2);
    lg.k4 = Kfb(3);
    // error coordinates plus the torque-recovery feedforward already give
    // zero steady-state joint error for constant references
    lg.k5 = 0.0;
    lg.k6 = 0.0;
    lg.P = P;
    lg.A_surrogate = A;
    lg.B_surrogate = B;
    return lg;
}

}  // namespace flexbeam
