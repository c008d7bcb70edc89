#include "flexbeam/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbeam {

TriangleGrid::TriangleGrid(int n, Domain tag) : n_(n), h_(1.0 / n), tag_(tag) {
    if (n < 1) throw std::invalid_argument("TriangleGrid: n must be >= 1");
    v_.assign(static_cast<std::size_t>(n + 1) * (n + 2) / 2, 0.0);
}

std::size_t TriangleGrid::index(int i, int j) const {
    // Lower: row i holds j = 0..i. Upper: column j holds i = 0..j; map by swap.
    int r = (tag_ == Domain::Lower) ? i : j;
    int c = (tag_ == Domain::Lower) ? j : i;
    return static_cast<std::size_t>(r) * (r + 1) / 2 + c;
}

double TriangleGrid::max_abs_diff(const TriangleGrid& a, const TriangleGrid& b) {
    if (a.n_ != b.n_ || a.tag_ != b.tag_) {
        throw std::invalid_argument("TriangleGrid: shape mismatch");
    }
    double m = 0.0;
    for (std::size_t k = 0; k < a.v_.size(); ++k) {
        m = std::max(m, std::abs(a.v_[k] - b.v_[k]));
    }
    return m;
}

double TriangleGrid::max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

bool TriangleGrid::all_finite() const {
    for (double x : v_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double trapz(std::span<const double> f, double h) {
    const int n = static_cast<int>(f.size()) - 1;
    if (n < 1) return 0.0;
    double s = 0.5 * (f[0] + f[n]);
    for (int j = 1; j < n; ++j) s += f[j];
    return s * h;
}

double trapz_range(std::span<const double> f, int j0, int j1, double h) {
    if (j1 <= j0) return 0.0;
    double s = 0.5 * (f[j0] + f[j1]);
    for (int j = j0 + 1; j < j1; ++j) s += f[j];
    return s * h;
}

void trapz_prefix(std::span<const double> f, double h, std::span<double> out) {
    out[0] = 0.0;
    for (std::size_t j = 1; j < f.size(); ++j) {
        out[j] = out[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
    }
}

CoshConvolver::CoshConvolver(int n, double b)
    : n_(n), h_(1.0 / n), b_(b), ch_(n + 1), sh_(n + 1), pc_(n + 1), ps_(n + 1) {
    for (int j = 0; j <= n; ++j) {
        ch_[j] = std::cosh(b * j * h_);
        sh_[j] = std::sinh(b * j * h_);
    }
}

void CoshConvolver::apply(std::span<const double> f, std::span<double> out) const {
    // prefix trapezoids of cosh(by) f(y) and sinh(by) f(y)
    pc_[0] = 0.0;
    ps_[0] = 0.0;
    for (int j = 1; j <= n_; ++j) {
        pc_[j] = pc_[j - 1] + 0.5 * h_ * (ch_[j - 1] * f[j - 1] + ch_[j] * f[j]);
        ps_[j] = ps_[j - 1] + 0.5 * h_ * (sh_[j - 1] * f[j - 1] + sh_[j] * f[j]);
    }
    for (int i = 0; i <= n_; ++i) {
        out[i] = ch_[i] * pc_[i] - sh_[i] * ps_[i];
    }
}

void CoshConvolver::apply_sinh(std::span<const double> f, std::span<double> out) const {
    pc_[0] = 0.0;
    ps_[0] = 0.0;
    for (int j = 1; j <= n_; ++j) {
        pc_[j] = pc_[j - 1] + 0.5 * h_ * (ch_[j - 1] * f[j - 1] + ch_[j] * f[j]);
        ps_[j] = ps_[j - 1] + 0.5 * h_ * (sh_[j - 1] * f[j - 1] + sh_[j] * f[j]);
    }
    for (int i = 0; i <= n_; ++i) {
        out[i] = sh_[i] * pc_[i] - ch_[i] * ps_[i];
    }
}

double l2_norm_sq(std::span<const double> f, double h) {
    const int n = static_cast<int>(f.size()) - 1;
    double s = 0.5 * (f[0] * f[0] + f[n] * f[n]);
    for (int j = 1; j < n; ++j) s += f[j] * f[j];
    return s * h;
}

void fd_derivative(std::span<const double> f, double h, std::span<double> out) {
    const int n = static_cast<int>(f.size()) - 1;
    if (n < 2) throw std::invalid_argument("fd_derivative: need at least 3 nodes");
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (int j = 1; j < n; ++j) out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    out[n] = (3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2]) / (2.0 * h);
}

double h1_norm_sq(std::span<const double> f, double h) {
    std::vector<double> d(f.size());
    fd_derivative(f, h, d);
    return l2_norm_sq(f, h) + l2_norm_sq(d, h);
}

}  // namespace flexbeam
