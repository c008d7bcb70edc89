// Triangular grids on the unit square and trapezoid quadrature helpers.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flexbeam {

enum class Domain {
    Lower,  ///< {0 <= y <= x <= 1}
    Upper,  ///< {0 <= x <= y <= 1}
};

/// Nodal values f(x_i, y_j) on a uniform triangular grid, h = 1/n.
/// Storage is row-major over the admissible (i, j) pairs.
class TriangleGrid {
public:
    TriangleGrid() = default;
    TriangleGrid(int n, Domain tag);

    int n() const { return n_; }
    double h() const { return h_; }
    Domain tag() const { return tag_; }

    bool contains(int i, int j) const {
        if (i < 0 || j < 0 || i > n_ || j > n_) return false;
        return tag_ == Domain::Lower ? j <= i : i <= j;
    }

    double& at(int i, int j) { return v_[index(i, j)]; }
    double at(int i, int j) const { return v_[index(i, j)]; }

    double x(int i) const { return i * h_; }
    double y(int j) const { return j * h_; }

    std::size_t size() const { return v_.size(); }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    /// max |a - b| over all nodes; grids must have identical shape.
    static double max_abs_diff(const TriangleGrid& a, const TriangleGrid& b);
    double max_abs() const;
    bool all_finite() const;

private:
    std::size_t index(int i, int j) const;

    int n_ = 0;
    double h_ = 0.0;
    Domain tag_ = Domain::Lower;
    std::vector<double> v_;
};

/// Composite-trapezoid weight of node j on a grid of n+1 nodes.
inline double trap_weight(int j, int n) { return (j == 0 || j == n) ? 0.5 : 1.0; }

/// Trapezoid integral of nodal values f over [0, 1] with spacing h = 1/n.
double trapz(std::span<const double> f, double h);

/// Trapezoid integral of f over the node range [j0, j1].
double trapz_range(std::span<const double> f, int j0, int j1, double h);

/// Prefix trapezoid: out[j] = integral of f over [0, x_j].
void trapz_prefix(std::span<const double> f, double h, std::span<double> out);

/// Convolution with a hyperbolic-cosine kernel by prefix splitting:
///   out[i] = integral_0^{x_i} cosh(b (x_i - y)) f(y) dy.
/// Exactly the composite trapezoid value, computed in O(n) via
/// cosh(b(x-y)) = cosh(bx)cosh(by) - sinh(bx)sinh(by).
class CoshConvolver {
public:
    CoshConvolver(int n, double b);
    void apply(std::span<const double> f, std::span<double> out) const;
    /// Same with a sinh kernel: out[i] = integral_0^{x_i} sinh(b (x_i - y)) f(y) dy.
    void apply_sinh(std::span<const double> f, std::span<double> out) const;
    int n() const { return n_; }

private:
    int n_;
    double h_;
    double b_;
    std::vector<double> ch_;  // cosh(b x_j)
    std::vector<double> sh_;  // sinh(b x_j)
    mutable std::vector<double> pc_, ps_;
};

/// One-dimensional L2 norm squared (trapezoid) of nodal values.
double l2_norm_sq(std::span<const double> f, double h);

/// H1 norm squared: L2 of values plus L2 of the finite-difference derivative
/// (central in the interior, one-sided 2nd order at the ends).
double h1_norm_sq(std::span<const double> f, double h);

/// Finite-difference first derivative of nodal values, 2nd order.
void fd_derivative(std::span<const double> f, double h, std::span<double> out);

}  // namespace flexbeam
