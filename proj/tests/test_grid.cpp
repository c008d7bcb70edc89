#include <doctest.h>

#include <cmath>
#include <vector>

#include "flexbeam/grid.hpp"

using namespace flexbeam;

TEST_CASE("triangle grid indexing respects the domain tag") {
    TriangleGrid g(8, Domain::Lower);
    CHECK(g.contains(5, 3));
    CHECK_FALSE(g.contains(3, 5));
    TriangleGrid u(8, Domain::Upper);
    CHECK(u.contains(3, 5));
    CHECK_FALSE(u.contains(5, 3));
    g.at(5, 3) = 2.5;
    CHECK(g.at(5, 3) == 2.5);
    CHECK(g.size() == 45);
}

TEST_CASE("cosh convolution matches direct quadrature") {
    const int n = 64;
    const double b = 2.3;
    const double h = 1.0 / n;
    std::vector<double> f(n + 1);
    for (int j = 0; j <= n; ++j) f[j] = std::sin(2.0 * j * h) + 0.3;
    CoshConvolver conv(n, b);
    std::vector<double> got(n + 1);
    conv.apply(f, got);
    for (int i : {0, 1, 7, 32, 64}) {
        std::vector<double> w(i + 1);
        for (int j = 0; j <= i; ++j) w[j] = std::cosh(b * (i - j) * h) * f[j];
        const double expect = trapz_range(w, 0, i, h);
        CHECK(got[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("sinh convolution matches direct quadrature") {
    const int n = 48;
    const double b = 1.7;
    const double h = 1.0 / n;
    std::vector<double> f(n + 1);
    for (int j = 0; j <= n; ++j) f[j] = 1.0 + 0.5 * j * h;
    CoshConvolver conv(n, b);
    std::vector<double> got(n + 1);
    conv.apply_sinh(f, got);
    for (int i : {0, 5, 24, 48}) {
        std::vector<double> w(i + 1);
        for (int j = 0; j <= i; ++j) w[j] = std::sinh(b * (i - j) * h) * f[j];
        CHECK(got[i] == doctest::Approx(trapz_range(w, 0, i, h)).epsilon(1e-12));
    }
}

TEST_CASE("finite differences are exact on quadratics") {
    const int n = 20;
    const double h = 1.0 / n;
    std::vector<double> f(n + 1), d(n + 1);
    for (int j = 0; j <= n; ++j) f[j] = 3.0 * (j * h) * (j * h) - 2.0 * (j * h) + 1.0;
    fd_derivative(f, h, d);
    for (int j = 0; j <= n; ++j) {
        CHECK(d[j] == doctest::Approx(6.0 * j * h - 2.0).epsilon(1e-11));
    }
}

TEST_CASE("H1 norm of a constant equals its L2 norm") {
    std::vector<double> f(33, 1.0);
    CHECK(h1_norm_sq(f, 1.0 / 32) == doctest::Approx(1.0).epsilon(1e-13));
}
