#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "flexbeam/params.hpp"

using namespace flexbeam;

namespace {

PhysicalParams table_link1() {
    return load_params(std::string(FLEXBEAM_DATA_DIR) + "/quanser_link1.json");
}

}  // namespace

TEST_CASE("nondimensionalize reproduces hand-computed link-1 values") {
    const PhysicalParams p = table_link1();
    const DimensionlessParams d = nondimensionalize(p);

    // independent arithmetic straight from the config numbers
    CHECK(d.R == doctest::Approx(0.085 / 0.195).epsilon(1e-14));
    CHECK(d.A == doctest::Approx(9.677e-5 / (0.195 * 0.195)).epsilon(1e-14));
    const double L4 = std::pow(0.195, 4);
    CHECK(d.I == doctest::Approx(1.873e-7 / L4).epsilon(1e-14));
    CHECK(d.G == doctest::Approx(77.5e9 * L4 / (200e9 * 1.873e-7)).epsilon(1e-14));
    const double w02 = 1797.07 * 1797.07;
    CHECK(d.J == doctest::Approx(0.01 * w02).epsilon(1e-14));
    CHECK(d.c == doctest::Approx(-4.0 * 1797.07).epsilon(1e-14));
    CHECK(d.m ==
          doctest::Approx(1.57 * 0.195 * w02 / (200e9 * 1.873e-7)).epsilon(1e-14));
    CHECK(d.rho ==
          doctest::Approx(7833.0 * std::pow(0.195, 6) * w02 / (200e9 * 1.873e-7))
              .epsilon(1e-14));
}

TEST_CASE("derived quantities satisfy their defining identities") {
    const DimensionlessParams d = nondimensionalize(table_link1());
    CHECK(std::abs(d.b * d.b * d.epsilon - d.a) <= 1e-14 * d.a);
    // b = sqrt(A k' G) after cancelling rho
    CHECK(d.b == doctest::Approx(std::sqrt(d.A * d.k_prime * d.G)).epsilon(1e-12));
    CHECK(d.epsilon > 0.0);
    CHECK(d.mu > 0.0);  // reported, the design sets it to zero
}

TEST_CASE("length scaling exponents") {
    PhysicalParams p = table_link1();
    const DimensionlessParams d1 = nondimensionalize(p);
    p.L_star *= 2.0;
    const DimensionlessParams d2 = nondimensionalize(p);
    CHECK(d2.R / d1.R == doctest::Approx(0.5).epsilon(1e-13));       // L^-1
    CHECK(d2.A / d1.A == doctest::Approx(0.25).epsilon(1e-13));      // L^-2
    CHECK(d2.I / d1.I == doctest::Approx(1.0 / 16).epsilon(1e-13));  // L^-4
    CHECK(d2.G / d1.G == doctest::Approx(16.0).epsilon(1e-13));      // L^4
    CHECK(d2.rho / d1.rho == doctest::Approx(64.0).epsilon(1e-13));  // L^6
    CHECK(d2.m / d1.m == doctest::Approx(2.0).epsilon(1e-13));       // L^1
    CHECK(d2.J == d1.J);
    CHECK(d2.c == d1.c);
}

TEST_CASE("config round trip is bit-identical") {
    const PhysicalParams p = table_link1();
    const std::string text = params_to_json_text(p);
    const PhysicalParams q = params_from_json_text(text);
    CHECK(std::memcmp(&p.E_star, &q.E_star, sizeof(double)) == 0);
    CHECK(p.c_star == q.c_star);
    CHECK(p.omega0_star == q.omega0_star);
    CHECK(params_to_json_text(q) == text);
}

TEST_CASE("config rejection paths") {
    // an empty file means every key is missing, not a syntax failure
    CHECK_THROWS_WITH_AS(params_from_json_text(""), doctest::Contains("missing key"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(params_from_json_text("{}"), doctest::Contains("missing key"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(params_from_json_text("{not json"),
                         doctest::Contains("parse failure"), std::invalid_argument);

    std::string text = params_to_json_text(table_link1());
    SUBCASE("negative modulus names the field") {
        auto pos = text.find("\"E_star\":");
        text.replace(pos, text.find(',', pos) - pos, "\"E_star\": -1.0");
        CHECK_THROWS_WITH_AS(params_from_json_text(text), doctest::Contains("E_star"),
                             std::invalid_argument);
    }
    SUBCASE("unknown keys are rejected") {
        text.insert(1, "\"extra_key\": 1,");
        CHECK_THROWS_WITH_AS(params_from_json_text(text), doctest::Contains("unknown key"),
                             std::invalid_argument);
    }
    SUBCASE("k_prime above one rejected") {
        auto pos = text.find("\"k_prime\":");
        text.replace(pos, text.find(',', pos) - pos, "\"k_prime\": 1.5");
        CHECK_THROWS_AS(params_from_json_text(text), std::invalid_argument);
    }
}

TEST_CASE("negative joint damping is preserved, not normalized") {
    const DimensionlessParams d = nondimensionalize(table_link1());
    CHECK(d.c < 0.0);
}
