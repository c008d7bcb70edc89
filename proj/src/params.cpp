#include "flexbeam/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace flexbeam {

namespace {

using json = nlohmann::ordered_json;

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("invalid parameter ") + name +
                                    ": must be strictly positive and finite");
    }
}

struct Field {
    const char* name;
    double PhysicalParams::* member;
    bool must_be_positive;
};

// c_star is signed by design; everything else must be positive.
constexpr Field kFields[] = {
    {"E_star", &PhysicalParams::E_star, true},
    {"G_star", &PhysicalParams::G_star, true},
    {"rho_star", &PhysicalParams::rho_star, true},
    {"A_star", &PhysicalParams::A_star, true},
    {"I_star", &PhysicalParams::I_star, true},
    {"k_prime", &PhysicalParams::k_prime, true},
    {"omega0_star", &PhysicalParams::omega0_star, true},
    {"L_star", &PhysicalParams::L_star, true},
    {"R_star", &PhysicalParams::R_star, true},
    {"J_star", &PhysicalParams::J_star, true},
    {"m_star", &PhysicalParams::m_star, true},
    {"c_star", &PhysicalParams::c_star, false},
    {"Kt", &PhysicalParams::Kt, true},
    {"Lw_star", &PhysicalParams::Lw_star, true},
};

}  // namespace

void PhysicalParams::validate() const {
    for (const Field& f : kFields) {
        double v = this->*(f.member);
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string("invalid parameter ") + f.name +
                                        ": not finite");
        }
        if (f.must_be_positive) require_positive(v, f.name);
    }
    if (k_prime > 1.0) {
        throw std::invalid_argument("invalid parameter k_prime: must be in (0, 1]");
    }
}

DimensionlessParams nondimensionalize(const PhysicalParams& p) {
    p.validate();
    DimensionlessParams d;
    const double L = p.L_star;
    const double L2 = L * L;
    const double L4 = L2 * L2;
    const double EI = p.E_star * p.I_star;
    const double w0 = p.omega0_star;
    const double w02 = w0 * w0;

    d.A = p.A_star / L2;
    d.I = p.I_star / L4;
    d.R = p.R_star / L;
    d.G = p.G_star * L4 / EI;
    d.rho = p.rho_star * L4 * L2 * w02 / EI;
    d.J = p.J_star * w02;
    d.c = p.c_star * w0;
    d.m = p.m_star * L * w02 / EI;
    d.k_prime = p.k_prime;
    d.omega0 = w0;
    d.Lw = p.Lw_star / L;
    d.Kt = p.Kt;

    d.epsilon = d.rho / (p.k_prime * d.G);
    d.mu = d.rho * d.I;
    d.a = d.A * d.rho;
    d.b = std::sqrt(d.a / d.epsilon);
    return d;
}

StateMatrices state_matrices(const DimensionlessParams& dp) {
    const double se = dp.sqrt_eps();
    StateMatrices s;
    s.A << -se / dp.m, 0.0,
            1.0,       0.0;
    s.B << 1.0 / dp.m, 0.0;
    s.C << 2.0 * se, 0.0;
    s.D << -(1.0 + dp.R), 0.0;
    return s;
}

PhysicalParams params_from_json_text(const std::string& text) {
    json j;
    const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank) {
        j = json::object();  // an empty config reads as "everything missing"
    } else {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("config parse failure: ") + e.what());
        }
    }
    if (!j.is_object()) {
        throw std::invalid_argument("config parse failure: top level must be an object");
    }
    PhysicalParams p;
    for (const Field& f : kFields) {
        auto it = j.find(f.name);
        if (it == j.end()) {
            throw std::invalid_argument(std::string("missing key ") + f.name);
        }
        if (!it->is_number()) {
            throw std::invalid_argument(std::string("key ") + f.name + " must be a number");
        }
        p.*(f.member) = it->get<double>();
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const Field& f : kFields) {
            if (it.key() == f.name) { known = true; break; }
        }
        if (!known) {
            throw std::invalid_argument(std::string("unknown key ") + it.key());
        }
    }
    p.validate();
    return p;
}

PhysicalParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return params_from_json_text(ss.str());
}

std::string params_to_json_text(const PhysicalParams& p) {
    json j;
    char buf[64];
    for (const Field& f : kFields) {
        // 17 significant digits round-trips doubles exactly
        std::snprintf(buf, sizeof(buf), "%.17g", p.*(f.member));
        j[f.name] = json::parse(buf);
    }
    return j.dump(2) + "\n";
}

void save_params(const PhysicalParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << params_to_json_text(p);
}

}  // namespace flexbeam
