#pragma once

// Builders and random generators shared by the tests.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bloodnet/bloodnet.hpp"

namespace ts {

using namespace bloodnet;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Random (a, b, c) with c^2 + ab > 0; b may be negative.
inline CoefficientSet random_hyperbolic(std::mt19937_64& g) {
    for (;;) {
        CoefficientSet cs;
        cs.a = uniform(g, 0.1, 10.0);
        cs.b = uniform(g, -2.0, 10.0);
        cs.c = uniform(g, -3.0, 3.0);
        cs.A = uniform(g, 0.5, 2.0);
        if (cs.c * cs.c + cs.a * cs.b > 1e-3) return cs;
    }
}

/// Random (a, b, c) with ab > 0, so lambda_L < 0 < lambda_R.
inline CoefficientSet random_endpoint(std::mt19937_64& g) {
    CoefficientSet cs;
    cs.a = uniform(g, 0.1, 10.0);
    cs.b = uniform(g, 0.1, 10.0);
    cs.c = uniform(g, -2.0, 2.0);
    cs.A = uniform(g, 1e-5, 1e-3);
    return cs;
}

inline Vessel synthetic_vessel(std::string id, int n, std::string x0, std::string x1, SyntheticModel m = {}) {
    Vessel v;
    v.id = std::move(id);
    v.n_cells = n;
    v.x0_node = std::move(x0);
    v.x1_node = std::move(x1);
    v.model = std::move(m);
    return v;
}

inline PhysicalModel power_model(double C = 26250, double R0 = 5e-3, double beta = 2) {
    PhysicalModel pm;
    pm.tube_law = PowerLaw{C, R0, beta};
    return pm;
}

inline Vessel physical_vessel(std::string id, int n, std::string x0, std::string x1, double length = 0.2,
                              PhysicalModel pm = power_model()) {
    Vessel v;
    v.id = std::move(id);
    v.n_cells = n;
    v.length = length;
    v.x0_node = std::move(x0);
    v.x1_node = std::move(x1);
    v.model = std::move(pm);
    return v;
}

inline void add(Network& net, Vessel v) { net.vessels.emplace(v.id, std::move(v)); }
inline void add(Network& net, std::string id, NodeKind k) { net.nodes.emplace(id, Node{id, std::move(k)}); }

/// One vessel between two external pressure nodes.
inline Network single_vessel(Vessel v, BoundarySignal left = ConstantSignal{0.0},
                             BoundarySignal right = ConstantSignal{0.0}) {
    Network net;
    v.x0_node = "in";
    v.x1_node = "out";
    add(net, std::move(v));
    add(net, "in", ExternalPressure{left});
    add(net, "out", ExternalPressure{right});
    return net;
}

/// Parent vessel p (x1) feeding daughters d1, d2 (x0) through a branching node.
inline Network y_network(int n = 20, double rho = 10.0) {
    Network net;
    add(net, physical_vessel("p", n, "in", "j", 0.2, power_model(26250, 5e-3, 2)));
    add(net, physical_vessel("d1", n, "j", "o1", 0.15, power_model(26250, 3.5e-3, 2)));
    add(net, physical_vessel("d2", n, "j", "o2", 0.15, power_model(30000, 3e-3, 2)));
    add(net, "in", ExternalFlow{SineSignal{5e-6, 5e-6, 1.25, -std::numbers::pi / 2}});
    add(net, "o1", ExternalPressure{ConstantSignal{0.0}});
    add(net, "o2", ExternalPressure{ConstantSignal{0.0}});
    add(net, "j", Branching{{{"p", End::x1, rho, 0.0}, {"d1", End::x0, rho, 0.0}, {"d2", End::x0, rho, 0.0}}});
    return net;
}

inline double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace ts
