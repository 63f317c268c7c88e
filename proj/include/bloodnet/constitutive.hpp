#pragma once

// Coefficients of the (P,Q) wave system, its eigenstructure and the
// Riemann-variable transforms.
//
// Each vessel obeys
//     P_t + a Q_x = f,
//     Q_t + b P_x + 2c Q_x = g,
// on x in [0,1]. For the physical model the coefficients come from the
// area/flow balance laws and the tube law; for the synthetic model they are
// prescribed profiles.

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "bloodnet/errors.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/tube_law.hpp"

namespace bloodnet {

inline constexpr double kDefaultAreaFloor = 1e-10;  // m^2

struct PrimitiveState {
    double P = 0.0;
    double Q = 0.0;
    bool operator==(const PrimitiveState&) const = default;
};

struct CoefficientSet {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double f = 0.0;
    double g = 0.0;
    double A = 0.0;
};

struct EigenData {
    double lambda_R = 0.0;
    double lambda_L = 0.0;
    double u = 0.0;
};

struct RiemannPair {
    double r = 0.0;
    double s = 0.0;
};

/// Coefficients without any admissibility checks. Throws DomainError only
/// when the tube law cannot be evaluated at P.
inline CoefficientSet evaluate_coefficients(const Vessel& vessel, double x, const PrimitiveState& st) {
    const double inv_len = 1.0 / vessel.length;
    if (const auto* syn = std::get_if<SyntheticModel>(&vessel.model)) {
        return {eval_profile(syn->a, x), eval_profile(syn->b, x), eval_profile(syn->c, x),
                eval_profile(syn->f, x), eval_profile(syn->g, x), eval_profile(syn->A, x)};
    }
    const auto& pm = std::get<PhysicalModel>(vessel.model);
    const double A = area_from_pressure(pm.tube_law, x, st.P);
    const double a = pressure_from_area(pm.tube_law, x, A).dP_dA;
    const double alpha = pm.alpha;
    const double Q = st.Q;
    const double QA = Q / A;
    CoefficientSet cs;
    cs.A = A;
    cs.a = a * inv_len;
    cs.b = (A / pm.rho_blood - alpha * QA * QA / a) * inv_len;
    cs.c = alpha * QA * inv_len;
    cs.f = 0.0;
    const double friction = 4.0 * std::numbers::pi * pm.nu * alpha / (alpha - 1.0);
    cs.g = alpha * QA * QA * area_x_derivative(pm.tube_law, x, st.P) * inv_len - friction * QA;
    return cs;
}

/// Coefficients at (x, state); rejects a <= 0 and A below the area floor.
inline CoefficientSet coefficients(const Vessel& vessel, double x, const PrimitiveState& st,
                                   double epsilon0 = kDefaultAreaFloor) {
    CoefficientSet cs;
    try {
        cs = evaluate_coefficients(vessel, x, st);
    } catch (const DomainError& e) {
        throw CollapsedVessel("vessel '" + vessel.id + "' at x=" + std::to_string(x) + ": " + e.what());
    }
    if (!(cs.A >= epsilon0))
        throw CollapsedVessel("vessel '" + vessel.id + "' at x=" + std::to_string(x) +
                              ": area " + std::to_string(cs.A) + " below floor");
    if (!(cs.a > 0.0))
        throw CollapsedVessel("vessel '" + vessel.id + "' at x=" + std::to_string(x) +
                              ": a = " + std::to_string(cs.a) + " is not positive");
    return cs;
}

inline double hyperbolicity_margin(const CoefficientSet& cs) { return cs.c * cs.c + cs.a * cs.b; }

inline EigenData eigen(const CoefficientSet& cs) {
    const double disc = hyperbolicity_margin(cs);
    if (!(disc > 0.0))
        throw HyperbolicityViolation("c^2 + ab = " + std::to_string(disc) + " is not positive");
    const double u = std::sqrt(disc);
    return {cs.c + u, cs.c - u, u};
}

inline RiemannPair to_riemann(const CoefficientSet& cs, const EigenData& e, const PrimitiveState& st) {
    return {-e.lambda_L * st.P + cs.a * st.Q, -e.lambda_R * st.P + cs.a * st.Q};
}

inline PrimitiveState from_riemann(const CoefficientSet& cs, const EigenData& e, const RiemannPair& rp) {
    const double two_u = 2.0 * e.u;
    return {(rp.r - rp.s) / two_u, (e.lambda_R * rp.r - e.lambda_L * rp.s) / (two_u * cs.a)};
}

}  // namespace bloodnet
