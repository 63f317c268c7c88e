#pragma once

// Reference solutions and the dependence-on-data experiment. The oracles use
// only elementary functions; none of them calls into the solver kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "bloodnet/errors.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/solver.hpp"

namespace bloodnet {

// --- constant-coefficient translation -------------------------------------------

/// Exact solution of the linear system with constant a, b, c and no forcing:
/// r(x,t) = r0(x - lambda_R t), s(x,t) = s0(x - lambda_L t). r0 and s0 must
/// be defined on [support_lo, support_hi].
struct LinearTranslationOracle {
    double a = 1.0, b = 1.0, c = 0.0;
    std::function<double(double)> r0;
    std::function<double(double)> s0;
    double support_lo = -std::numeric_limits<double>::infinity();
    double support_hi = std::numeric_limits<double>::infinity();

    double lambda_R() const { return c + std::sqrt(c * c + a * b); }
    double lambda_L() const { return c - std::sqrt(c * c + a * b); }

    double r(double x, double t) const { return eval(r0, x - lambda_R() * t); }
    double s(double x, double t) const { return eval(s0, x - lambda_L() * t); }

    /// (P, Q) recovered from the exact (r, s).
    std::pair<double, double> PQ(double x, double t) const {
        const double lr = lambda_R(), ll = lambda_L();
        const double rv = r(x, t), sv = s(x, t);
        return {(rv - sv) / (lr - ll), (lr * rv - ll * sv) / ((lr - ll) * a)};
    }

private:
    double eval(const std::function<double(double)>& fn, double xi) const {
        if (xi < support_lo || xi > support_hi)
            throw DomainError("translation oracle: foot " + std::to_string(xi) + " outside the profile support");
        return fn(xi);
    }
};

inline LinearTranslationOracle oracle_linear_translation(double a, double b, double c,
                                                         std::function<double(double)> r0,
                                                         std::function<double(double)> s0) {
    if (!(c * c + a * b > 0.0)) throw DomainError("translation oracle needs c^2 + ab > 0");
    return {a, b, c, std::move(r0), std::move(s0)};
}

// --- lumped RC node ----------------------------------------------------------------

/// Two-capacitor node fed by an ideal flow into C1. The venous side is either
/// an ideal pressure behind a resistance or an ideal outflow from C2.
struct RcVenousPressure {
    double P_v = 0.0;
    double R_v = 1.0;
};
struct RcVenousFlow {
    double Q_out = 0.0;
};

struct RcOracleInput {
    double R_C = 1.0;
    double C1 = 1.0;
    double C2 = 1.0;
    double Q_in = 0.0;  // step applied at t = 0
    double P_C1_0 = 0.0;
    double P_C2_0 = 0.0;
    std::variant<RcVenousPressure, RcVenousFlow> vein = RcVenousPressure{};
};

struct RcOracle {
    // d/dt (P1, P2) = M (P1, P2) + k
    double m11 = 0, m12 = 0, m21 = 0, m22 = 0;
    double k1 = 0, k2 = 0;
    double p10 = 0, p20 = 0;
    double l1 = 0, l2 = 0;  // eigenvalues of M (real for this system)

    /// f(M) applied to v by Sylvester's formula, with f given on the eigenvalues.
    template <class F>
    std::pair<double, double> apply(F f, double v1, double v2) const {
        if (std::abs(l1 - l2) < 1e-12 * std::max(std::abs(l1), std::abs(l2))) {
            // Only reachable when the coupling vanishes, so M is diagonal.
            return {f(l1) * v1, f(l1) * v2};
        }
        const double f1 = f(l1), f2 = f(l2);
        const double c1 = f1 / (l1 - l2), c2 = f2 / (l2 - l1);
        const double a1 = (m11 - l2) * v1 + m12 * v2, a2 = m21 * v1 + (m22 - l2) * v2;
        const double b1 = (m11 - l1) * v1 + m12 * v2, b2 = m21 * v1 + (m22 - l1) * v2;
        return {c1 * a1 + c2 * b1, c1 * a2 + c2 * b2};
    }

    /// (P_C1(t), P_C2(t)) = e^{Mt} p0 + ((e^{Mt} - I) M^{-1}) k, the latter taken
    /// through its entire-function form so a zero eigenvalue is allowed.
    std::pair<double, double> at(double t) const {
        const auto hom = apply([t](double l) { return std::exp(l * t); }, p10, p20);
        const auto forced = apply(
            [t](double l) { return std::abs(l * t) < 1e-8 ? t * (1.0 + 0.5 * l * t) : std::expm1(l * t) / l; }, k1,
            k2);
        return {hom.first + forced.first, hom.second + forced.second};
    }

    double time_constant() const {
        const double slow = std::min(std::abs(l1), std::abs(l2));
        const double fast = std::max(std::abs(l1), std::abs(l2));
        return 1.0 / (slow > 0.0 ? slow : fast);
    }
};

inline RcOracle oracle_rc_transitional(const RcOracleInput& in) {
    if (!(in.R_C > 0.0 && in.C1 > 0.0 && in.C2 > 0.0)) throw DomainError("RC oracle needs positive R_C, C1, C2");
    const double g = 1.0 / in.R_C;
    RcOracle o;
    o.m11 = -g / in.C1;
    o.m12 = g / in.C1;
    o.m21 = g / in.C2;
    o.m22 = -g / in.C2;
    o.k1 = in.Q_in / in.C1;
    if (const auto* vp = std::get_if<RcVenousPressure>(&in.vein)) {
        if (!(vp->R_v > 0.0)) throw DomainError("RC oracle needs R_v > 0");
        o.m22 -= 1.0 / (vp->R_v * in.C2);
        o.k2 = vp->P_v / (vp->R_v * in.C2);
    } else {
        o.k2 = -std::get<RcVenousFlow>(in.vein).Q_out / in.C2;
    }
    o.p10 = in.P_C1_0;
    o.p20 = in.P_C2_0;
    const double tr = o.m11 + o.m22;
    const double det = o.m11 * o.m22 - o.m12 * o.m21;
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    o.l1 = 0.5 * tr + disc;
    o.l2 = 0.5 * tr - disc;
    return o;
}

// --- dependence on data ----------------------------------------------------------------

struct ScenarioInputs {
    Network network;
    InitSpec initial;
    SimConfig solver;
};

/// Mutates a copy of the base inputs for perturbation size eps.
using Perturbation = std::function<void(double eps, ScenarioInputs&)>;

/// P^I += eps * scale * sin(2 pi x) on the listed vessels (all if empty).
inline Perturbation perturb_initial_pressure(double scale, std::vector<std::string> vessels = {}) {
    return [scale, vessels](double eps, ScenarioInputs& in) {
        for (const auto& [id, v] : in.network.vessels) {
            if (!vessels.empty() && std::find(vessels.begin(), vessels.end(), id) == vessels.end()) continue;
            auto& vi = in.initial.vessels[id];
            auto P = sample_profile(vi.P, v.n_cells);
            for (int j = 0; j <= v.n_cells; ++j)
                P[j] += eps * scale * std::sin(2.0 * std::numbers::pi * j / v.n_cells);
            vi.P = SampledProfile{std::move(P)};
        }
    };
}

/// Adds eps * scale to the signal of an external node.
inline Perturbation perturb_boundary(std::string node, double scale) {
    return [node, scale](double eps, ScenarioInputs& in) {
        auto& kind = in.network.nodes.at(node).kind;
        auto shift = [&](BoundarySignal& s) {
            std::visit(
                [&](auto& sig) {
                    using S = std::decay_t<decltype(sig)>;
                    if constexpr (std::is_same_v<S, ConstantSignal>) sig.value += eps * scale;
                    else if constexpr (std::is_same_v<S, SineSignal>) sig.mean += eps * scale;
                    else
                        for (auto& v : sig.values) v += eps * scale;
                },
                s);
        };
        if (auto* p = std::get_if<ExternalPressure>(&kind)) shift(p->signal);
        else if (auto* f = std::get_if<ExternalFlow>(&kind)) shift(f->signal);
        else throw ConfigError("boundary perturbation needs an external node, got '" + node + "'");
    };
}

/// g += eps * scale * sin(2 pi x) on a synthetic-coefficient vessel.
inline Perturbation perturb_forcing(std::string vessel, double scale) {
    return [vessel, scale](double eps, ScenarioInputs& in) {
        auto& v = in.network.vessels.at(vessel);
        auto* syn = std::get_if<SyntheticModel>(&v.model);
        if (!syn) throw ConfigError("forcing perturbation needs a synthetic vessel, got '" + vessel + "'");
        auto g = sample_profile(syn->g, v.n_cells);
        for (int j = 0; j <= v.n_cells; ++j) g[j] += eps * scale * std::sin(2.0 * std::numbers::pi * j / v.n_cells);
        syn->g = SampledProfile{std::move(g)};
    };
}

struct DependenceRow {
    double eps = 0.0;
    double dev_P = 0.0, dev_Q = 0.0;    // sup over steps and grid of |U - U~|
    double grad_P = 0.0, grad_Q = 0.0;  // same for the finite-difference x-gradient
    double ratio(double dev) const { return eps > 0.0 ? dev / eps : 0.0; }
};

namespace detail {

using Trajectory = std::vector<NetworkState>;

inline Trajectory trajectory(const ScenarioInputs& in) {
    const auto init = initial_state(in.network, in.initial, in.solver.epsilon0);
    Trajectory out{init.state};
    run(in.network, init.state, in.solver, [&](const NetworkState& s, const StepInfo&) { out.push_back(s); });
    return out;
}

inline double fd(const std::vector<double>& v, int j) {
    const int n = static_cast<int>(v.size()) - 1;
    if (j == 0) return (v[1] - v[0]) * n;
    if (j == n) return (v[n] - v[n - 1]) * n;
    return (v[j + 1] - v[j - 1]) * 0.5 * n;
}

}  // namespace detail

/// Runs the base inputs and one perturbed run per eps, comparing every time level.
inline std::vector<DependenceRow> dependence_experiment(const ScenarioInputs& base, const Perturbation& perturb,
                                                        const std::vector<double>& epsilons) {
    const auto ref = detail::trajectory(base);
    std::vector<DependenceRow> rows;
    for (double eps : epsilons) {
        ScenarioInputs in = base;
        perturb(eps, in);
        const auto tr = detail::trajectory(in);
        if (tr.size() != ref.size())
            throw Error("dependence experiment: perturbed run took " + std::to_string(tr.size() - 1) +
                        " steps, base took " + std::to_string(ref.size() - 1));
        DependenceRow row{eps};
        for (std::size_t k = 0; k < ref.size(); ++k) {
            for (const auto& [id, f0] : ref[k].fields) {
                const auto& f1 = tr[k].field(id);
                std::vector<double> dP(f0.P.size()), dQ(f0.Q.size());
                for (std::size_t j = 0; j < dP.size(); ++j) {
                    dP[j] = f1.P[j] - f0.P[j];
                    dQ[j] = f1.Q[j] - f0.Q[j];
                    row.dev_P = std::max(row.dev_P, std::abs(dP[j]));
                    row.dev_Q = std::max(row.dev_Q, std::abs(dQ[j]));
                }
                for (int j = 0; j < static_cast<int>(dP.size()); ++j) {
                    row.grad_P = std::max(row.grad_P, std::abs(detail::fd(dP, j)));
                    row.grad_Q = std::max(row.grad_Q, std::abs(detail::fd(dQ, j)));
                }
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bloodnet
