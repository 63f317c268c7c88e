#pragma once

// Time stepping. Each step runs a Picard iteration: freeze the coefficients
// at the current iterate of the new level, do one linear characteristic
// update on every vessel and close every node, repeat until the iterate stops
// moving.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bloodnet/characteristics.hpp"
#include "bloodnet/constitutive.hpp"
#include "bloodnet/errors.hpp"
#include "bloodnet/junctions.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/state.hpp"
#include "bloodnet/wellposedness.hpp"

namespace bloodnet {

struct SimConfig {
    double dt = 1e-4;
    double t_end = 0.0;
    double cfl_max = 0.9;
    double picard_tol = 1e-10;
    int picard_max_iters = 50;
    double epsilon0 = kDefaultAreaFloor;
    int check_every = 1;
    bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& c) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("solver.") + what);
    };
    need(c.dt > 0.0 && std::isfinite(c.dt), "dt must be positive");
    need(c.t_end >= 0.0 && std::isfinite(c.t_end), "t_end must be non-negative");
    need(c.cfl_max > 0.0, "cfl_max must be positive");
    need(c.picard_tol > 0.0, "picard_tol must be positive");
    need(c.picard_max_iters >= 1, "picard_max_iters must be >= 1");
    need(c.epsilon0 > 0.0, "epsilon0 must be positive");
    need(c.check_every >= 1, "check_every must be >= 1");
}

// --- initial state ------------------------------------------------------------

struct VesselInit {
    Profile P = ConstantProfile{0.0};
    Profile Q = ConstantProfile{0.0};
    bool operator==(const VesselInit&) const = default;
};

/// Initial data per vessel; vessels not listed start from P = Q = 0.
struct InitSpec {
    std::map<std::string, VesselInit> vessels;
    bool operator==(const InitSpec&) const = default;
};

/// Residual of one node condition evaluated on the initial data.
struct CompatibilityEntry {
    std::string node;
    std::string quantity;
    double residual = 0.0;  // relative
    std::optional<Severity> severity;
};

inline constexpr double kCompatWarn = 1e-6;
inline constexpr double kCompatError = 1e-2;
inline constexpr double kPressureFloor = 1.0;  // Pa, denominator floor of relative residuals
inline constexpr double kFlowFloor = 1e-9;     // m^3/s

namespace detail {

inline double weighted_junction_pressure(const Branching& br, const NetworkState& st,
                                         const std::map<std::string, double>& areas) {
    // Flow balance differentiated in time forces sum (A/rho)(P_i - P_junc) = 0.
    double num = 0.0, den = 0.0;
    for (const auto& a : br.attachments) {
        const double w = areas.at(a.vessel + to_string(a.end)) / a.rho;
        num += w * endpoint_state(st, a.vessel, a.end).P;
        den += w;
    }
    return num / den;
}

inline std::map<std::string, double> endpoint_areas(const Network& net, const NetworkState& st) {
    std::map<std::string, double> out;
    for (const auto& [id, v] : net.vessels) {
        const auto& f = st.field(id);
        for (End e : {End::x0, End::x1}) {
            const int j = endpoint_index(f, e);
            out[id + to_string(e)] = evaluate_coefficients(v, f.x(j), f.at(j)).A;
        }
    }
    return out;
}

inline CompatibilityEntry compat(std::string node, std::string quantity, double residual,
                                 bool cap_at_warning = false) {
    CompatibilityEntry e{std::move(node), std::move(quantity), residual, std::nullopt};
    if (residual > kCompatError && !cap_at_warning) e.severity = Severity::error;
    else if (residual > kCompatWarn) e.severity = Severity::warning;
    return e;
}

}  // namespace detail

/// Node conditions evaluated on `st` at time st.t. A pressure mismatch across
/// a branching node is only a warning: the momentum balances absorb it
/// through dQ/dt.
inline std::vector<CompatibilityEntry> compatibility_residuals(const Network& net, const NetworkState& st) {
    std::vector<CompatibilityEntry> out;
    const auto areas = detail::endpoint_areas(net, st);
    for (const auto& [nid, node] : net.nodes) {
        if (const auto* ep = std::get_if<ExternalPressure>(&node.kind)) {
            for (const auto& e : endpoints_of(net, nid)) {
                const double PB = eval_signal(ep->signal, st.t);
                const double P = endpoint_state(st, e.vessel, e.end).P;
                out.push_back(detail::compat(nid, "P", std::abs(P - PB) /
                                                           std::max({kPressureFloor, std::abs(P), std::abs(PB)})));
            }
        } else if (const auto* ef = std::get_if<ExternalFlow>(&node.kind)) {
            for (const auto& e : endpoints_of(net, nid)) {
                const double QB = eval_signal(ef->signal, st.t);
                const double Q = endpoint_state(st, e.vessel, e.end).Q;
                out.push_back(detail::compat(nid, "Q", std::abs(Q - QB) /
                                                           std::max({kFlowFloor, std::abs(Q), std::abs(QB)})));
            }
        } else if (const auto* br = std::get_if<Branching>(&node.kind)) {
            double balance = 0.0, total = 0.0;
            for (const auto& a : br->attachments) {
                const double Q = endpoint_state(st, a.vessel, a.end).Q;
                balance += (a.end == End::x1 ? 1.0 : -1.0) * Q;
                total += std::abs(Q);
            }
            out.push_back(detail::compat(nid, "mass", std::abs(balance) / std::max(kFlowFloor, total)));
            const double Pj = detail::weighted_junction_pressure(*br, st, areas);
            double spread = 0.0;
            for (const auto& a : br->attachments)
                spread = std::max(spread, std::abs(endpoint_state(st, a.vessel, a.end).P - Pj));
            out.push_back(detail::compat(nid, "momentum", spread / std::max(kPressureFloor, std::abs(Pj)), true));
        } else if (const auto* tr = std::get_if<Transitional>(&node.kind)) {
            const auto it = st.transitional.find(nid);
            if (it == st.transitional.end()) throw Error("no capacitor state for node '" + nid + "'");
            const auto& cap = it->second;
            for (const auto& a : tr->arteries) {
                const auto s = endpoint_state(st, a.vessel, End::x1);
                const double r = std::abs(a.resistance * s.Q - (s.P - cap.P_C1));
                out.push_back(detail::compat(nid, "resistive:" + a.vessel,
                                             r / std::max({kPressureFloor, std::abs(s.P), std::abs(cap.P_C1)})));
            }
            for (const auto& a : tr->veins) {
                const auto s = endpoint_state(st, a.vessel, End::x0);
                const double r = std::abs(a.resistance * s.Q - (cap.P_C2 - s.P));
                out.push_back(detail::compat(nid, "resistive:" + a.vessel,
                                             r / std::max({kPressureFloor, std::abs(s.P), std::abs(cap.P_C2)})));
            }
        }
    }
    return out;
}

inline std::vector<Diagnostic> compatibility_diagnostics(const std::vector<CompatibilityEntry>& entries) {
    std::vector<Diagnostic> out;
    for (const auto& e : entries) {
        if (!e.severity) continue;
        out.push_back({*e.severity, e.node,
                       "initial " + e.quantity + " residual " + std::to_string(e.residual)});
    }
    return out;
}

struct InitialState {
    NetworkState state;
    std::vector<CompatibilityEntry> compatibility;
};

/// Samples the initial profiles on each vessel grid and sets up node states.
/// Capacitor pressures default to the mean of (P - R Q) over arteries and of
/// (P + R Q) over veins, i.e. the values that satisfy the resistive laws.
inline InitialState initial_state(const Network& net, const InitSpec& spec,
                                  double epsilon0 = kDefaultAreaFloor) {
    for (const auto& [id, _] : spec.vessels)
        if (!net.vessels.count(id)) throw ConfigError("initial: unknown vessel '" + id + "'");
    InitialState out;
    auto& st = out.state;
    for (const auto& [id, v] : net.vessels) {
        const auto it = spec.vessels.find(id);
        const VesselInit init = it == spec.vessels.end() ? VesselInit{} : it->second;
        VesselField f;
        f.vessel = id;
        try {
            f.P = sample_profile(init.P, v.n_cells);
            f.Q = sample_profile(init.Q, v.n_cells);
        } catch (const ConfigError& e) {
            throw ConfigError("initial." + id + ": " + e.what());
        }
        for (int j = 0; j <= v.n_cells; ++j) (void)coefficients(v, f.x(j), f.at(j), epsilon0);
        st.fields.emplace(id, std::move(f));
    }
    const auto areas = detail::endpoint_areas(net, st);
    for (const auto& [nid, node] : net.nodes) {
        if (const auto* br = std::get_if<Branching>(&node.kind)) {
            st.junction_pressure[nid] = detail::weighted_junction_pressure(*br, st, areas);
        } else if (const auto* tr = std::get_if<Transitional>(&node.kind)) {
            TransitionalState cap;
            double s1 = 0.0, s2 = 0.0;
            for (const auto& a : tr->arteries) {
                const auto s = endpoint_state(st, a.vessel, End::x1);
                s1 += s.P - a.resistance * s.Q;
            }
            for (const auto& a : tr->veins) {
                const auto s = endpoint_state(st, a.vessel, End::x0);
                s2 += s.P + a.resistance * s.Q;
            }
            cap.P_C1 = tr->P_C1_init.value_or(s1 / static_cast<double>(tr->arteries.size()));
            cap.P_C2 = tr->P_C2_init.value_or(s2 / static_cast<double>(tr->veins.size()));
            st.transitional[nid] = cap;
        }
    }
    out.compatibility = compatibility_residuals(net, st);
    return out;
}

// --- Picard step --------------------------------------------------------------

struct PicardResult {
    NetworkState state;
    int iterations = 0;
    std::vector<double> contraction_history;  // deviation after each iteration
};

namespace detail {

inline double deviation(const std::vector<double>& old_v, const std::vector<double>& new_v) {
    double d = 0.0;
    for (std::size_t j = 0; j < new_v.size(); ++j)
        d = std::max(d, std::abs(new_v[j] - old_v[j]) / (1.0 + std::abs(new_v[j])));
    return d;
}

inline double scalar_deviation(double old_v, double new_v) {
    return std::abs(new_v - old_v) / (1.0 + std::abs(new_v));
}

inline double state_deviation(const NetworkState& a, const NetworkState& b) {
    double d = 0.0;
    for (const auto& [id, fb] : b.fields) {
        const auto& fa = a.field(id);
        d = std::max({d, deviation(fa.P, fb.P), deviation(fa.Q, fb.Q)});
    }
    for (const auto& [id, pb] : b.junction_pressure) d = std::max(d, scalar_deviation(a.junction_pressure.at(id), pb));
    for (const auto& [id, cb] : b.transitional) {
        const auto& ca = a.transitional.at(id);
        d = std::max({d, scalar_deviation(ca.P_C1, cb.P_C1), scalar_deviation(ca.P_C2, cb.P_C2)});
    }
    return d;
}

struct VesselIterate {
    LevelCoefficients level;
    InteriorUpdate update;
};

inline void set_endpoint(NetworkState& st, const std::string& vessel, End e, PrimitiveState s) {
    auto& f = st.fields.at(vessel);
    const int j = endpoint_index(f, e);
    f.P[j] = s.P;
    f.Q[j] = s.Q;
}

}  // namespace detail

/// One time step from `prev` to t_new.
inline PicardResult picard_step_to(const Network& net, const NetworkState& prev, const SimConfig& cfg,
                                   double t_new) {
    const double dt = t_new - prev.t;
    if (!(dt > 0.0)) throw Error("picard_step: target time must be after the current time");
    std::map<std::string, LevelCoefficients> old_levels;
    for (const auto& [id, v] : net.vessels) old_levels.emplace(id, evaluate_level(v, prev.field(id), cfg.epsilon0));

    NetworkState iter = prev;
    iter.t = t_new;
    for (auto& [_, f] : iter.fields) f.t = t_new;

    PicardResult result;
    for (int k = 1; k <= cfg.picard_max_iters; ++k) {
        NetworkState next = iter;
        std::map<std::string, detail::VesselIterate> vi;
        for (const auto& [id, v] : net.vessels) {
            auto level = evaluate_level(v, iter.field(id), cfg.epsilon0);
            const CharacteristicKernel kernel(prev.field(id), iter.field(id),
                                              FrozenCoefficients{old_levels.at(id), level, dt}, cfg.cfl_max);
            auto upd = interior_update(kernel);
            auto& f = next.fields.at(id);
            for (int j = 1; j < f.n_cells(); ++j) {
                if (!upd.r_new[j] || !upd.s_new[j])
                    throw HyperbolicityViolation("vessel '" + id + "' interior node " + std::to_string(j) +
                                                 ": characteristic foot left the vessel");
                const auto s = from_riemann(level.cs[j], level.eig[j], {*upd.r_new[j], *upd.s_new[j]});
                f.P[j] = s.P;
                f.Q[j] = s.Q;
            }
            vi.emplace(id, detail::VesselIterate{std::move(level), std::move(upd)});
        }

        auto input_for = [&](const std::string& vid, End e) {
            const auto& it = vi.at(vid);
            const int j = e == End::x0 ? 0 : it.level.n_cells();
            const double outgoing = e == End::x0 ? it.update.s_at_x0() : it.update.r_at_x1();
            return make_endpoint_input(vid, e, it.level.cs[j], it.level.eig[j], outgoing, prev.field(vid).Q[j]);
        };

        for (const auto& [nid, node] : net.nodes) {
            if (const auto* ep = std::get_if<ExternalPressure>(&node.kind)) {
                for (const auto& e : endpoints_of(net, nid))
                    detail::set_endpoint(next, e.vessel, e.end,
                                         close_external_pressure(input_for(e.vessel, e.end),
                                                                 eval_signal(ep->signal, t_new)));
            } else if (const auto* ef = std::get_if<ExternalFlow>(&node.kind)) {
                for (const auto& e : endpoints_of(net, nid))
                    detail::set_endpoint(next, e.vessel, e.end,
                                         close_external_flow(input_for(e.vessel, e.end),
                                                             eval_signal(ef->signal, t_new)));
            } else if (const auto* br = std::get_if<Branching>(&node.kind)) {
                std::vector<EndpointClosureInput> inputs;
                for (const auto& a : br->attachments) inputs.push_back(input_for(a.vessel, a.end));
                const auto sol = solve_junction(assemble_branching(nid, *br, inputs, dt));
                for (std::size_t k2 = 0; k2 < inputs.size(); ++k2)
                    detail::set_endpoint(next, inputs[k2].vessel, inputs[k2].end, sol.endpoints[k2]);
                next.junction_pressure[nid] = sol.P_junc;
            } else if (const auto* tr = std::get_if<Transitional>(&node.kind)) {
                std::vector<EndpointClosureInput> inputs;
                for (const auto& a : tr->arteries) inputs.push_back(input_for(a.vessel, End::x1));
                for (const auto& a : tr->veins) inputs.push_back(input_for(a.vessel, End::x0));
                const auto sol = solve_junction(assemble_transitional(nid, *tr, inputs, prev.transitional.at(nid), dt));
                for (std::size_t k2 = 0; k2 < inputs.size(); ++k2)
                    detail::set_endpoint(next, inputs[k2].vessel, inputs[k2].end, sol.endpoints[k2]);
                next.transitional[nid] = sol.capacitors;
            }
        }

        const double dev = detail::state_deviation(iter, next);
        result.contraction_history.push_back(dev);
        iter = std::move(next);
        if (dev <= cfg.picard_tol) {
            result.state = std::move(iter);
            result.iterations = k;
            return result;
        }
    }
    throw PicardDivergence("Picard iteration did not converge in " + std::to_string(cfg.picard_max_iters) +
                           " iterations (last deviation " + std::to_string(result.contraction_history.back()) +
                           "); reduce dt");
}

/// One time step of length dt from `prev`.
inline PicardResult picard_step(const Network& net, const NetworkState& prev, const SimConfig& cfg, double dt) {
    return picard_step_to(net, prev, cfg, prev.t + dt);
}

// --- time loop ------------------------------------------------------------------

struct StepInfo {
    int step = 0;
    double dt = 0.0;
    int iterations = 0;
    std::vector<double> contraction_history;
};

using StepObserver = std::function<void(const NetworkState&, const StepInfo&)>;

struct SimReport {
    int steps = 0;
    long total_picard_iterations = 0;
    int dt_adjustments = 0;  // halvings
    int full_checks = 0;
    double t_final = 0.0;
    std::vector<int> iterations_per_step;
    std::vector<Diagnostic> compatibility;
    ConditionReport initial_conditions;
    ConditionReport last_conditions;
    NetworkState final_state;
};

inline constexpr int kMaxHalvings = 10;
inline constexpr int kRestoreAfter = 10;

namespace detail {

inline std::string failures_text(const ConditionReport& r) {
    std::string s;
    for (const auto* e : r.failures()) {
        if (!s.empty()) s += "; ";
        s += e->subject + " " + to_string(e->condition);
        if (!e->classification.empty()) s += " (" + e->classification + ")";
        if (!e->message.empty()) s += ": " + e->message;
    }
    return s;
}

inline std::string time_context(double t) { return "t=" + std::to_string(t) + ": "; }

}  // namespace detail

/// Advances `init` to cfg.t_end. Steps are shortened so the run lands exactly
/// on each of `landing_times` inside (init.t, t_end].
inline SimReport run(const Network& net, const NetworkState& init, const SimConfig& cfg,
                     const StepObserver& sink = {}, std::vector<double> landing_times = {}) {
    validate(cfg);
    const auto diags = validate_network(net);
    if (has_errors(diags)) {
        std::string msg = "network is invalid:";
        for (const auto& d : diags)
            if (d.severity == Severity::error) msg += " [" + d.subject + "] " + d.message + ";";
        throw ConfigError(msg);
    }
    SimReport report;
    report.compatibility = compatibility_diagnostics(compatibility_residuals(net, init));
    if (has_errors(report.compatibility)) {
        std::string msg = "initial data incompatible with node conditions:";
        for (const auto& d : report.compatibility)
            if (d.severity == Severity::error) msg += " [" + d.subject + "] " + d.message + ";";
        throw WellPosednessFailure(msg);
    }
    report.initial_conditions = check_state(net, init, cfg.dt, cfg.epsilon0);
    report.last_conditions = report.initial_conditions;
    if (!report.initial_conditions.passed())
        throw WellPosednessFailure(detail::time_context(init.t) +
                                   detail::failures_text(report.initial_conditions));

    std::sort(landing_times.begin(), landing_times.end());
    NetworkState state = init;
    const double eps_t = 1e-9 * cfg.dt;
    const double dt_min = cfg.dt / static_cast<double>(1 << kMaxHalvings);
    double dt = cfg.dt;
    int good = 0;
    // Times are anchor + k*dt rather than a running sum, so runs land on
    // t_end and on the landing times without drift.
    double anchor = state.t;
    long k_anchor = 0;
    auto halve = [&] {
        if (dt * 0.5 < dt_min * (1.0 - 1e-12)) rethrow_with_context(detail::time_context(state.t));
        dt *= 0.5;
        ++report.dt_adjustments;
        good = 0;
        anchor = state.t;
        k_anchor = 0;
    };
    while (cfg.t_end - state.t > eps_t) {
        double t_next = anchor + static_cast<double>(k_anchor + 1) * dt;
        bool regular = true;
        for (double L : landing_times) {
            if (L <= state.t + eps_t) continue;
            if (t_next > L - eps_t) {
                regular = t_next == L;
                t_next = L;
            }
            break;
        }
        if (t_next > cfg.t_end - eps_t) {
            regular = regular && t_next == cfg.t_end;
            t_next = cfg.t_end;
        }
        const double h = t_next - state.t;
        PicardResult res;
        try {
            res = picard_step_to(net, state, cfg, t_next);
        } catch (const CflViolation&) {
            halve();
            continue;
        } catch (const PicardDivergence&) {
            halve();
            continue;
        } catch (const Error&) {
            rethrow_with_context(detail::time_context(state.t));
        }
        if (regular) {
            ++k_anchor;
        } else {
            anchor = t_next;
            k_anchor = 0;
        }
        state = std::move(res.state);
        ++report.steps;
        report.total_picard_iterations += res.iterations;
        report.iterations_per_step.push_back(res.iterations);
        if (dt < cfg.dt && ++good >= kRestoreAfter) {
            dt = cfg.dt;
            good = 0;
            anchor = state.t;
            k_anchor = 0;
        }

        const auto ends = check_endpoints(net, state, cfg.epsilon0);
        if (!ends.passed())
            throw WellPosednessFailure(detail::time_context(state.t) + detail::failures_text(ends));
        if (report.steps % cfg.check_every == 0) {
            report.last_conditions = check_state(net, state, h, cfg.epsilon0);
            ++report.full_checks;
            if (!report.last_conditions.passed())
                throw WellPosednessFailure(detail::time_context(state.t) +
                                           detail::failures_text(report.last_conditions));
        }
        if (sink) sink(state, StepInfo{report.steps, h, res.iterations, std::move(res.contraction_history)});
    }
    report.t_final = state.t;
    report.final_state = std::move(state);
    return report;
}

}  // namespace bloodnet
