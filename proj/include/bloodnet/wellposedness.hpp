#pragma once

// Solvability conditions: a > 0 and A >= epsilon0 everywhere, hyperbolicity
// c^2 + ab > 0 at every grid node, ab > 0 at the vessel ends (one incoming
// characteristic per end), and nonsingular junction systems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bloodnet/constitutive.hpp"
#include "bloodnet/junctions.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/state.hpp"

namespace bloodnet {

enum class Condition { evaluable, a_positive, area_floor, cond2, cond3, junction };

inline const char* to_string(Condition c) {
    switch (c) {
        case Condition::evaluable: return "evaluable";
        case Condition::a_positive: return "a_positive";
        case Condition::area_floor: return "area_floor";
        case Condition::cond2: return "cond2";
        case Condition::cond3: return "cond3";
        case Condition::junction: return "junction";
    }
    return "?";
}

struct ConditionEntry {
    std::string subject;  // vessel or node id
    Condition condition = Condition::evaluable;
    bool passed = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    int x_index = -1;
    double value = 0.0;          // evaluated quantity at the worst point
    std::string classification;  // for cond3: under-determined / over-determined
    std::string message;
};

inline ConditionEntry make_entry(std::string subject, Condition c) {
    ConditionEntry e;
    e.subject = std::move(subject);
    e.condition = c;
    return e;
}

struct ConditionReport {
    std::vector<ConditionEntry> entries;

    bool passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
    }

    const ConditionEntry* find(const std::string& subject, Condition c) const {
        for (const auto& e : entries)
            if (e.subject == subject && e.condition == c) return &e;
        return nullptr;
    }

    std::vector<const ConditionEntry*> failures() const {
        std::vector<const ConditionEntry*> out;
        for (const auto& e : entries)
            if (!e.passed) out.push_back(&e);
        return out;
    }

    std::string summary() const {
        std::ostringstream os;
        for (const auto& e : entries) {
            os << (e.passed ? "PASS " : "FAIL ") << e.subject << ' ' << to_string(e.condition)
               << " margin=" << e.worst_margin;
            if (e.x_index >= 0) os << " at node " << e.x_index;
            if (!e.classification.empty()) os << " [" << e.classification << ']';
            if (!e.message.empty()) os << ": " << e.message;
            os << '\n';
        }
        return os.str();
    }
};

/// Number of characteristics entering the vessel through end `e`.
inline int incoming_characteristics(End e, const EigenData& eig) {
    if (e == End::x0) return (eig.lambda_R > 0.0) + (eig.lambda_L > 0.0);
    return (eig.lambda_R < 0.0) + (eig.lambda_L < 0.0);
}

/// One boundary condition per end: two incoming characteristics leave the end
/// under-determined, none leaves it over-determined.
inline std::string classify_end(End e, const CoefficientSet& cs) {
    if (!(hyperbolicity_margin(cs) > 0.0)) return "not hyperbolic";
    const int n_in = incoming_characteristics(e, eigen(cs));
    if (n_in == 2) return "under-determined";
    if (n_in == 0) return "over-determined";
    return {};
}

namespace detail {

struct Tally {
    ConditionEntry entry;
    void observe(double margin, int x_index, double value) {
        if (margin < entry.worst_margin) {
            entry.worst_margin = margin;
            entry.x_index = x_index;
            entry.value = value;
        }
    }
};

struct VesselTallies {
    Tally evaluable, a_pos, area, cond2, cond3_x0, cond3_x1;
    int unevaluable = 0;

    VesselTallies(const std::string& id) {
        evaluable.entry = make_entry(id, Condition::evaluable);
        a_pos.entry = make_entry(id, Condition::a_positive);
        area.entry = make_entry(id, Condition::area_floor);
        cond2.entry = make_entry(id, Condition::cond2);
        cond3_x0.entry = make_entry(id, Condition::cond3);
        cond3_x1.entry = make_entry(id, Condition::cond3);
    }

    void observe(const CoefficientSet& cs, int j, int n, double epsilon0) {
        a_pos.observe(cs.a, j, cs.a);
        area.observe(cs.A - epsilon0, j, cs.A);
        const double h = hyperbolicity_margin(cs);
        cond2.observe(h, j, h);
        auto end_check = [&](Tally& t, End e) {
            const double ab = cs.a * cs.b;
            if (ab < t.entry.worst_margin) {
                t.observe(ab, j, ab);
                t.entry.classification = ab > 0.0 ? std::string{} : classify_end(e, cs);
            }
        };
        if (j == 0) end_check(cond3_x0, End::x0);
        if (j == n) end_check(cond3_x1, End::x1);
    }

    void finish(ConditionReport& report, const Network& net, const std::string& id) {
        const auto& v = net.vessel(id);
        evaluable.entry.passed = unevaluable == 0;
        evaluable.entry.worst_margin = -static_cast<double>(unevaluable);
        if (unevaluable > 0)
            evaluable.entry.message =
                std::to_string(unevaluable) + " point(s) outside the tube-law range";
        report.entries.push_back(evaluable.entry);
        a_pos.entry.passed = a_pos.entry.worst_margin > 0.0;
        area.entry.passed = area.entry.worst_margin >= 0.0;
        cond2.entry.passed = cond2.entry.worst_margin > 0.0;
        for (auto* t : {&a_pos, &area, &cond2}) report.entries.push_back(t->entry);
        for (auto [t, e] : {std::pair{&cond3_x0, End::x0}, std::pair{&cond3_x1, End::x1}}) {
            t->entry.passed = t->entry.worst_margin > 0.0;
            const bool source = e == End::x0;
            std::string where = std::string("end ") + to_string(e) + " (" +
                                (source ? "source" : "terminal") + " end, node '" + v.node_at(e) + "')";
            if (t->entry.passed) {
                t->entry.message = where;
            } else {
                t->entry.message = "cond3 fails: ab = " + std::to_string(t->entry.worst_margin) +
                                   " <= 0 at " + where + "; system is " + t->entry.classification;
            }
            report.entries.push_back(t->entry);
        }
    }
};

}  // namespace detail

inline std::vector<EndpointClosureInput> node_inputs_from_state(const Network& net, const NetworkState& st,
                                                                const std::string& node_id,
                                                                double epsilon0);

/// Condition check on a state. Never throws for condition failures.
inline ConditionReport check_state(const Network& net, const NetworkState& state, double dt,
                                   double epsilon0 = kDefaultAreaFloor) {
    ConditionReport report;
    for (const auto& [id, v] : net.vessels) {
        detail::VesselTallies tallies(id);
        const auto& f = state.field(id);
        const int n = f.n_cells();
        for (int j = 0; j <= n; ++j) {
            try {
                tallies.observe(evaluate_coefficients(v, f.x(j), f.at(j)), j, n, epsilon0);
            } catch (const DomainError&) {
                ++tallies.unevaluable;
            }
        }
        tallies.finish(report, net, id);
    }
    for (const auto& [nid, node] : net.nodes) {
        const auto* br = std::get_if<Branching>(&node.kind);
        const auto* tr = std::get_if<Transitional>(&node.kind);
        if (!br && !tr) continue;
        auto e = make_entry(nid, Condition::junction);
        try {
            const auto inputs = node_inputs_from_state(net, state, nid, epsilon0);
            const auto sys = br ? assemble_branching(nid, *br, inputs, dt)
                                : assemble_transitional(nid, *tr, inputs,
                                                        state.transitional.count(nid)
                                                            ? state.transitional.at(nid)
                                                            : TransitionalState{},
                                                        dt);
            const auto sol = solve_junction(sys);
            e.worst_margin = sol.rcond;
            e.value = sol.rcond;
            e.message = "reciprocal condition estimate " + std::to_string(sol.rcond);
        } catch (const Error& err) {
            e.passed = false;
            e.worst_margin = 0.0;
            e.message = err.what();
        }
        report.entries.push_back(e);
    }
    return report;
}

/// Endpoint-only check (cond3 and endpoint coefficient admissibility).
inline ConditionReport check_endpoints(const Network& net, const NetworkState& state,
                                       double epsilon0 = kDefaultAreaFloor) {
    ConditionReport report;
    for (const auto& [id, v] : net.vessels) {
        const auto& f = state.field(id);
        for (End e : {End::x0, End::x1}) {
            const int j = endpoint_index(f, e);
            auto entry = make_entry(id, Condition::cond3);
            entry.x_index = j;
            try {
                const auto cs = evaluate_coefficients(v, f.x(j), f.at(j));
                entry.worst_margin = cs.a * cs.b;
                entry.value = entry.worst_margin;
                entry.passed = entry.worst_margin > 0.0 && cs.a > 0.0 && cs.A >= epsilon0;
                if (!entry.passed) {
                    entry.classification = classify_end(e, cs);
                    entry.message = std::string("cond3 fails at end ") + to_string(e) + "; system is " +
                                    entry.classification;
                }
            } catch (const DomainError& err) {
                entry.passed = false;
                entry.message = err.what();
            }
            report.entries.push_back(entry);
        }
    }
    return report;
}

/// Static pre-flight over a (P, Q) envelope sampled on a tensor grid at every
/// grid station of every vessel.
inline ConditionReport check_envelope(const Network& net, std::pair<double, double> P_range,
                                      std::pair<double, double> Q_range, int samples,
                                      double epsilon0 = kDefaultAreaFloor) {
    if (samples < 2) throw Error("check_envelope needs >= 2 samples per axis");
    auto axis = [samples](std::pair<double, double> r) {
        std::vector<double> v;
        if (r.first == r.second) return std::vector<double>{r.first};
        for (int i = 0; i < samples; ++i)
            v.push_back(r.first + (r.second - r.first) * i / (samples - 1));
        return v;
    };
    const auto Ps = axis(P_range), Qs = axis(Q_range);
    ConditionReport report;
    for (const auto& [id, v] : net.vessels) {
        detail::VesselTallies tallies(id);
        for (int j = 0; j <= v.n_cells; ++j) {
            const double x = static_cast<double>(j) / v.n_cells;
            for (double P : Ps)
                for (double Q : Qs) {
                    try {
                        tallies.observe(evaluate_coefficients(v, x, {P, Q}), j, v.n_cells, epsilon0);
                    } catch (const DomainError&) {
                        ++tallies.unevaluable;
                    }
                }
        }
        tallies.finish(report, net, id);
    }
    return report;
}

/// Closure inputs for a junction node, with the outgoing characteristic values
/// taken from the state itself (as at t = 0).
inline std::vector<EndpointClosureInput> node_inputs_from_state(const Network& net, const NetworkState& st,
                                                                const std::string& node_id,
                                                                double epsilon0) {
    const auto& node = net.node(node_id);
    std::vector<std::pair<std::string, End>> order;
    if (const auto* br = std::get_if<Branching>(&node.kind)) {
        for (const auto& a : br->attachments) order.emplace_back(a.vessel, a.end);
    } else if (const auto* tr = std::get_if<Transitional>(&node.kind)) {
        for (const auto& a : tr->arteries) order.emplace_back(a.vessel, End::x1);
        for (const auto& a : tr->veins) order.emplace_back(a.vessel, End::x0);
    } else {
        for (const auto& ep : endpoints_of(net, node_id)) order.emplace_back(ep.vessel, ep.end);
    }
    std::vector<EndpointClosureInput> inputs;
    for (const auto& [vid, end] : order) {
        const auto& f = st.field(vid);
        const int j = endpoint_index(f, end);
        const auto cs = coefficients(net.vessel(vid), f.x(j), f.at(j), epsilon0);
        const auto eig = eigen(cs);
        const auto rs = to_riemann(cs, eig, f.at(j));
        inputs.push_back(make_endpoint_input(vid, end, cs, eig, end == End::x0 ? rs.s : rs.r, f.Q[j]));
    }
    return inputs;
}

}  // namespace bloodnet
