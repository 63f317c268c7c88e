#pragma once

// Vessel-network graph: vessels on x in [0,1], nodes closing their ends.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bloodnet/errors.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/tube_law.hpp"

namespace bloodnet {

enum class End { x0, x1 };
enum class Orientation { incoming, outgoing };

inline const char* to_string(End e) { return e == End::x0 ? "x0" : "x1"; }
inline const char* to_string(Orientation o) {
    return o == Orientation::incoming ? "incoming" : "outgoing";
}

/// Area/flow model: (A,Q) balance laws closed by a tube law.
struct PhysicalModel {
    double alpha = 1.1;       // momentum-correction factor, > 1
    double nu = 3.3e-6;       // kinematic viscosity, m^2/s
    double rho_blood = 1050;  // kg/m^3
    TubeLaw tube_law = PowerLaw{};
    bool operator==(const PhysicalModel&) const = default;
};

/// Coefficients of the (P,Q) system given directly as functions of x.
/// They do not depend on the state, so the problem is linear.
struct SyntheticModel {
    Profile a = ConstantProfile{1.0};
    Profile b = ConstantProfile{1.0};
    Profile c = ConstantProfile{0.0};
    Profile f = ConstantProfile{0.0};
    Profile g = ConstantProfile{0.0};
    Profile A = ConstantProfile{1.0};
    bool operator==(const SyntheticModel&) const = default;
};

using VesselModel = std::variant<PhysicalModel, SyntheticModel>;

struct Vessel {
    std::string id;
    int n_cells = 0;
    double length = 1.0;  // m; the solver works on the rescaled coordinate x/length
    std::string x0_node;
    std::string x1_node;
    VesselModel model = PhysicalModel{};

    const std::string& node_at(End e) const { return e == End::x0 ? x0_node : x1_node; }
    bool operator==(const Vessel&) const = default;
};

struct ExternalPressure {
    BoundarySignal signal = ConstantSignal{};
    bool operator==(const ExternalPressure&) const = default;
};

struct ExternalFlow {
    BoundarySignal signal = ConstantSignal{};
    bool operator==(const ExternalFlow&) const = default;
};

struct BranchAttachment {
    std::string vessel;
    End end = End::x1;
    double rho = 0.0;       // inertance constant of the momentum balance
    double c_offset = 0.0;  // additive offset in the momentum balance (zero for the physical model)
    bool operator==(const BranchAttachment&) const = default;
};

struct Branching {
    std::vector<BranchAttachment> attachments;
    bool operator==(const Branching&) const = default;
};

struct ResistiveAttachment {
    std::string vessel;
    double resistance = 0.0;  // Pa s / m^3
    bool operator==(const ResistiveAttachment&) const = default;
};

/// Arteriole/capillary/venule lump: R_j - C1 - R_C - C2 - R_j'.
struct Transitional {
    std::vector<ResistiveAttachment> arteries;  // attached at x1
    std::vector<ResistiveAttachment> veins;     // attached at x0
    double R_C = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    std::optional<double> P_C1_init;
    std::optional<double> P_C2_init;
    bool operator==(const Transitional&) const = default;
};

using NodeKind = std::variant<ExternalPressure, ExternalFlow, Branching, Transitional>;

struct Node {
    std::string id;
    NodeKind kind;
    bool operator==(const Node&) const = default;
};

struct Network {
    std::map<std::string, Vessel> vessels;
    std::map<std::string, Node> nodes;

    const Vessel& vessel(const std::string& id) const {
        const auto it = vessels.find(id);
        if (it == vessels.end()) throw ConfigError("unknown vessel id '" + id + "'");
        return it->second;
    }
    const Node& node(const std::string& id) const {
        const auto it = nodes.find(id);
        if (it == nodes.end()) throw ConfigError("unknown node id '" + id + "'");
        return it->second;
    }
    bool operator==(const Network&) const = default;
};

enum class Severity { warning, error };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string subject;  // vessel or node id
    std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& ds) {
    return std::any_of(ds.begin(), ds.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

struct Endpoint {
    std::string vessel;
    End end;
    Orientation orientation;
    bool operator==(const Endpoint&) const = default;
};

inline Orientation orientation_of(End e) {
    return e == End::x1 ? Orientation::incoming : Orientation::outgoing;
}

namespace detail {

struct Slot {
    std::string vessel;
    std::optional<End> required_end;  // nullopt for external nodes
};

inline std::vector<Slot> node_slots(const Network& net, const Node& node) {
    std::vector<Slot> slots;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Branching>) {
                for (const auto& a : k.attachments) slots.push_back({a.vessel, a.end});
            } else if constexpr (std::is_same_v<K, Transitional>) {
                for (const auto& a : k.arteries) slots.push_back({a.vessel, End::x1});
                for (const auto& a : k.veins) slots.push_back({a.vessel, End::x0});
            } else {
                for (const auto& [vid, v] : net.vessels) {
                    if (v.x0_node == node.id) slots.push_back({vid, End::x0});
                    if (v.x1_node == node.id) slots.push_back({vid, End::x1});
                }
            }
        },
        node.kind);
    return slots;
}

}  // namespace detail

/// Vessel ends attached to a node, sorted by vessel id then end.
inline std::vector<Endpoint> endpoints_of(const Network& net, const std::string& node_id) {
    const Node& node = net.node(node_id);
    std::vector<Endpoint> out;
    for (const auto& s : detail::node_slots(net, node)) {
        End e = s.required_end.value_or(End::x0);
        if (!s.required_end) {
            const auto& v = net.vessel(s.vessel);
            e = v.x0_node == node_id ? End::x0 : End::x1;
        }
        out.push_back({s.vessel, e, orientation_of(e)});
    }
    std::sort(out.begin(), out.end(), [](const Endpoint& l, const Endpoint& r) {
        return l.vessel != r.vessel ? l.vessel < r.vessel : l.end < r.end;
    });
    return out;
}

inline std::vector<Diagnostic> validate_network(const Network& net) {
    std::vector<Diagnostic> diags;
    auto error = [&](const std::string& id, std::string msg) {
        diags.push_back({Severity::error, id, std::move(msg)});
    };

    for (const auto& [id, v] : net.vessels) {
        if (v.id != id) error(id, "vessel key does not match its id");
        if (v.n_cells < 2) error(id, "n_cells must be >= 2");
        if (!(v.length > 0.0)) error(id, "length must be > 0");
        if (v.x0_node == v.x1_node) error(id, "self-loop: both ends attach to node '" + v.x0_node + "'");
        for (End e : {End::x0, End::x1}) {
            if (!net.nodes.contains(v.node_at(e)))
                error(id, std::string("end ") + to_string(e) + " references unknown node '" +
                              v.node_at(e) + "'");
        }
        if (const auto* pm = std::get_if<PhysicalModel>(&v.model)) {
            if (!(pm->alpha > 1.0)) error(id, "alpha must be > 1");
            if (!(pm->nu > 0.0)) error(id, "nu must be > 0");
            if (!(pm->rho_blood > 0.0)) error(id, "rho_blood must be > 0");
            if (auto defect = tube_law_defect(pm->tube_law); !defect.empty()) error(id, defect);
        }
    }

    std::set<std::pair<std::string, End>> claimed;
    for (const auto& [nid, node] : net.nodes) {
        if (node.id != nid) error(nid, "node key does not match its id");
        const auto slots = detail::node_slots(net, node);
        for (const auto& s : slots) {
            const auto it = net.vessels.find(s.vessel);
            if (it == net.vessels.end()) {
                error(nid, "attachment references unknown vessel '" + s.vessel + "'");
                continue;
            }
            if (s.required_end && it->second.node_at(*s.required_end) != nid) {
                error(nid, "vessel '" + s.vessel + "' end " + to_string(*s.required_end) +
                               " is not attached to this node");
                continue;
            }
            const End e = s.required_end.value_or(it->second.x0_node == nid ? End::x0 : End::x1);
            if (!claimed.insert({s.vessel, e}).second) {
                error(nid, "vessel '" + s.vessel + "' end " + to_string(e) + " attached twice");
            }
        }
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ExternalPressure> || std::is_same_v<K, ExternalFlow>) {
                    if (slots.size() != 1)
                        error(nid, "external node must attach exactly one vessel end, found " +
                                       std::to_string(slots.size()));
                    if (const auto* t = std::get_if<TableSignal>(&k.signal)) {
                        if (t->times.size() < 2 || t->times.size() != t->values.size() ||
                            !detail::strictly_increasing(t->times))
                            error(nid, "table signal needs >= 2 points with increasing times");
                    }
                } else if constexpr (std::is_same_v<K, Branching>) {
                    const auto n_in = std::count_if(k.attachments.begin(), k.attachments.end(),
                                                    [](const auto& a) { return a.end == End::x1; });
                    const auto n_out = static_cast<long>(k.attachments.size()) - n_in;
                    if (k.attachments.size() < 2 || n_in < 1 || n_out < 1)
                        error(nid, "branching node needs >= 2 attachments with at least one "
                                   "incoming (x1) and one outgoing (x0)");
                    for (const auto& a : k.attachments)
                        if (!(a.rho > 0.0)) error(nid, "rho for vessel '" + a.vessel + "' must be > 0");
                } else {
                    if (k.arteries.empty() || k.veins.empty())
                        error(nid, "transitional node needs >= 1 artery and >= 1 vein");
                    for (const auto* group : {&k.arteries, &k.veins})
                        for (const auto& a : *group)
                            if (!(a.resistance > 0.0))
                                error(nid, "resistance for vessel '" + a.vessel + "' must be > 0");
                    if (!(k.R_C > 0.0)) error(nid, "R_C must be > 0");
                    if (!(k.C1 > 0.0)) error(nid, "C1 must be > 0");
                    if (!(k.C2 > 0.0)) error(nid, "C2 must be > 0");
                }
            },
            node.kind);
    }

    // Every vessel end must be claimed by the node it names.
    for (const auto& [id, v] : net.vessels) {
        for (End e : {End::x0, End::x1}) {
            if (net.nodes.contains(v.node_at(e)) && !claimed.contains({id, e}))
                error(v.node_at(e), "node does not list vessel '" + id + "' end " + to_string(e));
        }
    }

    // Connectivity (warning only).
    if (!net.vessels.empty()) {
        std::map<std::string, std::string> parent;
        std::function<std::string(const std::string&)> find = [&](const std::string& s) {
            auto it = parent.find(s);
            if (it == parent.end() || it->second == s) return parent[s] = s;
            return it->second = find(it->second);
        };
        for (const auto& [id, v] : net.vessels) {
            parent.try_emplace("v:" + id, "v:" + id);
            for (End e : {End::x0, End::x1}) {
                const auto a = find("v:" + id), b = find("n:" + v.node_at(e));
                parent[a] = b;
            }
        }
        std::set<std::string> roots;
        for (const auto& [id, v] : net.vessels) roots.insert(find("v:" + id));
        if (roots.size() > 1)
            diags.push_back({Severity::warning, "network",
                             "network has " + std::to_string(roots.size()) + " disconnected components"});
    }
    return diags;
}

}  // namespace bloodnet
