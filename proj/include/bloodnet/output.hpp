#pragma once

// Probe records and CSV writers. Numbers are written in shortest round-trip
// form so identical runs give byte-identical files.

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "bloodnet/constitutive.hpp"
#include "bloodnet/errors.hpp"
#include "bloodnet/junctions.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/state.hpp"

namespace bloodnet {

enum class Quantity { P, Q, A, R, V, P_C1, P_C2, Q_C, P_junc };

inline const char* to_string(Quantity q) {
    switch (q) {
        case Quantity::P: return "P";
        case Quantity::Q: return "Q";
        case Quantity::A: return "A";
        case Quantity::R: return "R";
        case Quantity::V: return "V";
        case Quantity::P_C1: return "P_C1";
        case Quantity::P_C2: return "P_C2";
        case Quantity::Q_C: return "Q_C";
        case Quantity::P_junc: return "P_junc";
    }
    return "?";
}

inline Quantity parse_quantity(const std::string& s) {
    for (auto q : {Quantity::P, Quantity::Q, Quantity::A, Quantity::R, Quantity::V, Quantity::P_C1,
                   Quantity::P_C2, Quantity::Q_C, Quantity::P_junc})
        if (s == to_string(q)) return q;
    throw ConfigError("unknown probe quantity '" + s + "'");
}

inline bool is_vessel_quantity(Quantity q) { return q <= Quantity::V; }

struct ProbeSpec {
    enum class Target { vessel, node };
    Target target = Target::vessel;
    std::string id;
    std::optional<int> x_index;
    std::optional<double> x_fraction;
    std::vector<Quantity> quantities;
    bool operator==(const ProbeSpec&) const = default;

    int grid_index(int n_cells) const {
        if (x_index) return *x_index;
        return static_cast<int>(std::lround(x_fraction.value_or(0.0) * n_cells));
    }
};

/// Empty if the probe fits the network, else the reason.
inline std::string probe_defect(const Network& net, const ProbeSpec& p) {
    if (p.quantities.empty()) return "probe on '" + p.id + "' has no quantities";
    if (p.target == ProbeSpec::Target::vessel) {
        const auto it = net.vessels.find(p.id);
        if (it == net.vessels.end()) return "probe references unknown vessel '" + p.id + "'";
        if (p.x_index && p.x_fraction) return "probe on '" + p.id + "' sets both x_index and x_fraction";
        if (p.x_index && (*p.x_index < 0 || *p.x_index > it->second.n_cells))
            return "probe x_index " + std::to_string(*p.x_index) + " out of range for '" + p.id + "'";
        if (p.x_fraction && !(*p.x_fraction >= 0.0 && *p.x_fraction <= 1.0))
            return "probe x_fraction out of [0,1] for '" + p.id + "'";
        for (auto q : p.quantities)
            if (!is_vessel_quantity(q))
                return std::string("quantity ") + to_string(q) + " is not a vessel quantity";
        return {};
    }
    const auto it = net.nodes.find(p.id);
    if (it == net.nodes.end()) return "probe references unknown node '" + p.id + "'";
    const bool br = std::holds_alternative<Branching>(it->second.kind);
    const bool tr = std::holds_alternative<Transitional>(it->second.kind);
    for (auto q : p.quantities) {
        const bool ok = (q == Quantity::P_junc && br) ||
                        ((q == Quantity::P_C1 || q == Quantity::P_C2 || q == Quantity::Q_C) && tr);
        if (!ok) return std::string("quantity ") + to_string(q) + " not available at node '" + p.id + "'";
    }
    return {};
}

struct ProbeRecord {
    double t = 0.0;
    ProbeSpec::Target target = ProbeSpec::Target::vessel;
    std::string id;
    std::optional<double> x;
    Quantity quantity = Quantity::P;
    double value = 0.0;
};

/// Records in probe declaration order, then quantity order.
inline std::vector<ProbeRecord> probe_records(const Network& net, const NetworkState& st,
                                              const std::vector<ProbeSpec>& probes) {
    std::vector<ProbeRecord> out;
    for (const auto& p : probes) {
        if (p.target == ProbeSpec::Target::vessel) {
            const auto& v = net.vessel(p.id);
            const auto& f = st.field(p.id);
            const int j = p.grid_index(f.n_cells());
            const double x = f.x(j);
            const auto s = f.at(j);
            const double A = evaluate_coefficients(v, x, s).A;
            for (auto q : p.quantities) {
                double val = 0.0;
                switch (q) {
                    case Quantity::P: val = s.P; break;
                    case Quantity::Q: val = s.Q; break;
                    case Quantity::A: val = A; break;
                    case Quantity::R: val = std::sqrt(A / std::numbers::pi); break;
                    case Quantity::V: val = s.Q / A; break;
                    default: break;
                }
                out.push_back({st.t, p.target, p.id, x, q, val});
            }
        } else {
            const auto& node = net.node(p.id);
            for (auto q : p.quantities) {
                double val = 0.0;
                if (q == Quantity::P_junc) {
                    val = st.junction_pressure.at(p.id);
                } else {
                    const auto& cap = st.transitional.at(p.id);
                    if (q == Quantity::P_C1) val = cap.P_C1;
                    else if (q == Quantity::P_C2) val = cap.P_C2;
                    else val = capillary_flow(std::get<Transitional>(node.kind), cap);
                }
                out.push_back({st.t, p.target, p.id, std::nullopt, q, val});
            }
        }
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw Error("number formatting failed");
    return {buf, res.ptr};
}

inline constexpr const char* kProbeHeader = "t,kind,id,x,quantity,value";

/// Streams probe records as CSV. Throws on stream failure.
class CsvSink {
public:
    explicit CsvSink(std::ostream& os) : os_(os) {}

    void write_header() {
        os_ << kProbeHeader << '\n';
        check();
    }

    void write(const std::vector<ProbeRecord>& records) {
        for (const auto& r : records) {
            os_ << format_double(r.t) << ',' << (r.target == ProbeSpec::Target::vessel ? "vessel" : "node") << ','
                << r.id << ',' << (r.x ? format_double(*r.x) : std::string{}) << ',' << to_string(r.quantity)
                << ',' << format_double(r.value) << '\n';
            ++rows_;
        }
        check();
    }

    long rows() const { return rows_; }

private:
    void check() {
        if (!os_) throw Error("failed writing CSV output");
    }

    std::ostream& os_;
    long rows_ = 0;
};

/// Full nodal fields of every vessel at one time level.
inline void write_snapshot(std::ostream& os, const Network& net, const NetworkState& st) {
    os << "t,vessel,j,x,P,Q,A\n";
    for (const auto& [id, v] : net.vessels) {
        const auto& f = st.field(id);
        for (int j = 0; j <= f.n_cells(); ++j) {
            const double A = evaluate_coefficients(v, f.x(j), f.at(j)).A;
            os << format_double(st.t) << ',' << id << ',' << j << ',' << format_double(f.x(j)) << ','
               << format_double(f.P[j]) << ',' << format_double(f.Q[j]) << ',' << format_double(A) << '\n';
        }
    }
    if (!os) throw Error("failed writing snapshot");
}

}  // namespace bloodnet
