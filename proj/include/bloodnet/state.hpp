#pragma once

#include <map>
#include <string>

#include "bloodnet/characteristics.hpp"
#include "bloodnet/junctions.hpp"

namespace bloodnet {

/// Per-vessel fields plus node-internal states at one time level.
struct NetworkState {
    double t = 0.0;
    std::map<std::string, VesselField> fields;
    std::map<std::string, TransitionalState> transitional;
    std::map<std::string, double> junction_pressure;  // branching nodes

    const VesselField& field(const std::string& vessel) const {
        const auto it = fields.find(vessel);
        if (it == fields.end()) throw Error("no field for vessel '" + vessel + "'");
        return it->second;
    }

    bool operator==(const NetworkState&) const = default;
};

inline int endpoint_index(const VesselField& f, End e) { return e == End::x0 ? 0 : f.n_cells(); }

inline PrimitiveState endpoint_state(const NetworkState& st, const std::string& vessel, End e) {
    const auto& f = st.field(vessel);
    return f.at(endpoint_index(f, e));
}

}  // namespace bloodnet
