#pragma once

// JSON scenario files. Top-level sections: vessels, nodes, solver, initial,
// probes, output. See README.md for the schema.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bloodnet/errors.hpp"
#include "bloodnet/network.hpp"
#include "bloodnet/output.hpp"
#include "bloodnet/signal.hpp"
#include "bloodnet/solver.hpp"
#include "bloodnet/tube_law.hpp"

namespace bloodnet {

using json = nlohmann::json;

struct OutputSpec {
    std::string dir = "output";
    std::string csv = "probes.csv";
    std::vector<double> snapshots;
    bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
    Network network;
    SimConfig solver;
    InitSpec initial;
    std::vector<ProbeSpec> probes;
    OutputSpec output;
    std::vector<Diagnostic> warnings;  // non-fatal validate_network findings

    bool operator==(const Scenario& o) const {
        return network == o.network && solver == o.solver && initial == o.initial && probes == o.probes &&
               output == o.output;
    }
};

namespace detail {

// A JSON value plus its path inside the document, for error messages.
class Cursor {
public:
    Cursor(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    Cursor at(const char* key) const {
        if (!j_.is_object()) fail("expected an object");
        if (!j_.contains(key)) fail(std::string("missing field '") + key + "'");
        return {j_.at(key), path_ + "." + key};
    }

    Cursor at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    std::size_t size() const { return j_.size(); }

    const Cursor& require_object() const {
        if (!j_.is_object()) fail("expected an object");
        return *this;
    }
    const Cursor& require_array() const {
        if (!j_.is_array()) fail("expected an array");
        return *this;
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }
    int integer() const {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<int>();
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::vector<double> numbers() const {
        require_array();
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
        return out;
    }

    double number(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    int integer(const char* key, int fallback) const { return has(key) ? at(key).integer() : fallback; }

    void allow_keys(std::initializer_list<const char*> keys) const {
        for (const auto& [k, _] : j_.items())
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                fail("unknown field '" + k + "'");
    }

private:
    const json& j_;
    std::string path_;
};

inline std::vector<std::pair<double, double>> parse_points(const Cursor& n) {
    n.require_array();
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const auto p = n.at(i);
        const auto v = p.numbers();
        if (v.size() != 2) p.fail("expected a [x, value] pair");
        pts.emplace_back(v[0], v[1]);
    }
    return pts;
}

inline BoundarySignal parse_signal(const Cursor& n) {
    if (n.raw().is_number()) return ConstantSignal{n.number()};
    n.require_object();
    const auto type = n.at("type").string();
    if (type == "constant") {
        n.allow_keys({"type", "value"});
        return ConstantSignal{n.at("value").number()};
    }
    if (type == "table") {
        n.allow_keys({"type", "points"});
        try {
            return make_table_signal(parse_points(n.at("points")));
        } catch (const ConfigError& e) {
            if (std::string(e.what()).rfind(n.path(), 0) == 0) throw;
            n.fail(e.what());
        }
    }
    if (type == "sine") {
        n.allow_keys({"type", "mean", "amplitude", "frequency", "phase"});
        return SineSignal{n.number("mean", 0.0), n.at("amplitude").number(), n.at("frequency").number(),
                          n.number("phase", 0.0)};
    }
    n.fail("unknown signal type '" + type + "'");
}

inline Profile parse_profile(const Cursor& n) {
    if (n.raw().is_number()) return ConstantProfile{n.number()};
    if (n.raw().is_array()) return SampledProfile{n.numbers()};
    n.require_object();
    const auto type = n.at("type").string();
    if (type == "constant") {
        n.allow_keys({"type", "value"});
        return ConstantProfile{n.at("value").number()};
    }
    if (type == "sampled") {
        n.allow_keys({"type", "values"});
        auto v = n.at("values").numbers();
        if (v.size() < 2) n.fail("sampled profile needs >= 2 values");
        return SampledProfile{std::move(v)};
    }
    if (type == "table") {
        n.allow_keys({"type", "points"});
        const auto pts = parse_points(n.at("points"));
        if (pts.size() < 2) n.fail("table profile needs >= 2 points");
        TableProfile p;
        for (const auto& [x, v] : pts) {
            p.xs.push_back(x);
            p.values.push_back(v);
        }
        if (!strictly_increasing(p.xs)) n.fail("table profile x must be strictly increasing");
        return p;
    }
    if (type == "sine") {
        n.allow_keys({"type", "mean", "amplitude", "frequency", "phase"});
        return SineProfile{n.number("mean", 0.0), n.at("amplitude").number(), n.at("frequency").number(),
                           n.number("phase", 0.0)};
    }
    if (type == "gaussian") {
        n.allow_keys({"type", "base", "amplitude", "center", "width"});
        const GaussianProfile g{n.number("base", 0.0), n.at("amplitude").number(), n.number("center", 0.5),
                                n.number("width", 0.1)};
        if (!(g.width > 0.0)) n.fail("gaussian width must be > 0");
        return g;
    }
    n.fail("unknown profile type '" + type + "'");
}

inline TubeLaw parse_tube_law(const Cursor& n) {
    n.require_object();
    const auto type = n.at("type").string();
    TubeLaw law;
    if (type == "power") {
        n.allow_keys({"type", "C", "R0", "beta"});
        law = PowerLaw{n.at("C").number(), n.at("R0").number(), n.at("beta").number()};
    } else if (type == "tabulated") {
        n.allow_keys({"type", "stations"});
        TabulatedLaw tab;
        const auto st = n.at("stations").require_array();
        for (std::size_t i = 0; i < st.size(); ++i) {
            const auto s = st.at(i).require_object();
            s.allow_keys({"x", "R", "P"});
            tab.stations.push_back({s.at("x").number(), s.at("R").numbers(), s.at("P").numbers()});
        }
        law = std::move(tab);
    } else {
        n.fail("unknown tube law type '" + type + "'");
    }
    if (const auto d = tube_law_defect(law); !d.empty()) n.fail(d);
    return law;
}

inline VesselModel parse_model(const Cursor& n) {
    n.require_object();
    const auto type = n.at("type").string();
    if (type == "physical") {
        n.allow_keys({"type", "alpha", "nu", "rho", "tube_law"});
        PhysicalModel m;
        m.alpha = n.number("alpha", m.alpha);
        m.nu = n.number("nu", m.nu);
        m.rho_blood = n.number("rho", m.rho_blood);
        m.tube_law = parse_tube_law(n.at("tube_law"));
        if (!(m.alpha > 1.0)) n.fail("alpha must be > 1");
        if (!(m.nu >= 0.0)) n.fail("nu must be >= 0");
        if (!(m.rho_blood > 0.0)) n.fail("rho must be > 0");
        return m;
    }
    if (type == "synthetic") {
        n.allow_keys({"type", "a", "b", "c", "f", "g", "A"});
        SyntheticModel m;
        if (n.has("a")) m.a = parse_profile(n.at("a"));
        if (n.has("b")) m.b = parse_profile(n.at("b"));
        if (n.has("c")) m.c = parse_profile(n.at("c"));
        if (n.has("f")) m.f = parse_profile(n.at("f"));
        if (n.has("g")) m.g = parse_profile(n.at("g"));
        if (n.has("A")) m.A = parse_profile(n.at("A"));
        return m;
    }
    n.fail("unknown model type '" + type + "'");
}

inline End parse_end(const Cursor& n) {
    const auto s = n.string();
    if (s == "x0") return End::x0;
    if (s == "x1") return End::x1;
    n.fail("end must be \"x0\" or \"x1\"");
}

inline NodeKind parse_node_kind(const Cursor& n) {
    const auto type = n.at("type").string();
    if (type == "pressure" || type == "flow") {
        n.allow_keys({"id", "type", "signal"});
        const auto sig = parse_signal(n.at("signal"));
        if (type == "pressure") return ExternalPressure{sig};
        return ExternalFlow{sig};
    }
    if (type == "branching") {
        n.allow_keys({"id", "type", "attachments"});
        Branching br;
        const auto atts = n.at("attachments").require_array();
        for (std::size_t i = 0; i < atts.size(); ++i) {
            const auto a = atts.at(i).require_object();
            a.allow_keys({"vessel", "end", "rho", "c_offset"});
            br.attachments.push_back(
                {a.at("vessel").string(), parse_end(a.at("end")), a.at("rho").number(), a.number("c_offset", 0.0)});
        }
        return br;
    }
    if (type == "transitional") {
        n.allow_keys({"id", "type", "arteries", "veins", "R_C", "C1", "C2", "P_C1_init", "P_C2_init"});
        Transitional tr;
        auto side = [&](const char* key, std::vector<ResistiveAttachment>& out) {
            const auto arr = n.at(key).require_array();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const auto a = arr.at(i).require_object();
                a.allow_keys({"vessel", "resistance"});
                out.push_back({a.at("vessel").string(), a.at("resistance").number()});
            }
        };
        side("arteries", tr.arteries);
        side("veins", tr.veins);
        tr.R_C = n.at("R_C").number();
        tr.C1 = n.at("C1").number();
        tr.C2 = n.at("C2").number();
        if (n.has("P_C1_init")) tr.P_C1_init = n.at("P_C1_init").number();
        if (n.has("P_C2_init")) tr.P_C2_init = n.at("P_C2_init").number();
        return tr;
    }
    n.fail("unknown node type '" + type + "'");
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Builds a validated scenario from a parsed document.
inline Scenario parse_config(const json& doc) {
    const detail::Cursor root(doc, "$");
    root.require_object();
    root.allow_keys({"vessels", "nodes", "solver", "initial", "probes", "output"});
    Scenario sc;

    const auto vessels = root.at("vessels").require_array();
    for (std::size_t i = 0; i < vessels.size(); ++i) {
        const auto v = vessels.at(i).require_object();
        v.allow_keys({"id", "n_cells", "length", "x0_node", "x1_node", "model"});
        Vessel vs;
        vs.id = v.at("id").string();
        vs.n_cells = v.at("n_cells").integer();
        vs.length = v.number("length", 1.0);
        vs.x0_node = v.at("x0_node").string();
        vs.x1_node = v.at("x1_node").string();
        vs.model = detail::parse_model(v.at("model"));
        if (sc.network.vessels.count(vs.id)) v.fail("duplicate vessel id '" + vs.id + "'");
        sc.network.vessels.emplace(vs.id, std::move(vs));
    }

    const auto nodes = root.at("nodes").require_array();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto n = nodes.at(i).require_object();
        Node node{n.at("id").string(), detail::parse_node_kind(n)};
        if (sc.network.nodes.count(node.id)) n.fail("duplicate node id '" + node.id + "'");
        sc.network.nodes.emplace(node.id, std::move(node));
    }

    if (root.has("solver")) {
        const auto s = root.at("solver").require_object();
        s.allow_keys({"dt", "t_end", "cfl_max", "picard_tol", "picard_max_iters", "epsilon0", "check_every"});
        auto& c = sc.solver;
        c.dt = s.at("dt").number();
        c.t_end = s.at("t_end").number();
        c.cfl_max = s.number("cfl_max", c.cfl_max);
        c.picard_tol = s.number("picard_tol", c.picard_tol);
        c.picard_max_iters = s.integer("picard_max_iters", c.picard_max_iters);
        c.epsilon0 = s.number("epsilon0", c.epsilon0);
        c.check_every = s.integer("check_every", c.check_every);
        try {
            validate(c);
        } catch (const ConfigError& e) {
            s.fail(e.what());
        }
    } else {
        root.fail("missing field 'solver'");
    }

    if (root.has("initial")) {
        const auto ini = root.at("initial").require_object();
        for (const auto& [vid, _] : ini.raw().items()) {
            const auto e = ini.at(vid.c_str()).require_object();
            e.allow_keys({"P", "Q"});
            if (!sc.network.vessels.count(vid)) e.fail("unknown vessel '" + vid + "'");
            VesselInit vi;
            if (e.has("P")) vi.P = detail::parse_profile(e.at("P"));
            if (e.has("Q")) vi.Q = detail::parse_profile(e.at("Q"));
            sc.initial.vessels[vid] = std::move(vi);
        }
    }

    if (root.has("probes")) {
        const auto probes = root.at("probes").require_array();
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const auto p = probes.at(i).require_object();
            p.allow_keys({"vessel", "node", "x_index", "x_fraction", "quantities"});
            ProbeSpec ps;
            if (p.has("vessel") == p.has("node")) p.fail("probe needs exactly one of 'vessel' or 'node'");
            ps.target = p.has("vessel") ? ProbeSpec::Target::vessel : ProbeSpec::Target::node;
            ps.id = p.has("vessel") ? p.at("vessel").string() : p.at("node").string();
            if (p.has("x_index")) ps.x_index = p.at("x_index").integer();
            if (p.has("x_fraction")) ps.x_fraction = p.at("x_fraction").number();
            const auto qs = p.at("quantities").require_array();
            for (std::size_t k = 0; k < qs.size(); ++k) {
                try {
                    ps.quantities.push_back(parse_quantity(qs.at(k).string()));
                } catch (const ConfigError& e) {
                    if (std::string(e.what()).rfind("$", 0) == 0) throw;
                    qs.at(k).fail(e.what());
                }
            }
            if (const auto d = probe_defect(sc.network, ps); !d.empty()) p.fail(d);
            sc.probes.push_back(std::move(ps));
        }
    }

    if (root.has("output")) {
        const auto o = root.at("output").require_object();
        o.allow_keys({"dir", "csv", "snapshots"});
        if (o.has("dir")) sc.output.dir = o.at("dir").string();
        if (o.has("csv")) sc.output.csv = o.at("csv").string();
        if (o.has("snapshots")) sc.output.snapshots = o.at("snapshots").numbers();
        for (double t : sc.output.snapshots)
            if (!(t >= 0.0)) o.fail("snapshot times must be >= 0");
    }

    std::string errors;
    for (auto& d : validate_network(sc.network)) {
        if (d.severity == Severity::error) errors += "\n  [" + d.subject + "] " + d.message;
        else sc.warnings.push_back(std::move(d));
    }
    if (!errors.empty()) throw ConfigError("invalid network:" + errors);
    return sc;
}

inline Scenario load_config_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
    return parse_config(doc);
}

inline Scenario load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return load_config_string(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// --- normalized output ----------------------------------------------------------

namespace detail {

inline json points_json(const std::vector<double>& xs, const std::vector<double>& vs) {
    json pts = json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], vs[i]});
    return pts;
}

inline json to_json(const BoundarySignal& s) {
    if (const auto* c = std::get_if<ConstantSignal>(&s)) return {{"type", "constant"}, {"value", c->value}};
    if (const auto* t = std::get_if<TableSignal>(&s))
        return {{"type", "table"}, {"points", points_json(t->times, t->values)}};
    const auto& sn = std::get<SineSignal>(s);
    return {{"type", "sine"}, {"mean", sn.mean}, {"amplitude", sn.amplitude}, {"frequency", sn.frequency},
            {"phase", sn.phase}};
}

inline json to_json(const Profile& p) {
    struct V {
        json operator()(const ConstantProfile& c) const { return {{"type", "constant"}, {"value", c.value}}; }
        json operator()(const SampledProfile& s) const { return {{"type", "sampled"}, {"values", s.values}}; }
        json operator()(const TableProfile& t) const {
            return {{"type", "table"}, {"points", points_json(t.xs, t.values)}};
        }
        json operator()(const SineProfile& s) const {
            return {{"type", "sine"}, {"mean", s.mean}, {"amplitude", s.amplitude}, {"frequency", s.frequency},
                    {"phase", s.phase}};
        }
        json operator()(const GaussianProfile& g) const {
            return {{"type", "gaussian"}, {"base", g.base}, {"amplitude", g.amplitude}, {"center", g.center},
                    {"width", g.width}};
        }
    };
    return std::visit(V{}, p);
}

inline json to_json(const TubeLaw& law) {
    if (const auto* pw = std::get_if<PowerLaw>(&law))
        return {{"type", "power"}, {"C", pw->C}, {"R0", pw->R0}, {"beta", pw->beta}};
    json st = json::array();
    for (const auto& s : std::get<TabulatedLaw>(law).stations) st.push_back({{"x", s.x}, {"R", s.R}, {"P", s.P}});
    return {{"type", "tabulated"}, {"stations", st}};
}

inline json to_json(const VesselModel& m) {
    if (const auto* pm = std::get_if<PhysicalModel>(&m))
        return {{"type", "physical"}, {"alpha", pm->alpha}, {"nu", pm->nu}, {"rho", pm->rho_blood},
                {"tube_law", to_json(pm->tube_law)}};
    const auto& s = std::get<SyntheticModel>(m);
    return {{"type", "synthetic"}, {"a", to_json(s.a)}, {"b", to_json(s.b)}, {"c", to_json(s.c)},
            {"f", to_json(s.f)},   {"g", to_json(s.g)}, {"A", to_json(s.A)}};
}

inline json to_json(const Node& node) {
    json j{{"id", node.id}};
    if (const auto* ep = std::get_if<ExternalPressure>(&node.kind)) {
        j["type"] = "pressure";
        j["signal"] = to_json(ep->signal);
    } else if (const auto* ef = std::get_if<ExternalFlow>(&node.kind)) {
        j["type"] = "flow";
        j["signal"] = to_json(ef->signal);
    } else if (const auto* br = std::get_if<Branching>(&node.kind)) {
        j["type"] = "branching";
        j["attachments"] = json::array();
        for (const auto& a : br->attachments)
            j["attachments"].push_back(
                {{"vessel", a.vessel}, {"end", to_string(a.end)}, {"rho", a.rho}, {"c_offset", a.c_offset}});
    } else {
        const auto& tr = std::get<Transitional>(node.kind);
        j["type"] = "transitional";
        auto side = [](const std::vector<ResistiveAttachment>& v) {
            json arr = json::array();
            for (const auto& a : v) arr.push_back({{"vessel", a.vessel}, {"resistance", a.resistance}});
            return arr;
        };
        j["arteries"] = side(tr.arteries);
        j["veins"] = side(tr.veins);
        j["R_C"] = tr.R_C;
        j["C1"] = tr.C1;
        j["C2"] = tr.C2;
        if (tr.P_C1_init) j["P_C1_init"] = *tr.P_C1_init;
        if (tr.P_C2_init) j["P_C2_init"] = *tr.P_C2_init;
    }
    return j;
}

}  // namespace detail

inline json solver_json(const SimConfig& c) {
    return {{"dt", c.dt},
            {"t_end", c.t_end},
            {"cfl_max", c.cfl_max},
            {"picard_tol", c.picard_tol},
            {"picard_max_iters", c.picard_max_iters},
            {"epsilon0", c.epsilon0},
            {"check_every", c.check_every}};
}

/// Normalized document with every default made explicit.
inline json dump_config(const Scenario& sc) {
    json doc;
    doc["vessels"] = json::array();
    for (const auto& [id, v] : sc.network.vessels)
        doc["vessels"].push_back({{"id", v.id},
                                  {"n_cells", v.n_cells},
                                  {"length", v.length},
                                  {"x0_node", v.x0_node},
                                  {"x1_node", v.x1_node},
                                  {"model", detail::to_json(v.model)}});
    doc["nodes"] = json::array();
    for (const auto& [id, n] : sc.network.nodes) doc["nodes"].push_back(detail::to_json(n));
    doc["solver"] = solver_json(sc.solver);
    doc["initial"] = json::object();
    for (const auto& [vid, vi] : sc.initial.vessels)
        doc["initial"][vid] = {{"P", detail::to_json(vi.P)}, {"Q", detail::to_json(vi.Q)}};
    doc["probes"] = json::array();
    for (const auto& p : sc.probes) {
        json j;
        j[p.target == ProbeSpec::Target::vessel ? "vessel" : "node"] = p.id;
        if (p.x_index) j["x_index"] = *p.x_index;
        if (p.x_fraction) j["x_fraction"] = *p.x_fraction;
        j["quantities"] = json::array();
        for (auto q : p.quantities) j["quantities"].push_back(to_string(q));
        doc["probes"].push_back(j);
    }
    doc["output"] = {{"dir", sc.output.dir}, {"csv", sc.output.csv}, {"snapshots", sc.output.snapshots}};
    return doc;
}

}  // namespace bloodnet
