#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace bloodnet;

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

// Random tree: each new vessel leaves an existing branching point or the
// root inlet; leaves end at pressure outlets.
Network random_tree(Rng& g, int n_vessels) {
    Network net;
    ts::add(net, "in", ExternalFlow{ConstantSignal{0.0}});
    std::vector<std::string> tips;  // vessels whose x1 end is still open
    ts::add(net, ts::physical_vessel("v0", uniform_int(g, 2, 8), "in", "", 0.1));
    tips.push_back("v0");
    std::map<std::string, std::vector<std::string>> children;
    for (int k = 1; k < n_vessels; ++k) {
        const auto parent = tips[uniform_int(g, 0, static_cast<int>(tips.size()) - 1)];
        const auto id = "v" + std::to_string(k);
        ts::add(net, ts::physical_vessel(id, uniform_int(g, 2, 8), "j_" + parent, "", 0.1));
        children[parent].push_back(id);
        tips.push_back(id);
    }
    for (auto& [id, v] : net.vessels) {
        const auto it = children.find(id);
        if (it == children.end()) {
            v.x1_node = "out_" + id;
            ts::add(net, v.x1_node, ExternalPressure{ConstantSignal{0.0}});
            continue;
        }
        v.x1_node = "j_" + id;
        Branching br;
        br.attachments.push_back({id, End::x1, ts::uniform(g, 1, 100), 0.0});
        for (const auto& c : it->second) br.attachments.push_back({c, End::x0, ts::uniform(g, 1, 100), 0.0});
        ts::add(net, v.x1_node, br);
    }
    return net;
}

Profile random_profile(Rng& g, int n) {
    switch (uniform_int(g, 0, 4)) {
        case 0: return ConstantProfile{ts::uniform(g, -5, 5)};
        case 1: {
            std::vector<double> v(n + 1);
            for (auto& x : v) x = ts::uniform(g, -5, 5);
            return SampledProfile{v};
        }
        case 2: return TableProfile{{0.0, ts::uniform(g, 0.1, 0.9), 1.0}, {ts::uniform(g, -1, 1), ts::uniform(g, -1, 1), ts::uniform(g, -1, 1)}};
        case 3: return SineProfile{ts::uniform(g, -1, 1), ts::uniform(g, 0, 1), ts::uniform(g, 0.5, 3), ts::uniform(g, -3, 3)};
        default: return GaussianProfile{ts::uniform(g, -1, 1), ts::uniform(g, 0, 1), ts::uniform(g, 0, 1), ts::uniform(g, 0.05, 0.5)};
    }
}

BoundarySignal random_signal(Rng& g) {
    switch (uniform_int(g, 0, 2)) {
        case 0: return ConstantSignal{ts::uniform(g, -5, 5)};
        case 1: return TableSignal{{0.0, ts::uniform(g, 0.1, 1.0)}, {ts::uniform(g, -1, 1), ts::uniform(g, -1, 1)}};
        default: return SineSignal{ts::uniform(g, -1, 1), ts::uniform(g, 0, 1), ts::uniform(g, 0.5, 3), ts::uniform(g, -3, 3)};
    }
}

EndpointClosureInput physical_input(Rng& g, const std::string& id, End end) {
    const auto v = ts::physical_vessel(id, 10, "a", "b", 0.2, ts::power_model(26250, ts::uniform(g, 2e-3, 6e-3), 2));
    const PrimitiveState st{ts::uniform(g, -2e3, 5e3), ts::uniform(g, -2e-5, 2e-5)};
    const auto cs = coefficients(v, end == End::x0 ? 0.0 : 1.0, st);
    const auto e = eigen(cs);
    const auto rs = to_riemann(cs, e, st);
    return make_endpoint_input(id, end, cs, e, end == End::x0 ? rs.s : rs.r, st.Q + ts::uniform(g, -1e-6, 1e-6));
}

}  // namespace

TEST_CASE("valid networks attach each vessel end exactly once") {
    auto g = ts::rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = random_tree(g, uniform_int(g, 1, 12));
        REQUIRE(validate_network(net).empty());
        std::size_t slots = 0;
        for (const auto& [nid, _] : net.nodes) {
            const auto a = endpoints_of(net, nid), b = endpoints_of(net, nid);
            REQUIRE(a == b);
            slots += a.size();
        }
        REQUIRE(slots == 2 * net.vessels.size());
    }
}

TEST_CASE("eigenvalues are ordered and lambda_R is positive where ab > 0") {
    auto g = ts::rng(52);
    for (int i = 0; i < 10000; ++i) {
        const auto cs = ts::random_hyperbolic(g);
        const auto e = eigen(cs);
        REQUIRE(e.lambda_L < e.lambda_R);
        if (cs.a * cs.b > 0.0) {
            REQUIRE(e.lambda_R > 0.0);
            REQUIRE(e.lambda_L < 0.0);
        }
    }
}

TEST_CASE("cond3 verdict agrees with the eigenvalue signs") {
    auto g = ts::rng(53);
    for (int trial = 0; trial < 500; ++trial) {
        SyntheticModel m;
        m.a = ConstantProfile{ts::uniform(g, 0.1, 3)};
        m.b = TableProfile{{0.0, 1.0}, {ts::uniform(g, -1, 2), ts::uniform(g, -1, 2)}};
        m.c = TableProfile{{0.0, 1.0}, {ts::uniform(g, -2, 2), ts::uniform(g, -2, 2)}};
        const auto net = ts::single_vessel(ts::synthetic_vessel("v", 4, "", "", m));
        const auto st = initial_state(net, {}).state;
        const auto rep = check_endpoints(net, st);
        for (End e : {End::x0, End::x1}) {
            const auto cs = coefficients(net.vessel("v"), e == End::x0 ? 0.0 : 1.0, {});
            if (!(hyperbolicity_margin(cs) > 0.0)) continue;
            const auto eig = eigen(cs);
            const bool expect = eig.lambda_L < 0.0 && 0.0 < eig.lambda_R;
            REQUIRE(rep.entries[e == End::x0 ? 0 : 1].passed == expect);
        }
    }
}

TEST_CASE("characteristic feet are monotone in the target") {
    auto g = ts::rng(54);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = uniform_int(g, 5, 40);
        SyntheticModel m;
        m.b = ConstantProfile{ts::uniform(g, 0.5, 2)};
        m.a = TableProfile{{0.0, 1.0}, {ts::uniform(g, 0.5, 2), ts::uniform(g, 0.5, 2)}};
        m.c = TableProfile{{0.0, ts::uniform(g, 0.2, 0.8), 1.0}, {ts::uniform(g, -1, 1), ts::uniform(g, -1, 1), ts::uniform(g, -1, 1)}};
        const auto v = ts::synthetic_vessel("v", n, "a", "b", m);
        const auto f = make_field("v", 0.0, n);
        auto lv = evaluate_level(v, f);
        double smax = 0;
        for (const auto& e : lv.eig) smax = std::max({smax, std::abs(e.lambda_L), std::abs(e.lambda_R)});
        const double dt = 0.8 / (smax * n);
        auto next = f;
        next.t = dt;
        const CharacteristicKernel k(f, next, {lv, evaluate_level(v, next), dt});
        for (Family fam : {Family::R, Family::L}) {
            double prev = -INFINITY;
            for (int i = 0; i <= 4 * n; ++i) {
                const double foot = k.trace_foot(static_cast<double>(i) / (4 * n), fam).x_foot;
                REQUIRE(foot >= prev);
                prev = foot;
            }
        }
    }
}

TEST_CASE("constant Riemann fields are reproduced bit for bit") {
    auto g = ts::rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cs = ts::random_endpoint(g);
        SyntheticModel m;
        m.a = ConstantProfile{cs.a};
        m.b = ConstantProfile{cs.b};
        m.c = ConstantProfile{cs.c};
        const int n = uniform_int(g, 2, 30);
        const auto v = ts::synthetic_vessel("v", n, "a", "b", m);
        const auto f = make_field("v", 0.0, n, {ts::uniform(g, -5, 5), ts::uniform(g, -5, 5)});
        const auto e = eigen(cs);
        const double dt = 0.5 / (std::max(std::abs(e.lambda_L), std::abs(e.lambda_R)) * n);
        auto next = f;
        next.t = dt;
        const auto up = interior_update(CharacteristicKernel(f, next, {evaluate_level(v, f), evaluate_level(v, next), dt}));
        const auto rs = to_riemann(cs, e, f.at(0));
        for (int j = 0; j <= n; ++j) {
            if (up.r_new[j]) REQUIRE(*up.r_new[j] == rs.r);
            if (up.s_new[j]) REQUIRE(*up.s_new[j] == rs.s);
        }
    }
}

TEST_CASE("external closures keep the outgoing Riemann variable") {
    auto g = ts::rng(56);
    for (int i = 0; i < 1000; ++i) {
        const End end = i % 2 ? End::x0 : End::x1;
        const auto in = physical_input(g, "v", end);
        const auto st = i % 4 < 2 ? close_external_pressure(in, ts::uniform(g, -1e3, 1e4))
                                  : close_external_flow(in, ts::uniform(g, -1e-5, 1e-5));
        const auto rs = to_riemann(in.cs, in.eig, st);
        const double out = end == End::x0 ? rs.s : rs.r;
        REQUIRE(std::abs(out - in.relation.gamma) <= 1e-12 * std::max(1.0, std::abs(in.relation.gamma)) * 1e3);
    }
}

TEST_CASE("branching closure: mass balance and characteristic consistency") {
    auto g = ts::rng(57);
    for (int trial = 0; trial < 500; ++trial) {
        const int n_in = uniform_int(g, 1, 2), n_out = uniform_int(g, 1, 3);
        Branching br;
        std::vector<EndpointClosureInput> inputs;
        for (int k = 0; k < n_in + n_out; ++k) {
            const End end = k < n_in ? End::x1 : End::x0;
            const auto id = "v" + std::to_string(k);
            br.attachments.push_back({id, end, ts::uniform(g, 0.1, 100), ts::uniform(g, -10, 10)});
            inputs.push_back(physical_input(g, id, end));
        }
        const auto sol = solve_junction(assemble_branching("j", br, inputs, ts::uniform(g, 1e-5, 1e-3)));
        double bal = 0.0, tot = 0.0;
        for (int k = 0; k < n_in + n_out; ++k) {
            const auto& st = sol.endpoints[k];
            bal += (k < n_in ? 1.0 : -1.0) * st.Q;
            tot += std::abs(st.Q);
            const auto rs = to_riemann(inputs[k].cs, inputs[k].eig, st);
            const double out = inputs[k].end == End::x0 ? rs.s : rs.r;
            const double ref = inputs[k].relation.gamma;
            // Relative to the size of the terms that cancel in the relation.
            const double scale = std::abs(inputs[k].eig.lambda_R * st.P) + std::abs(inputs[k].cs.a * st.Q) + std::abs(ref);
            REQUIRE(std::abs(out - ref) <= 1e-10 * scale);
        }
        REQUIRE(std::abs(bal) <= 1e-10 * std::max(1.0, tot));
    }
}

TEST_CASE("two-vessel connector approaches pressure continuity as rho shrinks") {
    auto g = ts::rng(58);
    for (int trial = 0; trial < 50; ++trial) {
        Branching br;
        br.attachments = {{"u", End::x1, 1.0, 0.0}, {"d", End::x0, 1.0, 0.0}};
        const std::vector<EndpointClosureInput> inputs{physical_input(g, "u", End::x1), physical_input(g, "d", End::x0)};
        double prev = INFINITY, first = 0.0;
        for (double rho : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
            for (auto& a : br.attachments) a.rho = rho;
            const auto sol = solve_junction(assemble_branching("j", br, inputs, 1e-4));
            const double gap = std::abs(sol.endpoints[0].P - sol.endpoints[1].P);
            REQUIRE(gap <= prev);
            if (rho == 1e-2) first = gap;
            prev = gap;
        }
        REQUIRE(prev <= 1e-3 * first);
    }
}

TEST_CASE("envelope margins never worsen when the envelope shrinks") {
    auto g = ts::rng(59);
    const auto net = ts::y_network(6);
    const int N = 9;
    const double P_lo = -5e3, P_hi = 3e4, Q_lo = -3e-4, Q_hi = 3e-4;
    const auto full = check_envelope(net, {P_lo, P_hi}, {Q_lo, Q_hi}, N);
    for (int trial = 0; trial < 30; ++trial) {
        // Sub-envelopes aligned with the full grid so every sample is shared;
        // Q = 0 lies on both grids.
        int i0 = uniform_int(g, 0, N - 2), i1 = uniform_int(g, i0 + 1, N - 1);
        auto at = [&](double lo, double hi, int i) { return lo + (hi - lo) * i / (N - 1); };
        const auto sub = check_envelope(net, {at(P_lo, P_hi, i0), at(P_lo, P_hi, i1)}, {0.0, 0.0}, i1 - i0 + 1);
        for (const auto& e : sub.entries) {
            const auto* f = full.find(e.subject, e.condition);
            REQUIRE(f);
            if (std::isfinite(e.worst_margin))
                REQUIRE(e.worst_margin >= f->worst_margin - 1e-12 * std::abs(f->worst_margin));
        }
    }
}

TEST_CASE("normalized dump round trips random scenarios") {
    auto g = ts::rng(60);
    for (int trial = 0; trial < 100; ++trial) {
        Scenario sc;
        const int n = uniform_int(g, 2, 10);
        SyntheticModel m;
        m.a = ConstantProfile{ts::uniform(g, 0.5, 2)};
        m.b = ConstantProfile{ts::uniform(g, 0.5, 2)};
        m.c = random_profile(g, n);
        m.f = random_profile(g, n);
        m.g = random_profile(g, n);
        sc.network = ts::single_vessel(ts::synthetic_vessel("v", n, "", "", m), random_signal(g), random_signal(g));
        sc.network.nodes.at("out").kind = ExternalFlow{random_signal(g)};
        sc.solver.dt = ts::uniform(g, 1e-5, 1e-2);
        sc.solver.t_end = ts::uniform(g, 0, 10);
        sc.solver.picard_tol = ts::uniform(g, 1e-14, 1e-6);
        sc.initial.vessels["v"] = {random_profile(g, n), random_profile(g, n)};
        ProbeSpec p;
        p.id = "v";
        p.x_fraction = ts::uniform(g, 0, 1);
        p.quantities = {Quantity::P, Quantity::V};
        sc.probes.push_back(p);
        sc.output.snapshots = {ts::uniform(g, 0, 1)};
        const auto text = dump_config(sc).dump();
        const auto back = load_config_string(text);
        REQUIRE(back == sc);
    }
}

TEST_CASE("identical runs are bit-identical") {
    const auto net = ts::y_network(12);
    SimConfig cfg;
    cfg.dt = 5e-4;
    cfg.t_end = 0.05;
    const auto init = initial_state(net, {}).state;
    const auto a = run(net, init, cfg), b = run(net, init, cfg);
    CHECK(a.final_state == b.final_state);
    CHECK(a.iterations_per_step == b.iterations_per_step);
}

TEST_CASE("global mass balance error shrinks with dt") {
    // Flow in at x = 0 and out at x = 1 of one elastic vessel: the volume
    // change must equal the net inflow.
    auto net = ts::single_vessel(ts::physical_vessel("v", 40, "", "", 0.2));
    net.nodes.at("in").kind = ExternalFlow{SineSignal{0, 2e-5, 5, 0}};
    net.nodes.at("out").kind = ExternalFlow{SineSignal{0, 1e-5, 10, 0}};
    const auto& in_sig = std::get<ExternalFlow>(net.node("in").kind).signal;
    const auto& out_sig = std::get<ExternalFlow>(net.node("out").kind).signal;
    std::vector<double> errs;
    for (double dt : {2e-4, 1e-4, 5e-5}) {
        // Refine space with time so the ratio dt/dx stays fixed.
        auto net_k = net;
        net_k.vessels.at("v").n_cells = static_cast<int>(std::lround(40 * 2e-4 / dt));
        SimConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 0.1;
        const auto init = initial_state(net_k, {}).state;
        const auto rep = run(net_k, init, cfg);
        // Net inflow by a fine quadrature of the boundary signals.
        double influx = 0.0;
        const int K = 20000;
        for (int k = 0; k < K; ++k) {
            const double t = (k + 0.5) * cfg.t_end / K;
            influx += (eval_signal(in_sig, t) - eval_signal(out_sig, t)) * cfg.t_end / K;
        }
        auto vol = [&](const NetworkState& st) {
            const auto& f = st.field("v");
            const auto& vk = net_k.vessel("v");
            double s = 0.0;
            for (int j = 0; j <= f.n_cells(); ++j) {
                const double A = evaluate_coefficients(vk, f.x(j), f.at(j)).A;
                s += (j == 0 || j == f.n_cells() ? 0.5 : 1.0) * A;
            }
            return s * f.dx() * vk.length;
        };
        errs.push_back(std::abs(vol(rep.final_state) - vol(init) - influx) / std::abs(influx));
    }
    INFO(errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] < 1e-2);
}
