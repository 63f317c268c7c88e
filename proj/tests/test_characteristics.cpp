#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace bloodnet;
using Catch::Matchers::WithinAbs;

namespace {

VesselField field_from(const std::string& id, double t, int n, const std::function<PrimitiveState(double)>& fn) {
    auto f = make_field(id, t, n);
    for (int j = 0; j <= n; ++j) {
        const auto st = fn(f.x(j));
        f.P[j] = st.P;
        f.Q[j] = st.Q;
    }
    return f;
}

CharacteristicKernel frozen_kernel(const Vessel& v, const VesselField& prev, double dt, double cfl = 0.9) {
    auto next = prev;
    next.t += dt;
    return CharacteristicKernel(prev, next, {evaluate_level(v, prev), evaluate_level(v, next), dt}, cfl);
}

}  // namespace

TEST_CASE("foot of a linearly varying speed is third-order accurate") {
    // c = x - 1 and b = 1 - (x-1)^2 give u = 1 and lambda_R = x, so the exact
    // foot of the characteristic through x is x exp(-dt).
    const int n = 20;
    std::vector<double> b(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = static_cast<double>(j) / n;
        b[j] = 1.0 - (x - 1.0) * (x - 1.0);
    }
    SyntheticModel m;
    m.b = SampledProfile{b};
    m.c = TableProfile{{0.0, 1.0}, {-1.0, 0.0}};
    const auto v = ts::synthetic_vessel("v", n, "a", "b", m);
    const auto prev = make_field("v", 0.0, n);
    for (double dt : {0.02, 0.01, 0.005}) {
        const auto k = frozen_kernel(v, prev, dt);
        for (double x : {0.3, 0.55, 1.0}) {
            const auto foot = k.trace_foot(x, Family::R);
            REQUIRE(foot.where == CharFoot::Where::interior);
            const double exact = x * std::exp(-dt);
            CHECK(std::abs(foot.x_foot - exact) <= x * dt * dt * dt / 6.0 * 1.01 + 1e-15);
        }
    }
}

TEST_CASE("constant coefficients translate linear data exactly") {
    const int n = 10;
    const auto v = ts::synthetic_vessel("v", n, "a", "b");
    const auto prev = field_from("v", 0.0, n, [](double x) { return PrimitiveState{2 * x + 1, x}; });
    const double dt = 0.05;
    const auto up = interior_update(frozen_kernel(v, prev, dt));
    // r = P + Q moves right, s = -P + Q moves left, both at unit speed.
    for (int j = 0; j <= n; ++j) {
        const double x = static_cast<double>(j) / n;
        if (j > 0) CHECK_THAT(*up.r_new[j], WithinAbs(3 * (x - dt) + 1, 1e-14));
        else CHECK_FALSE(up.r_new[j]);
        if (j < n) CHECK_THAT(*up.s_new[j], WithinAbs(-(x + dt) - 1, 1e-14));
        else CHECK_FALSE(up.s_new[j]);
    }
    CHECK(up.s_at_x0() == *up.s_new[0]);
    CHECK(up.r_at_x1() == *up.r_new[n]);
}

TEST_CASE("uniform forcing is integrated exactly") {
    // P = f t, Q = g t solves the system with constant forcing.
    SyntheticModel m;
    m.f = ConstantProfile{2.0};
    m.g = ConstantProfile{-0.5};
    const int n = 8;
    const auto v = ts::synthetic_vessel("v", n, "a", "b", m);
    const auto prev = make_field("v", 0.0, n);
    const double dt = 0.1;
    const auto up = interior_update(frozen_kernel(v, prev, dt));
    for (int j = 1; j <= n; ++j) CHECK_THAT(*up.r_new[j], WithinAbs(dt * 1.5, 1e-15));
    for (int j = 0; j < n; ++j) CHECK_THAT(*up.s_new[j], WithinAbs(dt * -2.5, 1e-15));
}

TEST_CASE("eigenvector transport term keeps a steady state steady") {
    // a = 1 + x, b = 1/a, c = 0: unit speeds, and constant (P, Q) is steady.
    // r = P + aQ varies in x, so the update relies on d_R l_R = (0, a_x).
    const int n = 16;
    std::vector<double> b(n + 1);
    for (int j = 0; j <= n; ++j) b[j] = 1.0 / (1.0 + static_cast<double>(j) / n);
    SyntheticModel m;
    m.a = TableProfile{{0.0, 1.0}, {1.0, 2.0}};
    m.b = SampledProfile{b};
    const auto v = ts::synthetic_vessel("v", n, "a", "b", m);
    const double p = 0.7, q = -1.3;
    const auto prev = make_field("v", 0.0, n, {p, q});
    const auto up = interior_update(frozen_kernel(v, prev, 0.04));
    for (int j = 0; j <= n; ++j) {
        const double a = 1.0 + static_cast<double>(j) / n;
        if (up.r_new[j]) CHECK_THAT(*up.r_new[j], WithinAbs(p + a * q, 1e-13));
        if (up.s_new[j]) CHECK_THAT(*up.s_new[j], WithinAbs(-p + a * q, 1e-13));
    }
}

TEST_CASE("CFL limit is enforced") {
    const auto v = ts::synthetic_vessel("v", 10, "a", "b");
    const auto prev = make_field("v", 0.0, 10);
    const auto k = frozen_kernel(v, prev, 0.1, 0.9);
    CHECK_THAT(k.courant(), WithinAbs(1.0, 1e-14));
    CHECK_THROWS_AS(interior_update(k), CflViolation);
    CHECK_NOTHROW(interior_update(frozen_kernel(v, prev, 0.1, 1.0)));
}

TEST_CASE("no outgoing characteristic at an end is reported") {
    // Both speeds positive: nothing leaves through x = 0.
    SyntheticModel m;
    m.b = ConstantProfile{-0.5};
    m.c = ConstantProfile{1.0};
    const auto v = ts::synthetic_vessel("v", 10, "a", "b", m);
    const auto prev = make_field("v", 0.0, 10);
    CHECK_THROWS_AS(interior_update(frozen_kernel(v, prev, 0.01)), HyperbolicityViolation);
}

TEST_CASE("grid interpolation and derivatives") {
    const std::vector<double> v{0.0, 1.0, 4.0};
    CHECK(detail::lerp_grid(v, 0.25) == 0.5);
    CHECK(detail::lerp_grid(v, 1.0) == 4.0);
    CHECK(detail::lerp_grid(v, 2.0) == 4.0);
    CHECK(detail::grid_derivative(v, 0) == 2.0);
    CHECK(detail::grid_derivative(v, 1) == 4.0);
    CHECK(detail::grid_derivative(v, 2) == 6.0);
}
