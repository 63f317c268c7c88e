#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace bloodnet;
using Catch::Matchers::WithinAbs;

TEST_CASE("table signal interpolates and extrapolates by constants") {
    const auto sig = BoundarySignal{make_table_signal({{0, 1}, {1, 3}})};
    CHECK(eval_signal(sig, 0.5) == 2.0);
    CHECK(eval_signal(sig, 5.0) == 3.0);
    CHECK(eval_signal(sig, 0.0) == 1.0);
    CHECK(eval_signal(sig, -1.0) == 1.0);
}

TEST_CASE("sine and constant signals are exact") {
    CHECK_THAT(eval_signal(SineSignal{0, 1, 1, 0}, 0.25), WithinAbs(1.0, 1e-15));
    CHECK_THAT(eval_signal(SineSignal{2, 3, 0.5, std::numbers::pi / 2}, 0.0), WithinAbs(5.0, 1e-15));
    CHECK(eval_signal(ConstantSignal{7.5}, 123.0) == 7.5);
}

TEST_CASE("table signal validation") {
    CHECK_THROWS_AS(make_table_signal({{1, 0}, {0, 1}}), ConfigError);
    CHECK_THROWS_AS(make_table_signal({{0, 0}, {0, 1}}), ConfigError);
    CHECK_THROWS_AS(make_table_signal({{0, 0}}), ConfigError);
}

TEST_CASE("profiles sample onto the grid") {
    const auto c = sample_profile(ConstantProfile{2.0}, 4);
    CHECK(c == std::vector<double>(5, 2.0));

    const auto t = sample_profile(TableProfile{{0.0, 1.0}, {0.0, 4.0}}, 4);
    CHECK(t == std::vector<double>{0, 1, 2, 3, 4});

    const std::vector<double> s{1, 2, 3};
    CHECK(sample_profile(SampledProfile{s}, 2) == s);
    CHECK_THROWS_AS(sample_profile(SampledProfile{s}, 3), ConfigError);

    const auto g = sample_profile(GaussianProfile{1.0, 2.0, 0.5, 0.1}, 2);
    CHECK_THAT(g[1], WithinAbs(3.0, 1e-15));
    CHECK_THAT(g[0], WithinAbs(1.0 + 2.0 * std::exp(-25.0), 1e-15));

    CHECK_THAT(eval_profile(SineProfile{0, 1, 1, 0}, 0.25), WithinAbs(1.0, 1e-15));
}

TEST_CASE("sampled profile evaluates linearly between nodes") {
    const Profile p = SampledProfile{{0.0, 2.0, 6.0}};
    CHECK_THAT(eval_profile(p, 0.25), WithinAbs(1.0, 1e-15));
    CHECK_THAT(eval_profile(p, 0.75), WithinAbs(4.0, 1e-15));
    CHECK(eval_profile(p, 1.0) == 6.0);
}
