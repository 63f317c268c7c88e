#pragma once

// Time signals for boundary data and scalar profiles over x in [0,1].

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bloodnet/errors.hpp"

namespace bloodnet {

namespace detail {

// Piecewise-linear lookup with constant extrapolation. `xs` strictly increasing.
inline double interp_linear(std::span<const double> xs, std::span<const double> ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto k = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return (1.0 - w) * ys[k] + w * ys[k + 1];
}

inline bool strictly_increasing(std::span<const double> xs) {
    return std::adjacent_find(xs.begin(), xs.end(),
                              [](double l, double r) { return !(l < r); }) == xs.end();
}

}  // namespace detail

struct ConstantSignal {
    double value = 0.0;
    bool operator==(const ConstantSignal&) const = default;
};

struct TableSignal {
    std::vector<double> times;
    std::vector<double> values;
    bool operator==(const TableSignal&) const = default;
};

/// mean + amplitude * sin(2*pi*frequency*t + phase)
struct SineSignal {
    double mean = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    bool operator==(const SineSignal&) const = default;
};

using BoundarySignal = std::variant<ConstantSignal, TableSignal, SineSignal>;

inline TableSignal make_table_signal(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw ConfigError("table signal needs at least 2 points");
    TableSignal sig;
    for (const auto& [t, v] : points) {
        sig.times.push_back(t);
        sig.values.push_back(v);
    }
    if (!detail::strictly_increasing(sig.times))
        throw ConfigError("table signal times must be strictly increasing");
    return sig;
}

inline double eval_signal(const BoundarySignal& sig, double t) {
    struct Visitor {
        double t;
        double operator()(const ConstantSignal& s) const { return s.value; }
        double operator()(const TableSignal& s) const {
            return detail::interp_linear(s.times, s.values, t);
        }
        double operator()(const SineSignal& s) const {
            return s.mean +
                   s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
        }
    };
    return std::visit(Visitor{t}, sig);
}

// --- profiles over x -------------------------------------------------------

struct ConstantProfile {
    double value = 0.0;
    bool operator==(const ConstantProfile&) const = default;
};

/// Nodal samples on the uniform grid x_j = j/(size-1); linear in between.
struct SampledProfile {
    std::vector<double> values;
    bool operator==(const SampledProfile&) const = default;
};

struct TableProfile {
    std::vector<double> xs;
    std::vector<double> values;
    bool operator==(const TableProfile&) const = default;
};

/// mean + amplitude * sin(2*pi*frequency*x + phase)
struct SineProfile {
    double mean = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    bool operator==(const SineProfile&) const = default;
};

/// base + amplitude * exp(-((x-center)/width)^2)
struct GaussianProfile {
    double base = 0.0;
    double amplitude = 0.0;
    double center = 0.5;
    double width = 0.1;
    bool operator==(const GaussianProfile&) const = default;
};

using Profile =
    std::variant<ConstantProfile, SampledProfile, TableProfile, SineProfile, GaussianProfile>;

inline double eval_profile(const Profile& p, double x) {
    struct Visitor {
        double x;
        double operator()(const ConstantProfile& c) const { return c.value; }
        double operator()(const SampledProfile& s) const {
            const auto n = s.values.size();
            if (n == 1) return s.values.front();
            const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
            const auto k = std::min(static_cast<std::size_t>(pos), n - 2);
            const double w = pos - static_cast<double>(k);
            return (1.0 - w) * s.values[k] + w * s.values[k + 1];
        }
        double operator()(const TableProfile& t) const {
            return detail::interp_linear(t.xs, t.values, x);
        }
        double operator()(const SineProfile& s) const {
            return s.mean +
                   s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * x + s.phase);
        }
        double operator()(const GaussianProfile& g) const {
            const double z = (x - g.center) / g.width;
            return g.base + g.amplitude * std::exp(-z * z);
        }
    };
    return std::visit(Visitor{x}, p);
}

/// Samples `p` on x_j = j/n_cells. A SampledProfile must already have n_cells+1 entries.
inline std::vector<double> sample_profile(const Profile& p, int n_cells) {
    if (const auto* s = std::get_if<SampledProfile>(&p)) {
        if (s->values.size() != static_cast<std::size_t>(n_cells) + 1)
            throw ConfigError("sampled profile has " + std::to_string(s->values.size()) +
                              " values, grid needs " + std::to_string(n_cells + 1));
        return s->values;
    }
    std::vector<double> out(static_cast<std::size_t>(n_cells) + 1);
    for (int j = 0; j <= n_cells; ++j) out[j] = eval_profile(p, static_cast<double>(j) / n_cells);
    return out;
}

}  // namespace bloodnet
