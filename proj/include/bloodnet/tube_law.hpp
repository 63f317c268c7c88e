#pragma once

// Pressure-radius laws P(x, R) with dP/dR > 0.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "bloodnet/errors.hpp"

namespace bloodnet {

/// P = C * ((R/R0)^beta - 1)
struct PowerLaw {
    double C = 0.0;     // Pa
    double R0 = 0.0;    // m
    double beta = 0.0;  // dimensionless
    bool operator==(const PowerLaw&) const = default;
};

/// Monotone (R, P) samples at one axial station.
struct TubeStation {
    double x = 0.0;
    std::vector<double> R;
    std::vector<double> P;
    bool operator==(const TubeStation&) const = default;
};

/// Monotone-cubic in R at each station, linear in x between stations.
struct TabulatedLaw {
    std::vector<TubeStation> stations;  // sorted by x
    bool operator==(const TabulatedLaw&) const = default;
};

using TubeLaw = std::variant<PowerLaw, TabulatedLaw>;

namespace detail {

// Fritsch-Butland slopes for a monotone piecewise-cubic Hermite interpolant.
inline std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> m(n);
    if (n == 2) {
        m[0] = m[1] = (y[1] - y[0]) / (x[1] - x[0]);
        return m;
    }
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        d[k] = (y[k + 1] - y[k]) / h[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (d[k - 1] * d[k] <= 0.0) {
            m[k] = 0.0;
        } else {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    m.front() = d.front();
    m.back() = d.back();
    return m;
}

struct HermiteEval {
    double value;
    double slope;
};

inline HermiteEval pchip_eval(const TubeStation& st, double R) {
    // Slopes recomputed per call; stations are small (tens of samples).
    const auto m = pchip_slopes(st.R, st.P);
    const auto& xs = st.R;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), R) - xs.begin());
    k = std::clamp<std::size_t>(k, 1, xs.size() - 1) - 1;
    const double h = xs[k + 1] - xs[k];
    const double s = (R - xs[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double v = h00 * st.P[k] + h10 * h * m[k] + h01 * st.P[k + 1] + h11 * h * m[k + 1];
    const double dh00 = 6 * s2 - 6 * s, dh10 = 3 * s2 - 4 * s + 1;
    const double dh01 = -6 * s2 + 6 * s, dh11 = 3 * s2 - 2 * s;
    const double dv =
        (dh00 * st.P[k] + dh01 * st.P[k + 1]) / h + dh10 * m[k] + dh11 * m[k + 1];
    return {v, dv};
}

struct StationBracket {
    const TubeStation* lo;
    const TubeStation* hi;
    double w;  // weight of hi
};

inline StationBracket bracket(const TabulatedLaw& law, double x) {
    const auto& st = law.stations;
    if (st.size() == 1 || x <= st.front().x) return {&st.front(), &st.front(), 0.0};
    if (x >= st.back().x) return {&st.back(), &st.back(), 0.0};
    std::size_t k = 0;
    while (st[k + 1].x < x) ++k;
    const double w = (x - st[k].x) / (st[k + 1].x - st[k].x);
    return {&st[k], &st[k + 1], w};
}

}  // namespace detail

struct RadiusRange {
    double lo;
    double hi;
};

/// Admissible radius interval at x (unbounded above for PowerLaw).
inline RadiusRange radius_range(const TubeLaw& law, double x) {
    if (std::holds_alternative<PowerLaw>(law)) return {0.0, INFINITY};
    const auto b = detail::bracket(std::get<TabulatedLaw>(law), x);
    return {std::max(b.lo->R.front(), b.hi->R.front()), std::min(b.lo->R.back(), b.hi->R.back())};
}

struct PressureAndSlope {
    double P;
    double dP_dR;
};

inline PressureAndSlope pressure_and_slope(const TubeLaw& law, double x, double R) {
    if (const auto* pw = std::get_if<PowerLaw>(&law)) {
        if (!(R > 0.0)) throw DomainError("radius must be positive");
        const double ratio = std::pow(R / pw->R0, pw->beta);
        return {pw->C * (ratio - 1.0), pw->C * pw->beta * ratio / R};
    }
    const auto range = radius_range(law, x);
    if (R < range.lo || R > range.hi)
        throw DomainError("radius " + std::to_string(R) + " outside tabulated range");
    const auto b = detail::bracket(std::get<TabulatedLaw>(law), x);
    const auto lo = detail::pchip_eval(*b.lo, R);
    if (b.w == 0.0) return {lo.value, lo.slope};
    const auto hi = detail::pchip_eval(*b.hi, R);
    return {(1.0 - b.w) * lo.value + b.w * hi.value, (1.0 - b.w) * lo.slope + b.w * hi.slope};
}

inline double pressure_from_radius(const TubeLaw& law, double x, double R) {
    return pressure_and_slope(law, x, R).P;
}

inline double radius_from_pressure(const TubeLaw& law, double x, double P) {
    if (const auto* pw = std::get_if<PowerLaw>(&law)) {
        const double base = 1.0 + P / pw->C;
        if (!(base > 0.0))
            throw DomainError("pressure " + std::to_string(P) + " below power-law range (-C)");
        return pw->R0 * std::pow(base, 1.0 / pw->beta);
    }
    const auto range = radius_range(law, x);
    const double P_lo = pressure_from_radius(law, x, range.lo);
    const double P_hi = pressure_from_radius(law, x, range.hi);
    if (P < P_lo || P > P_hi)
        throw DomainError("pressure " + std::to_string(P) + " outside tabulated range");
    // Safeguarded Newton on the monotone residual.
    const double tol = 1e-14 * std::max(1.0, std::abs(P));
    double a = range.lo, b = range.hi;
    double R = a + (b - a) * (P - P_lo) / (P_hi - P_lo);
    for (int it = 0; it < 100; ++it) {
        const auto ps = pressure_and_slope(law, x, R);
        const double res = ps.P - P;
        if (std::abs(res) <= tol) return R;
        if (res > 0.0) b = R; else a = R;
        double next = ps.dP_dR > 0.0 ? R - res / ps.dP_dR : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (next == R) return R;
        R = next;
    }
    return R;
}

/// Area form: P as a function of A = pi R^2, and a = dP/dA.
struct AreaSlope {
    double P;
    double dP_dA;
};

inline AreaSlope pressure_from_area(const TubeLaw& law, double x, double A) {
    const double R = std::sqrt(A / std::numbers::pi);
    const auto ps = pressure_and_slope(law, x, R);
    return {ps.P, ps.dP_dR / (2.0 * std::numbers::pi * R)};
}

inline double area_from_pressure(const TubeLaw& law, double x, double P) {
    const double R = radius_from_pressure(law, x, P);
    return std::numbers::pi * R * R;
}

inline bool depends_on_x(const TubeLaw& law) {
    const auto* tab = std::get_if<TabulatedLaw>(&law);
    return tab != nullptr && tab->stations.size() > 1;
}

/// dA/dx at fixed P, by centered differences. Zero for x-independent laws.
inline double area_x_derivative(const TubeLaw& law, double x, double P) {
    if (!depends_on_x(law)) return 0.0;
    constexpr double h = 1e-5;
    const double xl = std::max(0.0, x - h), xr = std::min(1.0, x + h);
    return (area_from_pressure(law, xr, P) - area_from_pressure(law, xl, P)) / (xr - xl);
}

/// Empty string if the law is admissible, otherwise a description of the defect.
inline std::string tube_law_defect(const TubeLaw& law) {
    if (const auto* pw = std::get_if<PowerLaw>(&law)) {
        if (!(pw->C > 0.0)) return "power law C must be > 0";
        if (!(pw->R0 > 0.0)) return "power law R0 must be > 0";
        if (!(pw->beta > 0.0)) return "power law beta must be > 0";
        return {};
    }
    const auto& tab = std::get<TabulatedLaw>(law);
    if (tab.stations.empty()) return "tabulated law has no stations";
    for (std::size_t k = 0; k < tab.stations.size(); ++k) {
        const auto& st = tab.stations[k];
        if (k > 0 && !(st.x > tab.stations[k - 1].x)) return "station x must increase";
        if (st.R.size() != st.P.size() || st.R.size() < 2)
            return "station needs >= 2 matching (R, P) samples";
        for (std::size_t i = 0; i + 1 < st.R.size(); ++i) {
            if (!(st.R[i + 1] > st.R[i])) return "station R must increase";
            if (!(st.P[i + 1] > st.P[i])) return "station P must increase strictly with R";
        }
        if (!(st.R.front() > 0.0)) return "station radii must be positive";
    }
    for (std::size_t k = 0; k + 1 < tab.stations.size(); ++k) {
        const auto& a = tab.stations[k];
        const auto& b = tab.stations[k + 1];
        if (std::max(a.R.front(), b.R.front()) >= std::min(a.R.back(), b.R.back()))
            return "adjacent stations have disjoint radius ranges";
    }
    return {};
}

}  // namespace bloodnet
