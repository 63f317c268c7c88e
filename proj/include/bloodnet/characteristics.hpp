#pragma once

// Semi-Lagrangian method-of-characteristics kernel.
//
// Along dx/dt = lambda_R the variable r = -lambda_L P + a Q obeys
//     d r / dt = F_R = l_R . (f, g) + (d_R l_R) . (P, Q),
// and likewise s = -lambda_R P + a Q along dx/dt = lambda_L, with
// l_R = (-lambda_L, a), l_L = (-lambda_R, a) and d_R = d_t + lambda_R d_x.
// One step traces each characteristic back from the new level to the old
// one, interpolates the old Riemann variable at the foot and integrates the
// source with the trapezoidal rule. Coefficients are frozen at two levels:
// the old state and the current outer (Picard) iterate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloodnet/constitutive.hpp"
#include "bloodnet/errors.hpp"
#include "bloodnet/network.hpp"

namespace bloodnet {

enum class Family { R, L };

/// Nodal (P,Q) on x_j = j/n_cells at time t.
struct VesselField {
    std::string vessel;
    double t = 0.0;
    std::vector<double> P;
    std::vector<double> Q;

    int n_cells() const { return static_cast<int>(P.size()) - 1; }
    double dx() const { return 1.0 / n_cells(); }
    double x(int j) const { return static_cast<double>(j) / n_cells(); }
    PrimitiveState at(int j) const { return {P[j], Q[j]}; }
    bool operator==(const VesselField&) const = default;
};

inline VesselField make_field(std::string vessel, double t, int n_cells, PrimitiveState value = {}) {
    const auto n = static_cast<std::size_t>(n_cells) + 1;
    return {std::move(vessel), t, std::vector<double>(n, value.P), std::vector<double>(n, value.Q)};
}

/// Coefficients and eigen data at every grid node of one time level.
struct LevelCoefficients {
    double t = 0.0;
    std::vector<CoefficientSet> cs;
    std::vector<EigenData> eig;

    int n_cells() const { return static_cast<int>(cs.size()) - 1; }
};

inline LevelCoefficients evaluate_level(const Vessel& vessel, const VesselField& field,
                                        double epsilon0 = kDefaultAreaFloor) {
    LevelCoefficients lv;
    lv.t = field.t;
    const int n = field.n_cells();
    lv.cs.reserve(n + 1);
    lv.eig.reserve(n + 1);
    for (int j = 0; j <= n; ++j) {
        lv.cs.push_back(coefficients(vessel, field.x(j), field.at(j), epsilon0));
        try {
            lv.eig.push_back(eigen(lv.cs.back()));
        } catch (const HyperbolicityViolation& e) {
            throw HyperbolicityViolation("vessel '" + vessel.id + "' node " + std::to_string(j) +
                                         " t=" + std::to_string(field.t) + ": " + e.what());
        }
    }
    return lv;
}

/// Coefficient fields at the old level and at the current iterate of the new level.
struct FrozenCoefficients {
    LevelCoefficients old_level;
    LevelCoefficients new_level;
    double dt = 0.0;
};

/// Directional derivatives of the left eigenvectors along their own families:
/// d_R l_R = (lR_P, lR_Q), d_L l_L = (lL_P, lL_Q).
struct EigenvectorDerivatives {
    double lR_P = 0.0;
    double lR_Q = 0.0;
    double lL_P = 0.0;
    double lL_Q = 0.0;
};

struct SourcePair {
    double F_R = 0.0;
    double F_L = 0.0;
};

inline SourcePair source_terms(const CoefficientSet& cs, const EigenData& e, const PrimitiveState& st,
                               const EigenvectorDerivatives& d) {
    return {-e.lambda_L * cs.f + cs.a * cs.g + d.lR_P * st.P + d.lR_Q * st.Q,
            -e.lambda_R * cs.f + cs.a * cs.g + d.lL_P * st.P + d.lL_Q * st.Q};
}

namespace detail {

inline double lerp_grid(std::span<const double> v, double x) {
    const int n = static_cast<int>(v.size()) - 1;
    const double pos = std::clamp(x, 0.0, 1.0) * n;
    const int k = std::min(static_cast<int>(pos), n - 1);
    const double w = pos - k;
    return v[k] + w * (v[k + 1] - v[k]);  // exact on constant data
}

// Centered difference at interior nodes, one-sided at the ends.
inline double grid_derivative(std::span<const double> v, int j) {
    const int n = static_cast<int>(v.size()) - 1;
    if (j == 0) return (v[1] - v[0]) * n;
    if (j == n) return (v[n] - v[n - 1]) * n;
    return (v[j + 1] - v[j - 1]) * (0.5 * n);
}

}  // namespace detail

/// Eigenvector derivatives on the grid of one level of `frozen`.
inline std::vector<EigenvectorDerivatives> eigenvector_derivatives(const FrozenCoefficients& frozen,
                                                                   bool at_new_level) {
    const auto& lv = at_new_level ? frozen.new_level : frozen.old_level;
    const auto& o = frozen.old_level;
    const auto& nw = frozen.new_level;
    const int n = lv.n_cells();
    std::vector<double> mlamL(n + 1), mlamR(n + 1), a(n + 1);
    for (int j = 0; j <= n; ++j) {
        mlamL[j] = -lv.eig[j].lambda_L;
        mlamR[j] = -lv.eig[j].lambda_R;
        a[j] = lv.cs[j].a;
    }
    const double inv_dt = 1.0 / frozen.dt;
    std::vector<EigenvectorDerivatives> out(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double dt_mlamL = (o.eig[j].lambda_L - nw.eig[j].lambda_L) * inv_dt;
        const double dt_mlamR = (o.eig[j].lambda_R - nw.eig[j].lambda_R) * inv_dt;
        const double dt_a = (nw.cs[j].a - o.cs[j].a) * inv_dt;
        const double dx_mlamL = detail::grid_derivative(mlamL, j);
        const double dx_mlamR = detail::grid_derivative(mlamR, j);
        const double dx_a = detail::grid_derivative(a, j);
        const double lamR = lv.eig[j].lambda_R, lamL = lv.eig[j].lambda_L;
        out[j] = {dt_mlamL + lamR * dx_mlamL, dt_a + lamR * dx_a, dt_mlamR + lamL * dx_mlamR,
                  dt_a + lamL * dx_a};
    }
    return out;
}

struct CharFoot {
    enum class Where { interior, out_left, out_right };
    Where where = Where::interior;
    double x_foot = 0.0;
    double value = 0.0;            // old-level Riemann variable at the foot (interior only)
    double source_integral = 0.0;  // trapezoidal integral of F along the segment (interior only)
};

/// Everything one linear characteristic step on one vessel needs.
class CharacteristicKernel {
public:
    CharacteristicKernel(const VesselField& prev, const VesselField& iterate, FrozenCoefficients frozen,
                         double cfl_max = 0.9)
        : frozen_(std::move(frozen)), cfl_max_(cfl_max) {
        const int n = prev.n_cells();
        const auto& o = frozen_.old_level;
        const auto& nw = frozen_.new_level;
        r_old_.resize(n + 1);
        s_old_.resize(n + 1);
        FR_old_.resize(n + 1);
        FL_old_.resize(n + 1);
        FR_new_.resize(n + 1);
        FL_new_.resize(n + 1);
        lamR_old_.resize(n + 1);
        lamL_old_.resize(n + 1);
        lamR_new_.resize(n + 1);
        lamL_new_.resize(n + 1);
        const auto d_old = eigenvector_derivatives(frozen_, false);
        const auto d_new = eigenvector_derivatives(frozen_, true);
        for (int j = 0; j <= n; ++j) {
            const auto rs = to_riemann(o.cs[j], o.eig[j], prev.at(j));
            r_old_[j] = rs.r;
            s_old_[j] = rs.s;
            const auto fo = source_terms(o.cs[j], o.eig[j], prev.at(j), d_old[j]);
            const auto fn = source_terms(nw.cs[j], nw.eig[j], iterate.at(j), d_new[j]);
            FR_old_[j] = fo.F_R;
            FL_old_[j] = fo.F_L;
            FR_new_[j] = fn.F_R;
            FL_new_[j] = fn.F_L;
            lamR_old_[j] = o.eig[j].lambda_R;
            lamL_old_[j] = o.eig[j].lambda_L;
            lamR_new_[j] = nw.eig[j].lambda_R;
            lamL_new_[j] = nw.eig[j].lambda_L;
            max_speed_ = std::max({max_speed_, std::abs(lamR_old_[j]), std::abs(lamL_old_[j]),
                                   std::abs(lamR_new_[j]), std::abs(lamL_new_[j])});
        }
    }

    int n_cells() const { return static_cast<int>(r_old_.size()) - 1; }
    double dt() const { return frozen_.dt; }
    double max_speed() const { return max_speed_; }
    const FrozenCoefficients& frozen() const { return frozen_; }
    std::span<const double> r_old() const { return r_old_; }
    std::span<const double> s_old() const { return s_old_; }

    /// Courant number max|lambda| dt / dx.
    double courant() const { return max_speed_ * frozen_.dt * n_cells(); }

    void check_cfl() const {
        if (courant() > cfl_max_)
            throw CflViolation("Courant number " + std::to_string(courant()) + " exceeds " +
                               std::to_string(cfl_max_));
    }

    /// Foot of the characteristic of `family` through (x_target, t + dt) on level t.
    CharFoot trace_foot(double x_target, Family family) const {
        check_cfl();
        const double dt = frozen_.dt;
        const bool isR = family == Family::R;
        const auto& lam_new = isR ? lamR_new_ : lamL_new_;
        const auto& lam_old = isR ? lamR_old_ : lamL_old_;
        // Explicit midpoint: half step with the new-level speed, full step with
        // the speed at the half point interpolated to t + dt/2.
        const double x_half = x_target - 0.5 * dt * detail::lerp_grid(lam_new, x_target);
        const double lam_half =
            0.5 * (detail::lerp_grid(lam_new, x_half) + detail::lerp_grid(lam_old, x_half));
        CharFoot foot;
        foot.x_foot = x_target - dt * lam_half;
        if (foot.x_foot < 0.0) {
            foot.where = CharFoot::Where::out_left;
            return foot;
        }
        if (foot.x_foot > 1.0) {
            foot.where = CharFoot::Where::out_right;
            return foot;
        }
        const auto& vals = isR ? r_old_ : s_old_;
        const auto& F_old = isR ? FR_old_ : FL_old_;
        const auto& F_new = isR ? FR_new_ : FL_new_;
        foot.value = detail::lerp_grid(vals, foot.x_foot);
        foot.source_integral =
            0.5 * dt * (detail::lerp_grid(F_old, foot.x_foot) + detail::lerp_grid(F_new, x_target));
        return foot;
    }

private:
    FrozenCoefficients frozen_;
    double cfl_max_;
    double max_speed_ = 0.0;
    std::vector<double> r_old_, s_old_, FR_old_, FL_old_, FR_new_, FL_new_;
    std::vector<double> lamR_old_, lamL_old_, lamR_new_, lamL_new_;
};

/// New-level Riemann variables at every grid node. Nodes whose foot leaves the
/// vessel stay unresolved; they are closed by the node at that end.
struct InteriorUpdate {
    std::vector<std::optional<double>> r_new;
    std::vector<std::optional<double>> s_new;

    /// Outgoing characteristic values: s at x=0 and r at x=1.
    double s_at_x0() const { return s_new.front().value(); }
    double r_at_x1() const { return r_new.back().value(); }
};

inline InteriorUpdate interior_update(const CharacteristicKernel& kernel) {
    kernel.check_cfl();
    const int n = kernel.n_cells();
    InteriorUpdate out;
    out.r_new.resize(n + 1);
    out.s_new.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = static_cast<double>(j) / n;
        for (Family fam : {Family::R, Family::L}) {
            const auto foot = kernel.trace_foot(x, fam);
            if (foot.where != CharFoot::Where::interior) continue;
            (fam == Family::R ? out.r_new : out.s_new)[j] = foot.value + foot.source_integral;
        }
    }
    if (!out.s_new.front())
        throw HyperbolicityViolation("lambda_L >= 0 at x=0: no outgoing characteristic at the left end");
    if (!out.r_new.back())
        throw HyperbolicityViolation("lambda_R <= 0 at x=1: no outgoing characteristic at the right end");
    return out;
}

}  // namespace bloodnet
