#pragma once

// Node closures. Every closure is a small linear system whose unknowns are
// the endpoint (P, Q) of the attached vessel ends plus node-internal states
// (junction pressure, capacitor pressures). Each endpoint contributes one
// linear relation alpha P + beta Q = gamma, normally its outgoing
// characteristic relation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bloodnet/constitutive.hpp"
#include "bloodnet/errors.hpp"
#include "bloodnet/network.hpp"

namespace bloodnet {

/// alpha * P + beta * Q = gamma
struct LinearRelation {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

struct EndpointClosureInput {
    std::string vessel;
    End end = End::x0;
    CoefficientSet cs;  // at the endpoint, frozen at the current iterate
    EigenData eig;
    LinearRelation relation;
    double Q_prev = 0.0;  // endpoint flow at the previous time level
};

/// Relation carried by the outgoing characteristic: s at x=0, r at x=1.
inline LinearRelation characteristic_relation(End end, const CoefficientSet& cs, const EigenData& e,
                                              double outgoing) {
    if (end == End::x0) return {-e.lambda_R, cs.a, outgoing};
    return {-e.lambda_L, cs.a, outgoing};
}

inline EndpointClosureInput make_endpoint_input(std::string vessel, End end, const CoefficientSet& cs,
                                                const EigenData& e, double outgoing, double Q_prev) {
    return {std::move(vessel), end, cs, e, characteristic_relation(end, cs, e, outgoing), Q_prev};
}

/// Replaces the characteristic relation by an ideal flow source (decoupled mode).
inline EndpointClosureInput with_ideal_flow(EndpointClosureInput in, double Q) {
    in.relation = {0.0, 1.0, Q};
    return in;
}

/// Replaces the characteristic relation by an ideal pressure source (decoupled mode).
inline EndpointClosureInput with_ideal_pressure(EndpointClosureInput in, double P) {
    in.relation = {1.0, 0.0, P};
    return in;
}

// --- external ends ----------------------------------------------------------

inline PrimitiveState close_external_pressure(const EndpointClosureInput& in, double P_B) {
    if (in.relation.beta == 0.0)
        throw Error("external pressure closure on vessel '" + in.vessel + "': a = 0");
    return {P_B, (in.relation.gamma - in.relation.alpha * P_B) / in.relation.beta};
}

inline PrimitiveState close_external_flow(const EndpointClosureInput& in, double Q_B) {
    if (in.relation.alpha == 0.0)
        throw HyperbolicityViolation("external flow closure on vessel '" + in.vessel + "' end " +
                                     to_string(in.end) + ": outgoing wave speed is zero");
    return {(in.relation.gamma - in.relation.beta * Q_B) / in.relation.alpha, Q_B};
}

// --- junction systems -------------------------------------------------------

enum class UnknownKind { P, Q, P_junc, P_C1, P_C2 };

struct UnknownSlot {
    UnknownKind kind;
    int endpoint = -1;  // index into the inputs for P and Q
};

struct JunctionSystem {
    std::string node_id;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
    std::vector<UnknownSlot> layout;
    int n_endpoints = 0;

    int size() const { return static_cast<int>(layout.size()); }
};

namespace detail {

inline JunctionSystem blank_system(std::string node_id, int mu, int extra) {
    JunctionSystem sys;
    sys.node_id = std::move(node_id);
    sys.n_endpoints = mu;
    const int n = 2 * mu + extra;
    sys.matrix = Eigen::MatrixXd::Zero(n, n);
    sys.rhs = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < mu; ++k) {
        sys.layout.push_back({UnknownKind::P, k});
        sys.layout.push_back({UnknownKind::Q, k});
    }
    return sys;
}

inline void add_relation_row(JunctionSystem& sys, int row, int k, const LinearRelation& rel) {
    sys.matrix(row, 2 * k) = rel.alpha;
    sys.matrix(row, 2 * k + 1) = rel.beta;
    sys.rhs(row) = rel.gamma;
}

}  // namespace detail

/// Unknowns (P_k, Q_k) for each attachment followed by P_junc. `inputs[k]`
/// corresponds to `node.attachments[k]`. Rows: the endpoint relations, one
/// backward-Euler momentum balance per attachment
///     rho (Q - Q_prev)/dt = +-A (P - P_junc) + c_offset
/// (+ for incoming, - for outgoing), and the flow balance sum_in Q = sum_out Q.
inline JunctionSystem assemble_branching(const std::string& node_id, const Branching& node,
                                         const std::vector<EndpointClosureInput>& inputs, double dt) {
    const int mu = static_cast<int>(inputs.size());
    if (mu != static_cast<int>(node.attachments.size()))
        throw Error("branching node '" + node_id + "': input count does not match attachments");
    auto sys = detail::blank_system(node_id, mu, 1);
    sys.layout.push_back({UnknownKind::P_junc});
    const int pj = 2 * mu;
    for (int k = 0; k < mu; ++k) {
        const auto& att = node.attachments[k];
        const auto& in = inputs[k];
        if (att.vessel != in.vessel || att.end != in.end)
            throw Error("branching node '" + node_id + "': input " + std::to_string(k) +
                        " does not match attachment order");
        detail::add_relation_row(sys, k, k, in.relation);
        const double sigma = att.end == End::x1 ? 1.0 : -1.0;
        const int row = mu + k;
        sys.matrix(row, 2 * k + 1) = att.rho / dt;
        sys.matrix(row, 2 * k) = -sigma * in.cs.A;
        sys.matrix(row, pj) = sigma * in.cs.A;
        sys.rhs(row) = att.rho / dt * in.Q_prev + att.c_offset;
        sys.matrix(2 * mu, 2 * k + 1) = sigma;
    }
    return sys;
}

/// Capacitor pressures carried by a transitional node.
struct TransitionalState {
    double P_C1 = 0.0;
    double P_C2 = 0.0;
    bool operator==(const TransitionalState&) const = default;
};

/// Unknowns (P_k, Q_k) for arteries then veins, followed by P_C1, P_C2.
/// `inputs` lists arteries first, in node order, then veins. Rows: endpoint
/// relations; resistive laws R Q - P + P_C1 = 0 (artery) and
/// R Q + P - P_C2 = 0 (vein); backward-Euler capacitor balances.
inline JunctionSystem assemble_transitional(const std::string& node_id, const Transitional& node,
                                            const std::vector<EndpointClosureInput>& inputs,
                                            const TransitionalState& prev, double dt) {
    const int n_art = static_cast<int>(node.arteries.size());
    const int mu = n_art + static_cast<int>(node.veins.size());
    if (mu != static_cast<int>(inputs.size()))
        throw Error("transitional node '" + node_id + "': input count does not match attachments");
    auto sys = detail::blank_system(node_id, mu, 2);
    sys.layout.push_back({UnknownKind::P_C1});
    sys.layout.push_back({UnknownKind::P_C2});
    const int c1 = 2 * mu, c2 = 2 * mu + 1;
    const double g = 1.0 / node.R_C;
    for (int k = 0; k < mu; ++k) {
        const bool artery = k < n_art;
        const auto& att = artery ? node.arteries[k] : node.veins[k - n_art];
        const auto& in = inputs[k];
        if (att.vessel != in.vessel || in.end != (artery ? End::x1 : End::x0))
            throw Error("transitional node '" + node_id + "': input " + std::to_string(k) +
                        " does not match attachment order");
        detail::add_relation_row(sys, k, k, in.relation);
        const int row = mu + k;
        sys.matrix(row, 2 * k + 1) = att.resistance;
        if (artery) {
            sys.matrix(row, 2 * k) = -1.0;
            sys.matrix(row, c1) = 1.0;
            sys.matrix(c1, 2 * k + 1) = -1.0;
        } else {
            sys.matrix(row, 2 * k) = 1.0;
            sys.matrix(row, c2) = -1.0;
            sys.matrix(c2, 2 * k + 1) = 1.0;
        }
    }
    sys.matrix(c1, c1) = node.C1 / dt + g;
    sys.matrix(c1, c2) = -g;
    sys.rhs(c1) = node.C1 / dt * prev.P_C1;
    sys.matrix(c2, c2) = node.C2 / dt + g;
    sys.matrix(c2, c1) = -g;
    sys.rhs(c2) = node.C2 / dt * prev.P_C2;
    return sys;
}

struct JunctionSolution {
    std::vector<PrimitiveState> endpoints;
    double P_junc = std::numeric_limits<double>::quiet_NaN();
    TransitionalState capacitors{std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN()};
    Eigen::VectorXd solution;
    double rcond = 0.0;          // reciprocal condition estimate of the equilibrated matrix
    double residual_ratio = 0.0;  // |Mx-b|_inf / (|M|_inf |x|_inf)
};

inline constexpr double kSingularRcond = 1e-14;

/// Row/column equilibration followed by partial-pivot LU.
inline JunctionSolution solve_junction(const JunctionSystem& sys) {
    const int n = sys.size();
    if (sys.matrix.rows() != n || sys.matrix.cols() != n || sys.rhs.size() != n)
        throw Error("junction system at node '" + sys.node_id + "' is not square or mismatches its layout");
    Eigen::VectorXd row_scale(n), col_scale(n);
    Eigen::MatrixXd M = sys.matrix;
    for (int i = 0; i < n; ++i) {
        const double m = M.row(i).cwiseAbs().maxCoeff();
        if (!(m > 0.0)) throw SingularJunction(sys.node_id, 0.0);
        row_scale(i) = 1.0 / m;
        M.row(i) *= row_scale(i);
    }
    for (int j = 0; j < n; ++j) {
        const double m = M.col(j).cwiseAbs().maxCoeff();
        if (!(m > 0.0)) throw SingularJunction(sys.node_id, 0.0);
        col_scale(j) = 1.0 / m;
        M.col(j) *= col_scale(j);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    JunctionSolution out;
    out.rcond = lu.rcond();
    if (!(out.rcond > kSingularRcond)) throw SingularJunction(sys.node_id, out.rcond);
    const Eigen::VectorXd b = row_scale.asDiagonal() * sys.rhs;
    const Eigen::VectorXd y = lu.solve(b);
    out.solution = col_scale.asDiagonal() * y;

    const double res = (M * y - b).lpNorm<Eigen::Infinity>();
    const double scale = M.cwiseAbs().rowwise().sum().maxCoeff() * y.lpNorm<Eigen::Infinity>();
    out.residual_ratio = scale > 0.0 ? res / scale : res;
    if (out.residual_ratio > 1e-10) throw SingularJunction(sys.node_id, out.rcond);

    out.endpoints.resize(sys.n_endpoints);
    for (int i = 0; i < n; ++i) {
        const auto& slot = sys.layout[i];
        switch (slot.kind) {
            case UnknownKind::P: out.endpoints[slot.endpoint].P = out.solution(i); break;
            case UnknownKind::Q: out.endpoints[slot.endpoint].Q = out.solution(i); break;
            case UnknownKind::P_junc: out.P_junc = out.solution(i); break;
            case UnknownKind::P_C1: out.capacitors.P_C1 = out.solution(i); break;
            case UnknownKind::P_C2: out.capacitors.P_C2 = out.solution(i); break;
        }
    }
    return out;
}

inline double capillary_flow(const Transitional& node, const TransitionalState& st) {
    return (st.P_C1 - st.P_C2) / node.R_C;
}

// --- solvability structure ---------------------------------------------------

/// Endpoint data entering the branching solvability block.
struct BranchEndpointData {
    End end;
    CoefficientSet cs;
    EigenData eig;
    double rho;
};

/// Sensitivity of endpoint Q to the incoming Riemann variable (s at x=1, r at x=0).
inline double flow_sensitivity(const BranchEndpointData& d) {
    const RiemannPair unit = d.end == End::x1 ? RiemannPair{0.0, 1.0} : RiemannPair{1.0, 0.0};
    return from_riemann(d.cs, d.eig, unit).Q;
}

/// Coefficient matrix of the incoming-variable time derivatives in the
/// differentiated branching conditions. Incoming ends must come first.
/// Row i < mu-1 compares the momentum balance of endpoint 0 with that of
/// endpoint i+1; the last row is the differentiated flow balance.
inline Eigen::MatrixXd branching_rate_matrix(const std::vector<BranchEndpointData>& ends) {
    const int mu = static_cast<int>(ends.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(mu, mu);
    std::vector<double> q(mu), w(mu), sigma(mu);
    for (int k = 0; k < mu; ++k) {
        sigma[k] = ends[k].end == End::x1 ? 1.0 : -1.0;
        q[k] = flow_sensitivity(ends[k]);
        w[k] = ends[k].rho / ends[k].cs.A;
    }
    for (int i = 1; i < mu; ++i) {
        M(i - 1, 0) = w[0] * q[0];
        M(i - 1, i) = -sigma[i] * w[i] * q[i];
    }
    for (int k = 0; k < mu; ++k) M(mu - 1, k) = sigma[k] * q[k];
    return M;
}

/// Closed-form determinant of branching_rate_matrix:
/// (-1/2)^mu * prod_in rho lambda_L/(u a A) * prod_out rho lambda_R/(u a A) * sum A/rho.
inline double branching_rate_determinant(const std::vector<BranchEndpointData>& ends) {
    double prod = 1.0, sum = 0.0;
    for (const auto& d : ends) {
        const double lam = d.end == End::x1 ? d.eig.lambda_L : d.eig.lambda_R;
        prod *= -0.5 * d.rho * lam / (d.eig.u * d.cs.a * d.cs.A);
        sum += d.cs.A / d.rho;
    }
    return prod * sum;
}

/// Diagonal entries of the transitional solvability matrix, read off the
/// resistive rows of an assembled system: the sensitivity of each resistive
/// law to its endpoint's incoming Riemann variable.
inline std::vector<double> transitional_diagonal(const JunctionSystem& sys,
                                                 const std::vector<EndpointClosureInput>& inputs) {
    const int mu = sys.n_endpoints;
    std::vector<double> d(mu);
    for (int k = 0; k < mu; ++k) {
        const auto& in = inputs[k];
        const RiemannPair unit = in.end == End::x1 ? RiemannPair{0.0, 1.0} : RiemannPair{1.0, 0.0};
        const auto dU = from_riemann(in.cs, in.eig, unit);
        d[k] = sys.matrix(mu + k, 2 * k) * dU.P + sys.matrix(mu + k, 2 * k + 1) * dU.Q;
    }
    return d;
}

}  // namespace bloodnet
