#pragma once

#include "edfnet/fluid_data.hpp"
#include "edfnet/measure_paths.hpp"

#include <string>
#include <vector>

namespace edfnet {

/// Hard-EDF fluid solution on a grid. Every field is cumulative in x and keeps
/// mass with deadline beyond x_max in its overflow marginal.
struct HardFluidSolution {
    GriddedMeasurePath xi;
    GriddedMeasurePath beta;
    GriddedMeasurePath beta_s;
    GriddedMeasurePath beta_r;
    GriddedMeasurePath gamma;
    VectorPath rho;
    VectorPath iota;
    VectorPath mu;
    /// Left edge of the support of xi_t (x_max + dx when the queue is empty).
    VectorPath sigma;
    double eps = 0.0;
};

/// Single-node EDF stepper with reneging on a given input alpha (which may
/// already include routed mass). Per step: deposit, serve EDF, renege
/// cells whose deadline is <= t_{k+1}. Requires dx to be a multiple of dt.
/// gamma is left empty; see shift_served.
struct SingleNodeResult {
    GriddedMeasurePath xi;
    GriddedMeasurePath beta_s;
    GriddedMeasurePath beta_r;
    ScalarPath rho;
    ScalarPath iota;
};
SingleNodeResult hard_single_node(const GriddedMeasurePath& alpha, int i, const ScalarPath& mu);

/// gamma_t[0, x] = beta_s_t[0, x - eps]; eps_cells = eps / dx.
GriddedMeasurePath shift_served(const GriddedMeasurePath& beta_s, int eps_cells);

/// Assembles the full tuple from node-wise stepper output.
HardFluidSolution assemble_hard_solution(const HardFluidData& data, std::vector<SingleNodeResult> nodes);

struct SquareRecord {
    int n = 0;
    double eps_level = 0.0;       // n * eps
    bool full_input = false;      // truncation no longer active
    double discrepancy = 0.0;     // vs previous square on its validity region
    double gamma_change = 0.0;
};

struct SquareInductionResult {
    HardFluidSolution solution;
    std::vector<SquareRecord> consistency_log;

    std::string consistency_log_json() const;
};

struct SquareInductionOptions {
    double consistency_tol = 1e-12;  // relative to total input mass
    double fixed_point_tol = 1e-14;  // relative, for the untruncated sweeps
    int max_extra_sweeps = 0;        // 0 selects a budget from the routing spectral bound
};

/// Network solver by induction over squares [0, n eps)^2: node i is solved on
/// alpha^i + sum_j P_ji gamma^{j,(n-1)} truncated to deadlines below n eps.
/// Once the truncation covers [0, x_max] the same map is iterated on the
/// untruncated input until gamma is stationary.
/// Throws SchemeInconsistencyError when consecutive squares disagree.
SquareInductionResult hard_network_square_induction(const HardFluidData& data,
                                                    SquareInductionOptions options = {});

/// Coupled stepper: every node serves EDF, served mass is routed with its
/// deadline shifted by eps and joins the downstream queue at the end of
/// the step, then expired cells renege.
HardFluidSolution hard_network_direct(const HardFluidData& data);

struct InvariantViolation {
    std::string name;
    double magnitude = 0.0;
    int node = -1;
    double t = 0.0;
    double x = 0.0;
};

struct InvariantReport {
    std::vector<InvariantViolation> worst;  // one entry per checked invariant
    bool pass(double tol) const;
    double max_violation() const;
    const InvariantViolation* failing(double tol) const;
};

/// Full grid scan of the hard-fluid identities: gamma shift, beta = beta_s + beta_r,
/// idleness, no reneging before deadline, hardness, beta_r = rho(t ^ x),
/// mass balance, x- and t-monotonicity, nonnegativity, and the flat-off-boundary
/// conditions for iota and rho.
InvariantReport check_hard_invariants(const HardFluidSolution& sol, const GriddedMeasurePath& alpha,
                                      const RoutingMatrix& routing, double tol = 1e-8);

struct EdgeVerdict {
    bool pass = true;
    double worst = 0.0;
    int node = -1;
    double t = 0.0;
    double t0 = 0.0;
};

/// gamma_{t0}[0, t + eps] - gamma_t[0, t + eps] <= tol for grid t < t0.
EdgeVerdict check_gamma_edge_property(const HardFluidSolution& sol, double tol = 1e-8);

struct TruncationVerdict {
    bool pass = true;
    double worst = 0.0;
    std::string field;
};

/// Solves with alpha and with alpha restricted to deadlines in [0, tau] and
/// compares xi, beta_s, beta_r and rho on [0, tau]^2.
TruncationVerdict check_truncation_nonanticipation(const HardFluidData& data, double tau,
                                                   double tol = 1e-8);

/// alpha restricted to deadlines in [0, tau] (levels x_j <= tau).
GriddedMeasurePath truncate_deadlines(const GriddedMeasurePath& alpha, double tau);

/// Largest sup-norm gap between two hard solutions over xi, beta_s, beta_r, rho, iota.
double hard_solution_distance(const HardFluidSolution& a, const HardFluidSolution& b);

}  // namespace edfnet
