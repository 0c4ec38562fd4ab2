#pragma once

#include "edfnet/measure_paths.hpp"
#include "edfnet/routing.hpp"

#include <span>
#include <string>
#include <vector>

namespace edfnet {

/// One-dimensional Skorokhod map on the time grid.
struct HalfLineReflection {
    ScalarPath z;  // u + y, nonnegative
    ScalarPath y;  // minimal nondecreasing regulator
};

/// y(t_k) = max_{l <= k} max(0, -u(t_l)), z = u + y.
/// Throws PreconditionError when u(0) < 0.
HalfLineReflection sm1d(std::span<const double> u);

struct OrmtOptions {
    /// Stop once the sup-norm change of y is at most tol * ||u||_T. With
    /// tol = 0 the iteration runs to its floating-point fixed point, which it
    /// reaches because every iterate dominates the previous one.
    double tol = 0.0;
    /// 0 selects 10 * ceil(log(tol) / log(rho_hat)), at least K + 2.
    int max_iter = 0;
};

/// Oblique reflection in the orthant: z = u + R y, z >= 0, y nondecreasing,
/// and sum_k z^i(t_k) dy^i(t_k) = 0.
struct OrthantReflection {
    VectorPath z;
    VectorPath y;
    double residual = 0.0;                 // last sup-norm change of y
    double complementarity_defect = 0.0;   // max_i sum_k z^i dy^i
    int iterations = 0;
};

/// Picard iteration y <- running-max((P^T y - u)^+) from y = 0.
/// Throws PreconditionError when some u^i(0) < 0 and NonConvergenceError
/// when the iteration budget is exhausted above tol.
OrthantReflection ormt(const VectorPath& u, const RoutingMatrix& routing, OrmtOptions options = {});

int ormt_iteration_budget(const RoutingMatrix& routing, double tol);

/// Outcome of the randomized property checks on the reflection maps.
struct CheckVerdict {
    bool pass = true;
    double worst_violation = 0.0;
    std::string detail;
};

/// max(||z1 - z2||_T, ||y1 - y2||_T) / ||u1 - u2||_T.
/// Throws PreconditionError when u1 == u2.
double ormt_lipschitz_check(const VectorPath& u1, const VectorPath& u2, const RoutingMatrix& routing);

/// Requires u2 - u1 componentwise nondecreasing and nonnegative; then checks
/// z2 - z1 >= 0 and y1 - y2 nondecreasing.
CheckVerdict ormt_monotonicity_check(const VectorPath& u1, const VectorPath& u2,
                                     const RoutingMatrix& routing, double tol = 1e-9);

/// Requires u1 = u2 on [0, T_agree]; checks the reflections agree there.
CheckVerdict ormt_nonanticipation_check(const VectorPath& u1, const VectorPath& u2,
                                        const RoutingMatrix& routing, const Grid& grid,
                                        double t_agree, double tol = 1e-9);

/// Per-invocation diagnostics of the soft fluid solver.
struct VmvsmDiagnostics {
    int levels = 0;
    int max_iterations = 0;
    double max_residual = 0.0;
    double max_complementarity_defect = 0.0;
    double tol_comp = 0.0;
    double x_monotonicity_violation = 0.0;
    double tail_monotonicity_violation = 0.0;

    std::string to_json() const;
};

/// Solution of the vector measure-valued Skorokhod problem.
struct VmvsmSolution {
    GriddedMeasurePath xi;         // queue content xi_t[0, x]
    GriddedMeasurePath beta;       // departures from queue beta_t[0, x]
    GriddedMeasurePath beta_tail;  // beta_t(x, inf), nonincreasing in x
    VectorPath iota;               // idleness
    VmvsmDiagnostics diagnostics;
};

struct VmvsmOptions {
    OrmtOptions ormt;
    /// Relative complementarity tolerance, scaled by total input mass.
    double comp_rel_tol = 1e-8;
};

/// Soft-EDF network fluid solver, one orthant reflection per deadline level:
/// (xi[0, x_j], beta(x_j, inf) + iota) = Gamma(alpha[0, x_j] - R mu).
///
/// Requires mu(0) = 0, alpha nondecreasing in t and supported in [0, x_max]
/// (DomainTruncationError otherwise).
VmvsmSolution vmvsm_solve(const GriddedMeasurePath& alpha, const VectorPath& mu,
                          const RoutingMatrix& routing, VmvsmOptions options = {});

/// Residuals of the four VMVSP conditions for a candidate solution.
struct VmvspResiduals {
    double balance = 0.0;            // |xi[0,x] - alpha[0,x] + R beta[0,x]|
    double edf_complementarity = 0.0;   // sum_k xi[0,x] d beta(x, inf)
    double idle_complementarity = 0.0;  // sum_k xi[0,x] d iota
    double capacity = 0.0;           // |beta[0, inf) + iota - mu|
    double min_xi = 0.0;
    double x_monotonicity_violation = 0.0;
    double tail_monotonicity_violation = 0.0;
    double input_mass = 0.0;         // normalisation for relative checks
};

VmvspResiduals vmvsp_residuals(const VmvsmSolution& sol, const GriddedMeasurePath& alpha,
                               const VectorPath& mu, const RoutingMatrix& routing);

}  // namespace edfnet
