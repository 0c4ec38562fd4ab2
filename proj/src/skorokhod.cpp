#include "edfnet/skorokhod.hpp"

#include "edfnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edfnet {

namespace {

double sup_norm(const VectorPath& v) {
    double m = 0.0;
    for (const auto& c : v) {
        for (double x : c) m = std::max(m, std::abs(x));
    }
    return m;
}

double sup_diff(const VectorPath& a, const VectorPath& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < a[i].size(); ++k) m = std::max(m, std::abs(a[i][k] - b[i][k]));
    }
    return m;
}

void require_shape(const VectorPath& u, int K) {
    if (static_cast<int>(u.size()) != K) {
        throw ShapeError("reflection input has " + std::to_string(u.size()) +
                         " components, routing matrix has " + std::to_string(K));
    }
    for (const auto& c : u) {
        if (c.size() != u.front().size() || c.empty()) {
            throw ShapeError("reflection input components have different lengths");
        }
    }
}

}  // namespace

HalfLineReflection sm1d(std::span<const double> u) {
    if (u.empty()) throw ShapeError("sm1d: empty path");
    if (u[0] < 0.0) throw PreconditionError("sm1d: u(0) must be nonnegative");
    HalfLineReflection out{ScalarPath(u.size()), ScalarPath(u.size())};
    double running = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        running = std::max(running, -u[k]);
        out.y[k] = running;
        out.z[k] = u[k] + running;
    }
    return out;
}

int ormt_iteration_budget(const RoutingMatrix& routing, double tol) {
    const double rho = routing.spectral_radius_bound();
    int budget = 0;
    tol = std::max(tol, 1e-17);
    if (rho > 0.0) budget = 10 * static_cast<int>(std::ceil(std::log(tol) / std::log(rho)));
    return std::max(budget, routing.size() + 2);
}

OrthantReflection ormt(const VectorPath& u, const RoutingMatrix& routing, OrmtOptions options) {
    const int K = routing.size();
    require_shape(u, K);
    for (int i = 0; i < K; ++i) {
        if (u[i][0] < 0.0) {
            throw PreconditionError("ormt: u^" + std::to_string(i) + "(0) must be nonnegative");
        }
    }
    const std::size_t n = u.front().size();
    const Eigen::MatrixXd& P = routing.P();
    const int budget = options.max_iter > 0 ? options.max_iter : ormt_iteration_budget(routing, options.tol);
    // Relative to ||u||_T so that the map stays positively homogeneous.
    const double tol = options.tol * sup_norm(u);

    OrthantReflection out;
    out.y = VectorPath(K, ScalarPath(n, 0.0));
    VectorPath next(K, ScalarPath(n, 0.0));
    double change = 0.0;
    bool converged = false;
    for (int iter = 1; iter <= budget; ++iter) {
        for (int i = 0; i < K; ++i) {
            double running = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                double pushed = 0.0;
                for (int j = 0; j < K; ++j) pushed += P(j, i) * out.y[j][k];
                running = std::max(running, pushed - u[i][k]);
                next[i][k] = running;
            }
        }
        change = sup_diff(next, out.y);
        std::swap(out.y, next);
        out.iterations = iter;
        if (change <= tol) {
            converged = true;
            break;
        }
    }
    out.residual = change;
    if (!converged) {
        std::ostringstream msg;
        msg << "ormt: no convergence after " << budget << " iterations, residual " << change;
        throw NonConvergenceError(msg.str(), change);
    }

    out.z = VectorPath(K, ScalarPath(n, 0.0));
    for (int i = 0; i < K; ++i) {
        double defect = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double pushed = 0.0;
            for (int j = 0; j < K; ++j) pushed += P(j, i) * out.y[j][k];
            out.z[i][k] = u[i][k] + (out.y[i][k] - pushed);
            const double dy = out.y[i][k] - (k > 0 ? out.y[i][k - 1] : 0.0);
            defect += std::abs(out.z[i][k]) * dy;
        }
        out.complementarity_defect = std::max(out.complementarity_defect, defect);
    }
    return out;
}

double ormt_lipschitz_check(const VectorPath& u1, const VectorPath& u2, const RoutingMatrix& routing) {
    require_shape(u1, routing.size());
    require_shape(u2, routing.size());
    const double du = sup_diff(u1, u2);
    if (du == 0.0) throw PreconditionError("ormt_lipschitz_check: inputs coincide, ratio undefined");
    const auto r1 = ormt(u1, routing);
    const auto r2 = ormt(u2, routing);
    return std::max(sup_diff(r1.z, r2.z), sup_diff(r1.y, r2.y)) / du;
}

CheckVerdict ormt_monotonicity_check(const VectorPath& u1, const VectorPath& u2,
                                     const RoutingMatrix& routing, double tol) {
    require_shape(u1, routing.size());
    require_shape(u2, routing.size());
    for (std::size_t i = 0; i < u1.size(); ++i) {
        double prev = 0.0;
        for (std::size_t k = 0; k < u1[i].size(); ++k) {
            const double d = u2[i][k] - u1[i][k];
            if (d < prev - tol) {
                throw PreconditionError("ormt_monotonicity_check: u2 - u1 is not nondecreasing and nonnegative");
            }
            prev = std::max(prev, d);
        }
    }
    const auto r1 = ormt(u1, routing);
    const auto r2 = ormt(u2, routing);
    CheckVerdict v;
    for (std::size_t i = 0; i < u1.size(); ++i) {
        double prev = 0.0;
        for (std::size_t k = 0; k < u1[i].size(); ++k) {
            const double dz = r2.z[i][k] - r1.z[i][k];
            const double dy = r1.y[i][k] - r2.y[i][k];
            v.worst_violation = std::max({v.worst_violation, -dz, prev - dy});
            prev = dy;
        }
    }
    v.pass = v.worst_violation <= tol;
    if (!v.pass) v.detail = "monotonicity violated by " + std::to_string(v.worst_violation);
    return v;
}

CheckVerdict ormt_nonanticipation_check(const VectorPath& u1, const VectorPath& u2,
                                        const RoutingMatrix& routing, const Grid& grid,
                                        double t_agree, double tol) {
    require_shape(u1, routing.size());
    require_shape(u2, routing.size());
    CheckVerdict v;
    if (!(t_agree > 0.0)) {
        v.detail = "empty agreement window";
        return v;
    }
    const int k_agree = grid.time_floor(t_agree);
    for (std::size_t i = 0; i < u1.size(); ++i) {
        for (int k = 0; k <= k_agree; ++k) {
            if (u1[i][k] != u2[i][k]) {
                throw PreconditionError("ormt_nonanticipation_check: inputs differ before T_agree");
            }
        }
    }
    const auto r1 = ormt(u1, routing);
    const auto r2 = ormt(u2, routing);
    for (std::size_t i = 0; i < u1.size(); ++i) {
        for (int k = 0; k <= k_agree; ++k) {
            v.worst_violation = std::max({v.worst_violation, std::abs(r1.z[i][k] - r2.z[i][k]),
                                          std::abs(r1.y[i][k] - r2.y[i][k])});
        }
    }
    v.pass = v.worst_violation <= tol;
    if (!v.pass) v.detail = "outputs differ on [0, T_agree] by " + std::to_string(v.worst_violation);
    return v;
}

std::string VmvsmDiagnostics::to_json() const {
    nlohmann::json j = {
        {"solver", "vmvsm"},
        {"levels", levels},
        {"max_iterations", max_iterations},
        {"max_residual", max_residual},
        {"max_complementarity_defect", max_complementarity_defect},
        {"tol_comp", tol_comp},
        {"x_monotonicity_violation", x_monotonicity_violation},
        {"tail_monotonicity_violation", tail_monotonicity_violation},
    };
    return j.dump();
}

namespace {

double input_mass(const GriddedMeasurePath& alpha) {
    double total = 0.0;
    for (int i = 0; i < alpha.components(); ++i) total += alpha.total_mass(i, alpha.grid().n_t());
    return total;
}

double tail_violation(const GriddedMeasurePath& tail) {
    // beta(x, inf) must not increase in x.
    double worst = 0.0;
    const Grid& g = tail.grid();
    for (int i = 0; i < tail.components(); ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = 1; j <= g.n_x(); ++j) worst = std::max(worst, tail(i, k, j) - tail(i, k, j - 1));
        }
    }
    return worst;
}

}  // namespace

VmvsmSolution vmvsm_solve(const GriddedMeasurePath& alpha, const VectorPath& mu,
                          const RoutingMatrix& routing, VmvsmOptions options) {
    const Grid& g = alpha.grid();
    const int K = routing.size();
    if (alpha.components() != K || static_cast<int>(mu.size()) != K) {
        throw ShapeError("vmvsm_solve: alpha, mu and routing disagree on K");
    }
    for (int i = 0; i < K; ++i) {
        if (mu[i].size() != static_cast<std::size_t>(g.n_t() + 1)) {
            throw ShapeError("vmvsm_solve: mu length differs from the time grid");
        }
        if (mu[i][0] != 0.0) throw PreconditionError("vmvsm_solve: mu(0) must be 0");
    }
    if (alpha.has_overflow()) {
        throw DomainTruncationError("vmvsm_solve: alpha has mass with deadline beyond x_max");
    }
    const double scale = std::max(1.0, input_mass(alpha));
    if (alpha.t_monotonicity_violation() > 1e-12 * scale || alpha.min_value() < -1e-12 * scale) {
        throw PreconditionError("vmvsm_solve: alpha must be a nondecreasing nonnegative measure path");
    }

    const Eigen::MatrixXd& P = routing.P();
    const int n = g.n_t() + 1;
    VectorPath r_mu(K, ScalarPath(n));
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < n; ++k) {
            double routed = 0.0;
            for (int j = 0; j < K; ++j) routed += P(j, i) * mu[j][k];
            r_mu[i][k] = mu[i][k] - routed;
        }
    }

    VmvsmSolution sol{GriddedMeasurePath(g, K), GriddedMeasurePath(g, K), GriddedMeasurePath(g, K),
                      make_vector_path(g, K), {}};
    auto& diag = sol.diagnostics;
    diag.levels = g.n_x() + 1;
    diag.tol_comp = options.comp_rel_tol * scale;

    VectorPath u(K, ScalarPath(n));
    for (int j = 0; j <= g.n_x(); ++j) {
        for (int i = 0; i < K; ++i) {
            for (int k = 0; k < n; ++k) u[i][k] = alpha(i, k, j) - r_mu[i][k];
        }
        const auto refl = ormt(u, routing, options.ormt);
        diag.max_iterations = std::max(diag.max_iterations, refl.iterations);
        diag.max_residual = std::max(diag.max_residual, refl.residual);
        diag.max_complementarity_defect = std::max(diag.max_complementarity_defect, refl.complementarity_defect);
        for (int i = 0; i < K; ++i) {
            for (int k = 0; k < n; ++k) {
                sol.xi(i, k, j) = refl.z[i][k];
                sol.beta_tail(i, k, j) = refl.y[i][k];  // beta(x_j, inf) + iota for now
            }
        }
    }
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < n; ++k) sol.iota[i][k] = sol.beta_tail(i, k, g.n_x());
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j <= g.n_x(); ++j) {
                const double y = sol.beta_tail(i, k, j);
                sol.beta(i, k, j) = mu[i][k] - y;
                sol.beta_tail(i, k, j) = y - sol.iota[i][k];
            }
        }
    }
    diag.x_monotonicity_violation = std::max(sol.xi.x_monotonicity_violation(), sol.beta.x_monotonicity_violation());
    diag.tail_monotonicity_violation = tail_violation(sol.beta_tail);
    if (diag.max_complementarity_defect > diag.tol_comp) {
        throw NonConvergenceError("vmvsm_solve: complementarity defect above tol_comp",
                                  diag.max_complementarity_defect);
    }
    return sol;
}

VmvspResiduals vmvsp_residuals(const VmvsmSolution& sol, const GriddedMeasurePath& alpha,
                               const VectorPath& mu, const RoutingMatrix& routing) {
    const Grid& g = alpha.grid();
    const int K = routing.size();
    const Eigen::MatrixXd& P = routing.P();
    VmvspResiduals r;
    r.input_mass = input_mass(alpha);
    r.min_xi = sol.xi.min_value();
    r.x_monotonicity_violation = sol.xi.x_monotonicity_violation();
    r.tail_monotonicity_violation = tail_violation(sol.beta_tail);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j <= g.n_x(); ++j) {
            double edf = 0.0;
            double idle = 0.0;
            for (int k = 0; k <= g.n_t(); ++k) {
                double routed = 0.0;
                for (int l = 0; l < K; ++l) routed += P(l, i) * sol.beta(l, k, j);
                const double rb = sol.beta(i, k, j) - routed;
                r.balance = std::max(r.balance, std::abs(sol.xi(i, k, j) - alpha(i, k, j) + rb));
                const double d_tail = sol.beta_tail(i, k, j) - (k > 0 ? sol.beta_tail(i, k - 1, j) : 0.0);
                const double d_iota = sol.iota[i][k] - (k > 0 ? sol.iota[i][k - 1] : 0.0);
                edf += std::abs(sol.xi(i, k, j) * d_tail);
                idle += std::abs(sol.xi(i, k, j) * d_iota);
            }
            r.edf_complementarity = std::max(r.edf_complementarity, edf);
            r.idle_complementarity = std::max(r.idle_complementarity, idle);
        }
        for (int k = 0; k <= g.n_t(); ++k) {
            r.capacity = std::max(r.capacity, std::abs(sol.beta.total_mass(i, k) + sol.iota[i][k] - mu[i][k]));
        }
    }
    return r;
}

}  // namespace edfnet
