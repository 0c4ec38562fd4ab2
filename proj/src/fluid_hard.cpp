#include "edfnet/fluid_hard.hpp"

#include "edfnet/errors.hpp"
#include "edfnet/skorokhod.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edfnet {

namespace {

// Queue of one node as per-cell masses: cell 0 is {0}, cell j is (x_{j-1}, x_j],
// cell n_x + 1 holds deadlines beyond x_max.
struct CellQueue {
    explicit CellQueue(int n_x) : q(n_x + 2, 0.0), served(n_x + 2, 0.0), reneged(n_x + 2, 0.0) {}

    std::vector<double> q;
    std::vector<double> served;   // cumulative per cell
    std::vector<double> reneged;  // cumulative per cell
    double rho = 0.0;

    void deposit_increment(const GriddedMeasurePath& a, int i, int k_from, int k_to) {
        const int nx = static_cast<int>(q.size()) - 2;
        double prev_to = 0.0;
        double prev_from = 0.0;
        for (int c = 0; c <= nx; ++c) {
            const double to = a(i, k_to, c);
            const double from = k_from >= 0 ? a(i, k_from, c) : 0.0;
            q[c] += (to - prev_to) - (from - prev_from);
            prev_to = to;
            prev_from = from;
        }
        q[nx + 1] += a.overflow(i, k_to) - (k_from >= 0 ? a.overflow(i, k_from) : 0.0);
    }

    // EDF service of `capacity`; returns per-cell amounts in `step_served`.
    void serve(double capacity, std::vector<double>& step_served) {
        std::fill(step_served.begin(), step_served.end(), 0.0);
        double rem = capacity;
        for (std::size_t c = 0; c < q.size() && rem > 0.0; ++c) {
            if (q[c] <= 0.0) continue;
            const double take = std::min(q[c], rem);
            q[c] -= take;
            rem -= take;
            served[c] += take;
            step_served[c] = take;
        }
    }

    // Cells 0..last have expired.
    void renege_through(int last) {
        for (int c = 0; c <= last; ++c) {
            if (q[c] == 0.0) continue;
            reneged[c] += q[c];
            rho += q[c];
            q[c] = 0.0;
        }
    }

    void check_sign(double scale, int i, double t) const {
        for (double v : q) {
            if (v < -1e-9 * scale) {
                std::ostringstream msg;
                msg << "hard fluid stepper: negative queue mass " << v << " at node " << i << ", t = " << t;
                throw InternalError(msg.str());
            }
        }
    }
};

void write_cumulative(GriddedMeasurePath& path, int i, int k, const std::vector<double>& cells) {
    const int nx = path.grid().n_x();
    double acc = 0.0;
    for (int j = 0; j <= nx; ++j) {
        acc += cells[j];
        path(i, k, j) = acc;
    }
    path.overflow(i, k) = cells[nx + 1];
}

// Records one node's state into component 0 of single-component paths.
struct Recorder {
    explicit Recorder(const Grid& g)
        : r{GriddedMeasurePath(g, 1), GriddedMeasurePath(g, 1), GriddedMeasurePath(g, 1),
            ScalarPath(g.n_t() + 1, 0.0), ScalarPath(g.n_t() + 1, 0.0)} {}
    SingleNodeResult r;

    void record(int k, const CellQueue& s, double mu_k) {
        write_cumulative(r.xi, 0, k, s.q);
        write_cumulative(r.beta_s, 0, k, s.served);
        write_cumulative(r.beta_r, 0, k, s.reneged);
        r.rho[k] = s.rho;
        r.iota[k] = mu_k - r.beta_s.total_mass(0, k);
    }
};

struct NodeRun {
    explicit NodeRun(const Grid& g) : queue(g.n_x()), rec(g), step_served(g.n_x() + 2, 0.0) {}
    CellQueue queue;
    Recorder rec;
    std::vector<double> step_served;
};

int ratio_or_throw(const Grid& g) {
    const int q = g.deadline_to_time_ratio();
    if (q <= 0) throw ConfigError("hard fluid: dx must be an integer multiple of dt");
    return q;
}

double input_scale(const GriddedMeasurePath& a) {
    double s = 0.0;
    for (int i = 0; i < a.components(); ++i) s += a.total_mass(i, a.grid().n_t());
    return std::max(1.0, s);
}

}  // namespace

SingleNodeResult hard_single_node(const GriddedMeasurePath& alpha, int i, const ScalarPath& mu) {
    const Grid& g = alpha.grid();
    const int q = ratio_or_throw(g);
    if (mu.size() != static_cast<std::size_t>(g.n_t() + 1)) throw ShapeError("hard_single_node: mu length");
    if (mu[0] != 0.0) throw PreconditionError("hard_single_node: mu(0) must be 0");
    const double scale = input_scale(alpha);
    NodeRun run(g);
    run.queue.deposit_increment(alpha, i, -1, 0);
    run.queue.renege_through(0);
    run.rec.record(0, run.queue, mu[0]);
    for (int k = 0; k < g.n_t(); ++k) {
        run.queue.deposit_increment(alpha, i, k, k + 1);
        run.queue.serve(mu[k + 1] - mu[k], run.step_served);
        run.queue.renege_through(std::min((k + 1) / q, g.n_x()));
        run.queue.check_sign(scale, i, g.t(k + 1));
        run.rec.record(k + 1, run.queue, mu[k + 1]);
    }
    return std::move(run.rec.r);
}

GriddedMeasurePath shift_served(const GriddedMeasurePath& beta_s, int eps_cells) {
    const Grid& g = beta_s.grid();
    GriddedMeasurePath gamma(g, beta_s.components());
    for (int i = 0; i < beta_s.components(); ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = eps_cells; j <= g.n_x(); ++j) gamma(i, k, j) = beta_s(i, k, j - eps_cells);
            gamma.overflow(i, k) = beta_s.total_mass(i, k) - gamma(i, k, g.n_x());
        }
    }
    return gamma;
}

namespace {

void copy_component(GriddedMeasurePath& dst, int i, const GriddedMeasurePath& src) {
    const Grid& g = dst.grid();
    for (int k = 0; k <= g.n_t(); ++k) {
        for (int j = 0; j <= g.n_x(); ++j) dst(i, k, j) = src(0, k, j);
        dst.overflow(i, k) = src.overflow(0, k);
    }
}

}  // namespace

HardFluidSolution assemble_hard_solution(const HardFluidData& data, std::vector<SingleNodeResult> nodes) {
    const Grid g = data.grid();
    const int K = data.K();
    HardFluidSolution s{GriddedMeasurePath(g, K), GriddedMeasurePath(g, K), GriddedMeasurePath(g, K),
                        GriddedMeasurePath(g, K), GriddedMeasurePath(g, K), make_vector_path(g, K),
                        make_vector_path(g, K), data.mu, make_vector_path(g, K), data.eps};
    for (int i = 0; i < K; ++i) {
        copy_component(s.xi, i, nodes[i].xi);
        copy_component(s.beta_s, i, nodes[i].beta_s);
        copy_component(s.beta_r, i, nodes[i].beta_r);
        s.rho[i] = std::move(nodes[i].rho);
        s.iota[i] = std::move(nodes[i].iota);
    }
    s.beta = s.beta_s;
    s.beta += s.beta_r;
    s.gamma = shift_served(s.beta_s, data.eps_cells());
    const double empty_edge = g.x_max() + g.dx();
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            double edge = empty_edge;
            for (int j = 0; j <= g.n_x(); ++j) {
                if (s.xi(i, k, j) > 1e-12) {
                    edge = g.x(j);
                    break;
                }
            }
            s.sigma[i][k] = edge;
        }
    }
    return s;
}

namespace {

// alpha^i + sum_j P_ji gamma^j, truncated to levels <= last_level unless full.
GriddedMeasurePath node_input(const HardFluidData& data, const GriddedMeasurePath& gamma, int i,
                              int last_level, bool full) {
    const Grid g = data.grid();
    const auto& P = data.routing.P();
    GriddedMeasurePath in(g, 1);
    for (int k = 0; k <= g.n_t(); ++k) {
        for (int j = 0; j <= g.n_x(); ++j) {
            const int jj = full ? j : std::min(j, last_level);
            double v = data.alpha(i, k, jj);
            for (int l = 0; l < data.K(); ++l) {
                if (P(l, i) != 0.0) v += P(l, i) * gamma(l, k, jj);
            }
            in(0, k, j) = v;
        }
        if (full) {
            double v = data.alpha.overflow(i, k);
            for (int l = 0; l < data.K(); ++l) {
                if (P(l, i) != 0.0) v += P(l, i) * gamma.overflow(l, k);
            }
            in.overflow(0, k) = v;
        }
    }
    return in;
}

double path_gap(const GriddedMeasurePath& a, const GriddedMeasurePath& b, int max_level, bool with_overflow) {
    const Grid& g = a.grid();
    double worst = 0.0;
    for (int i = 0; i < a.components(); ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = 0; j <= std::min(max_level, g.n_x()); ++j) {
                worst = std::max(worst, std::abs(a(i, k, j) - b(i, k, j)));
            }
            if (with_overflow) worst = std::max(worst, std::abs(a.overflow(i, k) - b.overflow(i, k)));
        }
    }
    return worst;
}

}  // namespace

std::string SquareInductionResult::consistency_log_json() const {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : consistency_log) {
        log.push_back({{"n", r.n},
                       {"eps_level", r.eps_level},
                       {"full_input", r.full_input},
                       {"discrepancy", r.discrepancy},
                       {"gamma_change", r.gamma_change}});
    }
    return nlohmann::json{{"consistency_log", log}}.dump(2);
}

SquareInductionResult hard_network_square_induction(const HardFluidData& data, SquareInductionOptions options) {
    const Grid g = data.grid();
    const int K = data.K();
    const int e = data.eps_cells();
    const double scale = input_scale(data.alpha);
    const int n_max = static_cast<int>(std::ceil(std::max(g.t_max(), g.x_max()) / data.eps - 1e-9));
    const int extra_budget = options.max_extra_sweeps > 0
                                 ? options.max_extra_sweeps
                                 : ormt_iteration_budget(data.routing, options.fixed_point_tol) + 2;

    SquareInductionResult out;
    GriddedMeasurePath gamma(g, K);
    HardFluidSolution prev;
    int prev_level = -1;
    bool prev_full = false;
    int extra = 0;
    for (int n = 1;; ++n) {
        const int last_level = n * e - 1;
        const bool full = last_level >= g.n_x();
        std::vector<SingleNodeResult> nodes;
        nodes.reserve(K);
        for (int i = 0; i < K; ++i) {
            const auto in = node_input(data, gamma, i, last_level, full);
            nodes.push_back(hard_single_node(in, 0, data.mu[i]));
        }
        HardFluidSolution sol = assemble_hard_solution(data, std::move(nodes));

        SquareRecord rec{n, n * data.eps, full, 0.0, path_gap(sol.gamma, gamma, g.n_x(), true)};
        if (n > 1) {
            const int lvl = prev_full ? g.n_x() : prev_level;
            rec.discrepancy = std::max({path_gap(sol.xi, prev.xi, lvl, prev_full),
                                        path_gap(sol.beta_s, prev.beta_s, lvl, prev_full),
                                        path_gap(sol.beta_r, prev.beta_r, lvl, prev_full)});
            if (!prev_full && rec.discrepancy > options.consistency_tol * scale) {
                std::ostringstream msg;
                msg << "square induction: squares " << n - 1 << " and " << n << " disagree by "
                    << rec.discrepancy << " on deadlines below " << (n - 1) * data.eps;
                throw SchemeInconsistencyError(msg.str());
            }
        }
        out.consistency_log.push_back(rec);
        gamma = sol.gamma;
        prev = std::move(sol);
        prev_level = last_level;
        if (full) {
            if (n >= n_max && rec.gamma_change <= options.fixed_point_tol * scale) break;
            if (++extra > extra_budget) {
                throw NonConvergenceError("square induction: routed mass did not become stationary",
                                          rec.gamma_change);
            }
        }
        prev_full = full;
    }
    out.solution = std::move(prev);
    return out;
}

HardFluidSolution hard_network_direct(const HardFluidData& data) {
    const Grid g = data.grid();
    const int K = data.K();
    const int q = ratio_or_throw(g);
    const int e = data.eps_cells();
    const int nx = g.n_x();
    const auto& P = data.routing.P();
    const double scale = input_scale(data.alpha);

    std::vector<NodeRun> runs;
    runs.reserve(K);
    for (int i = 0; i < K; ++i) {
        if (data.mu[i][0] != 0.0) throw PreconditionError("hard_network_direct: mu(0) must be 0");
        runs.emplace_back(g);
    }
    for (int i = 0; i < K; ++i) {
        runs[i].queue.deposit_increment(data.alpha, i, -1, 0);
        runs[i].queue.renege_through(0);
        runs[i].rec.record(0, runs[i].queue, data.mu[i][0]);
    }
    std::vector<std::vector<double>> routed(K, std::vector<double>(nx + 2, 0.0));
    for (int k = 0; k < g.n_t(); ++k) {
        for (int i = 0; i < K; ++i) {
            runs[i].queue.deposit_increment(data.alpha, i, k, k + 1);
            runs[i].queue.serve(data.mu[i][k + 1] - data.mu[i][k], runs[i].step_served);
        }
        for (auto& r : routed) std::fill(r.begin(), r.end(), 0.0);
        for (int i = 0; i < K; ++i) {
            for (int j = 0; j < K; ++j) {
                if (P(i, j) == 0.0) continue;
                for (int c = 0; c <= nx + 1; ++c) {
                    const double m = runs[i].step_served[c];
                    if (m != 0.0) routed[j][std::min(c + e, nx + 1)] += P(i, j) * m;
                }
            }
        }
        for (int i = 0; i < K; ++i) {
            for (int c = 0; c <= nx + 1; ++c) runs[i].queue.q[c] += routed[i][c];
            runs[i].queue.renege_through(std::min((k + 1) / q, nx));
            runs[i].queue.check_sign(scale, i, g.t(k + 1));
            runs[i].rec.record(k + 1, runs[i].queue, data.mu[i][k + 1]);
        }
    }
    std::vector<SingleNodeResult> nodes;
    for (auto& r : runs) nodes.push_back(std::move(r.rec.r));
    return assemble_hard_solution(data, std::move(nodes));
}

bool InvariantReport::pass(double tol) const { return failing(tol) == nullptr; }

double InvariantReport::max_violation() const {
    double m = 0.0;
    for (const auto& v : worst) m = std::max(m, v.magnitude);
    return m;
}

const InvariantViolation* InvariantReport::failing(double tol) const {
    for (const auto& v : worst) {
        if (v.magnitude > tol) return &v;
    }
    return nullptr;
}

InvariantReport check_hard_invariants(const HardFluidSolution& s, const GriddedMeasurePath& alpha,
                                      const RoutingMatrix& routing, double tol) {
    const Grid& g = s.xi.grid();
    const int K = routing.size();
    const int nx = g.n_x();
    const int e = static_cast<int>(std::lround(s.eps / g.dx()));
    const int q = std::max(1, g.deadline_to_time_ratio());
    const auto& P = routing.P();

    InvariantReport rep;
    auto slot = [&](const std::string& name) -> InvariantViolation& {
        for (auto& v : rep.worst) {
            if (v.name == name) return v;
        }
        rep.worst.push_back({name, 0.0, -1, 0.0, 0.0});
        return rep.worst.back();
    };
    for (const char* name : {"gamma_shift", "beta_split", "idleness", "renege_after_deadline", "hardness",
                             "renege_identity", "mass_balance", "x_monotone", "t_monotone", "nonnegative",
                             "work_conservation", "edf_condition", "renege_at_support_edge"}) {
        slot(name);
    }
    auto note = [&](const char* name, double mag, int i, int k, int j) {
        auto& v = slot(name);
        if (mag > v.magnitude) v = {name, mag, i, g.t(k), j < 0 ? g.x_max() : g.x(j)};
    };

    for (int i = 0; i < K; ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = 0; j <= nx; ++j) {
                const double shifted = j >= e ? s.beta_s(i, k, j - e) : 0.0;
                note("gamma_shift", std::abs(s.gamma(i, k, j) - shifted), i, k, j);
                note("beta_split", std::abs(s.beta(i, k, j) - s.beta_s(i, k, j) - s.beta_r(i, k, j)), i, k, j);

                const int k_x = std::min(k, j * q);
                note("renege_identity", std::abs(s.beta_r(i, k, j) - s.rho[i][k_x]), i, k, j);

                double routed = 0.0;
                for (int l = 0; l < K; ++l) routed += P(l, i) * s.gamma(l, k, j);
                note("mass_balance", std::abs(s.xi(i, k, j) - alpha(i, k, j) - routed + s.beta(i, k, j)), i, k, j);

                if (g.x(j) < g.t(k) - 1e-12 * g.t_max()) note("hardness", std::abs(s.xi(i, k, j)), i, k, j);

                for (const GriddedMeasurePath* f : {&s.xi, &s.beta, &s.beta_s, &s.beta_r, &s.gamma}) {
                    note("nonnegative", -(*f)(i, k, j), i, k, j);
                    if (j > 0) note("x_monotone", (*f)(i, k, j - 1) - (*f)(i, k, j), i, k, j);
                }
                if (k > 0) {
                    for (const GriddedMeasurePath* f : {&s.beta, &s.beta_s, &s.beta_r, &s.gamma}) {
                        note("t_monotone", (*f)(i, k - 1, j) - (*f)(i, k, j), i, k, j);
                    }
                    // EDF: beta(x, inf) grows only while xi[0, x] is empty.
                    const double d_tail = (s.beta.total_mass(i, k) - s.beta(i, k, j)) -
                                          (s.beta.total_mass(i, k - 1) - s.beta(i, k - 1, j));
                    if (d_tail > tol) note("edf_condition", s.xi(i, k, j), i, k, j);
                }
            }
            note("gamma_shift", std::abs(s.gamma.total_mass(i, k) - s.beta_s.total_mass(i, k)), i, k, -1);
            note("beta_split",
                 std::abs(s.beta.overflow(i, k) - s.beta_s.overflow(i, k) - s.beta_r.overflow(i, k)), i, k, -1);
            note("idleness", std::abs(s.iota[i][k] - (s.mu[i][k] - s.beta_s.total_mass(i, k))), i, k, -1);
            note("renege_identity", std::abs(s.rho[i][k] - s.beta_r.total_mass(i, k)), i, k, -1);
            const int j_now = g.deadline_floor(g.t(k));
            note("renege_after_deadline", s.beta_r.total_mass(i, k) - s.beta_r(i, k, j_now), i, k, j_now);

            double routed = 0.0;
            for (int l = 0; l < K; ++l) routed += P(l, i) * s.gamma.total_mass(l, k);
            note("mass_balance",
                 std::abs(s.xi.total_mass(i, k) - alpha.total_mass(i, k) - routed + s.beta.total_mass(i, k)), i, k,
                 -1);
            note("nonnegative", -s.iota[i][k], i, k, -1);
            note("nonnegative", -s.xi.overflow(i, k), i, k, -1);
            if (k > 0) {
                note("t_monotone", s.rho[i][k - 1] - s.rho[i][k], i, k, -1);
                note("t_monotone", s.iota[i][k - 1] - s.iota[i][k], i, k, -1);
                if (s.iota[i][k] - s.iota[i][k - 1] > tol) note("work_conservation", s.xi.total_mass(i, k), i, k, -1);
                // Mass reneging during (t_{k-1}, t_k] had its deadline within one cell of t_{k-1}.
                const int j_lo = g.deadline_floor(g.t(k - 1)) - 1;
                if (j_lo >= 0) {
                    note("renege_at_support_edge", s.beta_r(i, k, j_lo) - s.beta_r(i, k - 1, j_lo), i, k, j_lo);
                }
            }
        }
    }
    return rep;
}

EdgeVerdict check_gamma_edge_property(const HardFluidSolution& sol, double tol) {
    const Grid& g = sol.gamma.grid();
    const int e = static_cast<int>(std::lround(sol.eps / g.dx()));
    EdgeVerdict v;
    for (int i = 0; i < sol.gamma.components(); ++i) {
        for (int k = 0; k < g.n_t(); ++k) {
            const int j = g.deadline_floor(g.t(k)) + e;
            if (j > g.n_x()) continue;
            // gamma is nondecreasing in t, so t0 = T is the worst case; scan all t0 anyway.
            for (int k0 = k + 1; k0 <= g.n_t(); ++k0) {
                const double inc = sol.gamma(i, k0, j) - sol.gamma(i, k, j);
                if (inc > v.worst) v = {inc <= tol, inc, i, g.t(k), g.t(k0)};
            }
        }
    }
    v.pass = v.worst <= tol;
    return v;
}

GriddedMeasurePath truncate_deadlines(const GriddedMeasurePath& alpha, double tau) {
    const Grid& g = alpha.grid();
    const int jt = g.deadline_floor(tau);
    GriddedMeasurePath out(g, alpha.components());
    for (int i = 0; i < alpha.components(); ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = 0; j <= g.n_x(); ++j) out(i, k, j) = alpha(i, k, std::min(j, jt));
        }
    }
    return out;
}

TruncationVerdict check_truncation_nonanticipation(const HardFluidData& data, double tau, double tol) {
    const Grid g = data.grid();
    TruncationVerdict v;
    if (!(tau > 0.0)) return v;
    if (tau > std::min(g.t_max(), g.x_max()) * (1.0 + 1e-12)) {
        throw PreconditionError("truncation check: tau must not exceed min(T, X)");
    }
    const double cells = tau / g.dx();
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells)) {
        throw PreconditionError("truncation check: tau must be a deadline grid node");
    }
    HardFluidData cut = data;
    cut.alpha = truncate_deadlines(data.alpha, tau);
    const auto full = hard_network_square_induction(data).solution;
    const auto part = hard_network_square_induction(cut).solution;
    const int kt = g.time_floor(tau);
    const int jt = g.deadline_floor(tau);
    auto compare = [&](const GriddedMeasurePath& a, const GriddedMeasurePath& b, const char* name) {
        for (int i = 0; i < a.components(); ++i) {
            for (int k = 0; k <= kt; ++k) {
                for (int j = 0; j <= jt; ++j) {
                    const double d = std::abs(a(i, k, j) - b(i, k, j));
                    if (d > v.worst) {
                        v.worst = d;
                        v.field = name;
                    }
                }
            }
        }
    };
    compare(full.xi, part.xi, "xi");
    compare(full.beta_s, part.beta_s, "beta_s");
    compare(full.beta_r, part.beta_r, "beta_r");
    for (int i = 0; i < data.K(); ++i) {
        for (int k = 0; k <= kt; ++k) {
            const double d = std::abs(full.rho[i][k] - part.rho[i][k]);
            if (d > v.worst) {
                v.worst = d;
                v.field = "rho";
            }
        }
    }
    v.pass = v.worst <= tol;
    return v;
}

double hard_solution_distance(const HardFluidSolution& a, const HardFluidSolution& b) {
    const Grid& g = a.xi.grid();
    const double T = g.t_max();
    double d = std::max({sup_cdf_distance(a.xi, b.xi, T), sup_cdf_distance(a.beta_s, b.beta_s, T),
                         sup_cdf_distance(a.beta_r, b.beta_r, T), sup_distance(a.rho, b.rho, g, T),
                         sup_distance(a.iota, b.iota, g, T)});
    for (int i = 0; i < a.xi.components(); ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            d = std::max({d, std::abs(a.xi.total_mass(i, k) - b.xi.total_mass(i, k)),
                          std::abs(a.beta_s.total_mass(i, k) - b.beta_s.total_mass(i, k))});
        }
    }
    return d;
}

}  // namespace edfnet
