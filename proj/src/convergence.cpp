#include "edfnet/convergence.hpp"

#include "edfnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace edfnet {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json stats_json(const SampleStats& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"ci", s.ci}, {"max", s.max}};
}

json grid_json(const Grid& g) {
    return {{"T", g.t_max()}, {"X", g.x_max()}, {"n_t", g.n_t()}, {"n_x", g.n_x()}};
}

std::string num(double v) {
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

}  // namespace

SampleStats sample_stats(const std::vector<double>& xs) {
    SampleStats s;
    s.n = static_cast<int>(xs.size());
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / s.n;
    s.max = *std::max_element(xs.begin(), xs.end());
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / (s.n - 1));
        s.ci = 1.96 * s.sd / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t p = 0; p < std::min(x.size(), y.size()); ++p) {
        if (x[p] > 0.0 && y[p] > 0.0) pts.emplace_back(std::log(x[p]), std::log(y[p]));
    }
    if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [a, b] : pts) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

void parallel_for(int n, const std::function<void(int)>& body, int threads) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int p = 0; p < n; ++p) body(p);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            (void)w;
            while (!failed) {
                const int p = next++;
                if (p >= n) break;
                try {
                    body(p);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

GriddedMeasurePath restrict_to_grid(const GriddedMeasurePath& fine, const Grid& coarse) {
    const Grid& f = fine.grid();
    if (f.n_t() % coarse.n_t() != 0 || f.n_x() % coarse.n_x() != 0 ||
        std::abs(f.t_max() - coarse.t_max()) > 1e-12 * coarse.t_max() ||
        std::abs(f.x_max() - coarse.x_max()) > 1e-12 * coarse.x_max()) {
        throw ShapeError("restrict_to_grid: grid does not refine the target grid");
    }
    const int rt = f.n_t() / coarse.n_t();
    const int rx = f.n_x() / coarse.n_x();
    GriddedMeasurePath out(coarse, fine.components());
    for (int i = 0; i < fine.components(); ++i) {
        for (int k = 0; k <= coarse.n_t(); ++k) {
            for (int j = 0; j <= coarse.n_x(); ++j) out(i, k, j) = fine(i, k * rt, j * rx);
            out.overflow(i, k) = fine.overflow(i, k * rt);
        }
    }
    return out;
}

VectorPath restrict_to_grid(const VectorPath& fine, const Grid& fine_grid, const Grid& coarse) {
    if (fine_grid.n_t() % coarse.n_t() != 0) throw ShapeError("restrict_to_grid: grid does not refine the target grid");
    const int rt = fine_grid.n_t() / coarse.n_t();
    VectorPath out = make_vector_path(coarse, static_cast<int>(fine.size()));
    for (std::size_t i = 0; i < fine.size(); ++i) {
        for (int k = 0; k <= coarse.n_t(); ++k) out[i][k] = fine[i][k * rt];
    }
    return out;
}

FluidReference fluid_reference(const NetworkSpec& spec, const Grid& grid, Policy policy) {
    FluidReference ref;
    ref.policy = policy;
    const Grid fine = grid.refined();
    if (policy == Policy::HardEdf) {
        const auto coarse = hard_network_square_induction(make_hard_data(spec, grid)).solution;
        const auto refined = hard_network_square_induction(make_hard_data(spec, fine)).solution;
        ref.xi_coarse = coarse.xi;
        ref.rho_coarse = coarse.rho;
        ref.xi = restrict_to_grid(refined.xi, grid);
        ref.rho = restrict_to_grid(refined.rho, fine, grid);
        ref.bias = std::max(sup_cdf_distance(ref.xi, ref.xi_coarse, grid.t_max()),
                            sup_distance(ref.rho, ref.rho_coarse, grid, grid.t_max()));
    } else {
        const auto coarse = vmvsm_solve(build_alpha(spec, grid), build_mu(spec, grid), spec.routing);
        const auto refined = vmvsm_solve(build_alpha(spec, fine), build_mu(spec, fine), spec.routing);
        ref.xi_coarse = coarse.xi;
        ref.xi = restrict_to_grid(refined.xi, grid);
        ref.rho = ref.rho_coarse = make_vector_path(grid, spec.K());
        ref.bias = sup_cdf_distance(ref.xi, ref.xi_coarse, grid.t_max());
    }
    return ref;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::GridLimited: return "grid-limited";
    }
    return "unknown";
}

ConvergenceReport run_convergence(const Scenario& scenario, const ConvergenceOptions& options) {
    if (options.N_list.empty()) throw ConfigError("run_convergence: empty N list");
    if (options.reps < 1) throw ConfigError("run_convergence: reps must be at least 1");
    if (options.policy == Policy::Fisfo) throw ConfigError("run_convergence: policy must be soft or hard");
    const auto t_start = std::chrono::steady_clock::now();
    const Grid& g = scenario.grid;
    const bool hard = options.policy == Policy::HardEdf;

    ConvergenceReport rep;
    rep.scenario_id = scenario.network.id;
    rep.policy = options.policy;
    rep.seed = options.seed;
    rep.reps = options.reps;
    rep.grid = g;

    const FluidReference ref = fluid_reference(scenario.network, g, options.policy);
    rep.bias = ref.bias;
    rep.fluid_seconds = seconds_since(t_start);

    for (std::size_t l = 0; l < options.N_list.size(); ++l) {
        const int N = options.N_list[l];
        ConvergenceLevel lev;
        lev.N = N;
        lev.xi_errors.assign(options.reps, 0.0);
        lev.rho_errors.assign(options.reps, 0.0);
        const auto t_level = std::chrono::steady_clock::now();
        parallel_for(
            options.reps,
            [&](int r) {
                SimOptions so;
                so.policy = options.policy;
                so.N = N;
                so.seed = options.seed;
                so.replication = static_cast<std::uint64_t>(l) * 1000000ULL + r;
                so.service = options.service;
                so.record_events = false;
                const SimTrace tr = simulate(scenario.network, g, so);
                lev.xi_errors[r] = sup_cdf_distance(tr.scaled(tr.xi), ref.xi, g.t_max());
                if (hard) lev.rho_errors[r] = sup_distance(tr.scaled(tr.rho), ref.rho, g, g.t_max());
            },
            options.threads);
        lev.seconds = seconds_since(t_level);
        lev.errors.resize(options.reps);
        for (int r = 0; r < options.reps; ++r) lev.errors[r] = std::max(lev.xi_errors[r], lev.rho_errors[r]);
        lev.xi = sample_stats(lev.xi_errors);
        lev.rho = sample_stats(lev.rho_errors);
        lev.error = sample_stats(lev.errors);
        rep.levels.push_back(std::move(lev));
    }

    std::vector<double> ns;
    std::vector<double> means;
    for (const auto& lev : rep.levels) {
        ns.push_back(lev.N);
        means.push_back(lev.error.mean);
    }
    rep.slope = loglog_slope(ns, means);
    rep.strictly_decreasing = true;
    for (std::size_t l = 1; l < rep.levels.size(); ++l) {
        const auto& a = rep.levels[l - 1].error;
        const auto& b = rep.levels[l].error;
        if (!(b.mean + b.ci < a.mean - a.ci)) rep.strictly_decreasing = false;
    }
    rep.threshold = options.threshold_factor * rep.bias;
    rep.within_threshold = rep.levels.back().error.mean <= rep.threshold;
    const double smallest = *std::min_element(means.begin(), means.end());
    rep.grid_limited = rep.bias >= smallest / 3.0;
    if (rep.grid_limited) {
        rep.verdict = Verdict::GridLimited;
    } else {
        rep.verdict = rep.strictly_decreasing && rep.within_threshold ? Verdict::Pass : Verdict::Fail;
    }
    rep.total_seconds = seconds_since(t_start);
    return rep;
}

std::string ConvergenceReport::to_json() const {
    json levels_json = json::array();
    for (const auto& lev : levels) {
        levels_json.push_back({{"N", lev.N},
                               {"xi", stats_json(lev.xi)},
                               {"rho", stats_json(lev.rho)},
                               {"error", stats_json(lev.error)},
                               {"xi_errors", lev.xi_errors},
                               {"rho_errors", lev.rho_errors},
                               {"seconds", lev.seconds}});
    }
    json doc{{"scenario", scenario_id},
             {"policy", edfnet::to_string(policy)},
             {"seed", seed},
             {"reps", reps},
             {"replication_ids", "level * 1000000 + rep"},
             {"grid", grid_json(grid)},
             {"bias", bias},
             {"levels", levels_json},
             {"slope", std::isfinite(slope) ? json(slope) : json(nullptr)},
             {"strictly_decreasing", strictly_decreasing},
             {"threshold", threshold},
             {"within_threshold", within_threshold},
             {"grid_limited", grid_limited},
             {"verdict", edfnet::to_string(verdict)},
             {"fluid_seconds", fluid_seconds},
             {"total_seconds", total_seconds}};
    return doc.dump(2);
}

std::string ConvergenceReport::to_markdown() const {
    std::ostringstream o;
    o << "# Convergence report: " << scenario_id << "\n\n";
    o << "Policy `" << edfnet::to_string(policy) << "`, master seed " << seed << ", " << reps
      << " replications per N, grid T = " << grid.t_max() << ", X = " << grid.x_max() << ", n_t = " << grid.n_t()
      << ", n_x = " << grid.n_x() << ".\n\n";
    o << "| N | mean error | 95% CI | max | xi mean | rho mean | seconds |\n";
    o << "|---|---|---|---|---|---|---|\n";
    o << std::setprecision(4);
    for (const auto& lev : levels) {
        o << "| " << lev.N << " | " << lev.error.mean << " | " << lev.error.ci << " | " << lev.error.max << " | "
          << lev.xi.mean << " | " << lev.rho.mean << " | " << lev.seconds << " |\n";
    }
    o << "\nFluid grid bias (g vs g/2): " << bias << "; threshold " << threshold << ".\n\n";
    o << "Log-log slope (informational): " << slope << ".\n\n";
    o << "- strictly decreasing beyond CI: " << (strictly_decreasing ? "yes" : "no") << "\n";
    o << "- largest-N error within threshold: " << (within_threshold ? "yes" : "no") << "\n";
    o << "- grid-limited: " << (grid_limited ? "yes" : "no") << "\n";
    o << "- verdict: **" << edfnet::to_string(verdict) << "**\n";
    return o.str();
}

std::string ConvergenceReport::to_csv() const {
    std::ostringstream o;
    o << "N,rep,replication_id,seed,xi_error,rho_error,error\n";
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& lev = levels[l];
        for (std::size_t r = 0; r < lev.errors.size(); ++r) {
            o << lev.N << ',' << r << ',' << (l * 1000000 + r) << ',' << seed << ',' << num(lev.xi_errors[r]) << ','
              << num(lev.rho_errors[r]) << ',' << num(lev.errors[r]) << '\n';
        }
    }
    return o.str();
}

MartingaleStats run_martingale_check(const Scenario& scenario, int N, int reps, std::uint64_t seed, int threads) {
    if (reps < 2) throw ConfigError("run_martingale_check: need at least 2 replications");
    const auto& spec = scenario.network;
    const Grid& g = scenario.grid;
    const int K = spec.K();
    MartingaleStats st;
    st.N = N;
    st.reps = reps;
    st.seed = seed;
    if (!spec.routing.has_probabilistic_row()) {
        st.degenerate = true;
        st.notice = "routing is deterministic everywhere; every routing error vanishes and the bound holds at 0";
    }

    constexpr int kLattice = 5;
    struct Point {
        int i, j;
        double t, x;
    };
    std::vector<Point> pts;
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            for (int a = 0; a < kLattice; ++a) {
                for (int b = 0; b < kLattice; ++b) {
                    pts.push_back({i, j, g.t_max() * a / (kLattice - 1), g.x_max() * b / (kLattice - 1)});
                }
            }
        }
    }
    std::vector<std::vector<double>> E(pts.size(), std::vector<double>(reps));
    std::vector<std::vector<double>> D(pts.size(), std::vector<double>(reps));
    parallel_for(
        reps,
        [&](int r) {
            SimOptions so;
            so.policy = Policy::SoftEdf;
            so.N = N;
            so.seed = seed;
            so.replication = static_cast<std::uint64_t>(r);
            so.service = scenario.service;
            so.record_events = false;
            const SimTrace tr = simulate(spec, g, so);
            for (std::size_t p = 0; p < pts.size(); ++p) {
                E[p][r] = routing_error_at(tr, spec.routing, pts[p].i, pts[p].j, pts[p].t, pts[p].x);
                D[p][r] = static_cast<double>(departures_by(tr, pts[p].i, pts[p].t));
            }
        },
        threads);

    for (std::size_t p = 0; p < pts.size(); ++p) {
        std::vector<double> sq(reps);
        double me = 0.0;
        for (int r = 0; r < reps; ++r) {
            sq[r] = E[p][r] * E[p][r];
            me += E[p][r];
        }
        const SampleStats s2 = sample_stats(sq);
        const SampleStats sd = sample_stats(D[p]);
        MartingaleProbe pr;
        pr.i = pts[p].i;
        pr.j = pts[p].j;
        pr.t = pts[p].t;
        pr.x = pts[p].x;
        pr.mean_E = me / reps;
        pr.second_moment = s2.mean;
        pr.upper_ci = s2.mean + s2.ci;
        pr.mean_D = sd.mean;
        pr.bound = 41.0 * sd.mean;
        pr.pass = pr.upper_ci <= pr.bound;
        if (!pr.pass) {
            ++st.violations;
            st.pass = false;
        }
        st.probes.push_back(pr);
    }
    return st;
}

std::string MartingaleStats::to_json() const {
    json probes_json = json::array();
    for (const auto& p : probes) {
        probes_json.push_back({{"i", p.i},
                               {"j", p.j},
                               {"t", p.t},
                               {"x", p.x},
                               {"mean_E", p.mean_E},
                               {"second_moment", p.second_moment},
                               {"upper_ci", p.upper_ci},
                               {"mean_D", p.mean_D},
                               {"bound", p.bound},
                               {"pass", p.pass}});
    }
    return json{{"N", N},       {"reps", reps},         {"seed", seed},           {"degenerate", degenerate},
                {"notice", notice}, {"violations", violations}, {"pass", pass}, {"probes", probes_json}}
        .dump(2);
}

std::string MartingaleStats::to_csv() const {
    std::ostringstream o;
    o << "i,j,t,x,mean_E,second_moment,upper_ci,mean_D,bound,pass\n";
    for (const auto& p : probes) {
        o << p.i << ',' << p.j << ',' << num(p.t) << ',' << num(p.x) << ',' << num(p.mean_E) << ','
          << num(p.second_moment) << ',' << num(p.upper_ci) << ',' << num(p.mean_D) << ',' << num(p.bound) << ','
          << (p.pass ? 1 : 0) << '\n';
    }
    return o.str();
}

namespace {

// Largest number of sorted values inside any closed window [v, v + delta].
std::int64_t max_closed_window(std::vector<double> v, double delta) {
    std::sort(v.begin(), v.end());
    std::int64_t best = 0;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < v.size(); ++lo) {
        hi = std::max(hi, lo);
        while (hi < v.size() && v[hi] <= v[lo] + delta) ++hi;
        best = std::max<std::int64_t>(best, static_cast<std::int64_t>(hi - lo));
    }
    return best;
}

// Largest number of sorted values inside any half-open window [v, v + delta).
std::int64_t max_open_window(std::vector<double> v, double delta) {
    std::sort(v.begin(), v.end());
    std::int64_t best = 0;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < v.size(); ++lo) {
        hi = std::max(hi, lo);
        while (hi < v.size() && v[hi] < v[lo] + delta) ++hi;
        best = std::max<std::int64_t>(best, static_cast<std::int64_t>(hi - lo));
    }
    return best;
}

// Marks with t <= s and deadline in [a, b].
double count(const std::vector<Mark>& marks, double s, double a, double b) {
    double c = 0.0;
    for (const auto& m : marks) {
        if (m.t > s) break;
        if (m.deadline >= a && m.deadline <= b) c += 1.0;
    }
    return c;
}

double count_upto(const std::vector<Mark>& marks, double s, double b) {
    return count(marks, s, -std::numeric_limits<double>::infinity(), b);
}

}  // namespace

TightnessRow tightness_on_trace(const SimTrace& trace, double delta, int probes) {
    if (trace.policy != Policy::HardEdf) throw PreconditionError("tightness: requires a hard-policy trace");
    if (!(delta > 0.0)) throw ConfigError("tightness: delta must be positive");
    const int K = trace.K;
    const double N = trace.N;
    const double T = trace.grid.t_max();
    const double eps = trace.eps;
    TightnessRow row;
    row.N = trace.N;
    row.delta = delta;

    double lhs = 0.0;
    double wa = 0.0;
    for (int i = 0; i < K; ++i) {
        std::vector<double> tau;
        for (const auto& m : trace.marks[i].reneges) {
            if (m.t <= T) tau.push_back(m.t);
        }
        lhs = std::max(lhs, max_open_window(tau, delta) / N);
        std::vector<double> d;
        for (const auto& m : trace.marks[i].arrivals) d.push_back(m.deadline);
        wa = std::max(wa, max_closed_window(d, delta) / N);
    }
    row.lhs = lhs;
    row.alpha_modulus = wa;
    row.rhs = (K * T / eps + 1.0) * (wa + 1.0 / N);

    const double inf = std::numeric_limits<double>::infinity();
    constexpr double kSlack = 1e-12;
    const double span = std::max(0.0, T - delta);
    for (int p = 0; p < probes; ++p) {
        const double t = probes > 1 ? span * p / (probes - 1) : 0.0;
        const double s = t + delta;
        for (int i = 0; i < K; ++i) {
            const auto& mk = trace.marks[i];
            double reneged = 0.0;
            for (const auto& m : mk.reneges) {
                if (m.t > t && m.t <= s) reneged += 1.0;
            }
            const double l0 = reneged / N;
            const double l1 =
                (count_upto(mk.arrivals, s, s) - count_upto(mk.arrivals, t, t) + count_upto(mk.routed_in, s, s) -
                 count_upto(mk.routed_in, t, t)) /
                N;
            const double a_win = count(mk.arrivals, inf, t, s) / N;
            double g_win = 0.0;
            double b_win = 0.0;
            for (int j = 0; j < K; ++j) {
                g_win += count(trace.marks[j].departures, s, t, s);
                b_win += count(trace.marks[j].starts, s, t - eps, s - eps);
            }
            const double l2 = a_win + g_win / N;
            const double l3 = a_win + b_win / N + 1.0 / N;
            double l4 = a_win + 1.0 / N;
            const int n_max = static_cast<int>(std::floor(s / eps));
            for (int n = 1; n <= n_max; ++n) {
                for (int j = 0; j < K; ++j) {
                    l4 += count(trace.marks[j].arrivals, inf, t - n * eps, s - n * eps) / N + 1.0 / N;
                }
            }
            const double chain[] = {l0, l1, l2, l3, l4, row.rhs};
            for (int c = 1; c < 6; ++c) {
                const double gap = chain[c - 1] - chain[c];
                if (gap > kSlack) {
                    ++row.chain_violations;
                    row.worst_chain_gap = std::max(row.worst_chain_gap, gap);
                }
            }
        }
    }
    row.pass = row.lhs <= row.rhs && row.chain_violations == 0;
    return row;
}

TightnessTable run_tightness_surrogate(const Scenario& scenario, const std::vector<int>& N_list, int reps,
                                       const std::vector<double>& delta_list, std::uint64_t seed, int threads) {
    if (!(scenario.network.eps > 0.0)) throw ConfigError("tightness: the scenario needs eps > 0");
    TightnessTable table;
    for (std::size_t l = 0; l < N_list.size(); ++l) {
        std::vector<std::vector<TightnessRow>> rows(reps);
        parallel_for(
            reps,
            [&](int r) {
                SimOptions so;
                so.policy = Policy::HardEdf;
                so.N = N_list[l];
                so.seed = seed;
                so.replication = static_cast<std::uint64_t>(l) * 1000000ULL + r;
                so.service = scenario.service;
                so.record_events = false;
                const SimTrace tr = simulate(scenario.network, scenario.grid, so);
                for (double d : delta_list) {
                    TightnessRow row = tightness_on_trace(tr, d);
                    row.rep = r;
                    rows[r].push_back(row);
                }
            },
            threads);
        for (const auto& rr : rows) {
            for (const auto& row : rr) {
                table.rows.push_back(row);
                table.pass = table.pass && row.pass;
            }
        }
    }
    return table;
}

std::string TightnessTable::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"N", r.N},
                             {"rep", r.rep},
                             {"delta", r.delta},
                             {"lhs", r.lhs},
                             {"rhs", r.rhs},
                             {"alpha_modulus", r.alpha_modulus},
                             {"chain_violations", r.chain_violations},
                             {"worst_chain_gap", r.worst_chain_gap},
                             {"pass", r.pass}});
    }
    return json{{"pass", pass}, {"rows", rows_json}}.dump(2);
}

std::string TightnessTable::to_csv() const {
    std::ostringstream o;
    o << "N,rep,delta,lhs,rhs,alpha_modulus,chain_violations,pass\n";
    for (const auto& r : rows) {
        o << r.N << ',' << r.rep << ',' << num(r.delta) << ',' << num(r.lhs) << ',' << num(r.rhs) << ','
          << num(r.alpha_modulus) << ',' << r.chain_violations << ',' << (r.pass ? 1 : 0) << '\n';
    }
    return o.str();
}

FisfoVerdict run_soft_fisfo_equivalence(const Scenario& scenario, int N, std::uint64_t seed, bool negative_control) {
    NetworkSpec spec = scenario.network;
    if (!negative_control) {
        for (auto& nd : spec.nodes) {
            nd.lead = LeadDistribution::uniform(1e-9, 2e-9);
            nd.initial = InitialProfile();
        }
    }
    SimOptions so;
    so.N = N;
    so.seed = seed;
    so.service = scenario.service;
    so.policy = Policy::SoftEdf;
    const auto edf = service_start_order(simulate(spec, scenario.grid, so));
    so.policy = Policy::Fisfo;
    const auto fisfo = service_start_order(simulate(spec, scenario.grid, so));

    FisfoVerdict v;
    v.identical = true;
    for (int i = 0; i < spec.K() && v.identical; ++i) {
        v.starts += static_cast<std::int64_t>(edf[i].size());
        const std::size_t n = std::min(edf[i].size(), fisfo[i].size());
        for (std::size_t p = 0; p < n; ++p) {
            if (edf[i][p] != fisfo[i][p]) {
                v.identical = false;
                v.mismatch_node = i;
                v.mismatch_position = static_cast<std::int64_t>(p);
                break;
            }
        }
        if (v.identical && edf[i].size() != fisfo[i].size()) {
            v.identical = false;
            v.mismatch_node = i;
            v.mismatch_position = static_cast<std::int64_t>(n);
        }
    }
    return v;
}

std::string FisfoVerdict::to_json() const {
    return json{{"identical", identical},
                {"mismatch_node", mismatch_node},
                {"mismatch_position", mismatch_position},
                {"starts", starts}}
        .dump(2);
}

double DegenerationGap::worst() const { return std::max({xi, iota, rho}); }

DegenerationGap hard_soft_degeneration_gap(const NetworkSpec& spec, const Grid& grid) {
    for (const auto& nd : spec.nodes) {
        if (!(nd.lead.lo() > grid.t_max())) {
            throw PreconditionError("degeneration check: every lead time must exceed the horizon");
        }
        if (!nd.initial.empty() && !(nd.initial.support_lo() > grid.t_max())) {
            throw PreconditionError("degeneration check: initial deadlines must exceed the horizon");
        }
    }
    const auto hard = hard_network_square_induction(make_hard_data(spec, grid)).solution;
    const auto soft = vmvsm_solve(build_alpha(spec, grid), build_mu(spec, grid), spec.routing);
    DegenerationGap gap;
    const double T = grid.t_max();
    if (spec.K() == 1) {
        gap.xi = sup_cdf_distance(hard.xi, soft.xi, T);
    } else {
        for (int i = 0; i < spec.K(); ++i) {
            gap.xi = std::max(gap.xi, sup_distance(hard.xi.total(i), soft.xi.total(i), grid, T));
        }
    }
    gap.iota = sup_distance(hard.iota, soft.iota, grid, T);
    for (const auto& r : hard.rho) {
        for (double v : r) gap.rho = std::max(gap.rho, std::abs(v));
    }
    return gap;
}

}  // namespace edfnet
