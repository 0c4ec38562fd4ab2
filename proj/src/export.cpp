#include "edfnet/export.hpp"

#include "edfnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace edfnet {

using nlohmann::json;
namespace fs = std::filesystem;

void write_events_ndjson(std::ostream& out, const std::vector<SimEvent>& events) {
    for (const auto& e : events) {
        out << json{{"t", e.t},
                    {"kind", to_string(e.kind)},
                    {"job", e.job},
                    {"node", e.node},
                    {"deadline", e.deadline},
                    {"extra", e.extra}}
                   .dump()
            << '\n';
    }
}

std::vector<SimEvent> read_events_ndjson(std::istream& in) {
    std::vector<SimEvent> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            SimEvent e;
            e.t = j.at("t").get<double>();
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "arrival") e.kind = EventKind::Arrival;
            else if (kind == "service_start") e.kind = EventKind::ServiceStart;
            else if (kind == "departure") e.kind = EventKind::Departure;
            else if (kind == "routing") e.kind = EventKind::Routing;
            else if (kind == "renege") e.kind = EventKind::Renege;
            else throw ConfigError("unknown event kind '" + kind + "'");
            e.job = j.at("job").get<std::int64_t>();
            e.node = j.at("node").get<int>();
            e.deadline = j.at("deadline").get<double>();
            e.extra = j.at("extra").get<int>();
            out.push_back(e);
        } catch (const json::exception& ex) {
            throw ConfigError("event log line " + std::to_string(n) + ": " + ex.what());
        } catch (const ConfigError& ex) {
            throw ConfigError("event log line " + std::to_string(n) + ": " + ex.what());
        }
    }
    return out;
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << text;
}

void write_table(const fs::path& p, const TrajectoryTable& table) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    write_trajectory_csv(out, table);
}

TrajectoryTable read_table(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    return read_trajectory_csv(in);
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

const GriddedMeasurePath& field(const TrajectoryTable& t, const std::string& name) {
    auto it = t.fields.find(name);
    if (it == t.fields.end()) throw ConfigError("exported table lacks field '" + name + "'");
    return it->second;
}

const VectorPath& scalar(const TrajectoryTable& t, const std::string& name) {
    auto it = t.scalars.find(name);
    if (it == t.scalars.end()) throw ConfigError("exported table lacks path '" + name + "'");
    return it->second;
}

RoutingMatrix routing_from(const json& meta) {
    try {
        return RoutingMatrix(meta.at("P").get<std::vector<std::vector<double>>>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("meta.json: ") + e.what());
    }
}

double min_over(const GriddedMeasurePath& f) {
    double m = f.min_value();
    for (int i = 0; i < f.components(); ++i) {
        for (int k = 0; k <= f.grid().n_t(); ++k) m = std::min(m, f.overflow(i, k));
    }
    return m;
}

}  // namespace

void export_soft_solution(const std::string& dir, const VmvsmSolution& sol, const GriddedMeasurePath& alpha,
                          const VectorPath& mu, const RoutingMatrix& routing) {
    ensure_dir(dir);
    TrajectoryTable t;
    t.grid = alpha.grid();
    t.fields = {{"alpha", alpha}, {"xi", sol.xi}, {"beta", sol.beta}, {"beta_tail", sol.beta_tail}};
    t.scalars = {{"mu", mu}, {"iota", sol.iota}};
    write_table(fs::path(dir) / "solution.csv", t);
    write_file(fs::path(dir) / "meta.json",
               json{{"kind", "soft"}, {"K", routing.size()}, {"P", routing.to_rows()}}.dump(2));
    write_file(fs::path(dir) / "diagnostics.json", sol.diagnostics.to_json());
}

void export_hard_solution(const std::string& dir, const HardFluidSolution& sol, const HardFluidData& data,
                          const std::string& consistency_log_json) {
    ensure_dir(dir);
    TrajectoryTable t;
    t.grid = data.grid();
    t.fields = {{"alpha", data.alpha}, {"xi", sol.xi},         {"beta", sol.beta},
                {"beta_s", sol.beta_s}, {"beta_r", sol.beta_r}, {"gamma", sol.gamma}};
    t.scalars = {{"mu", sol.mu}, {"iota", sol.iota}, {"rho", sol.rho}, {"sigma", sol.sigma}};
    write_table(fs::path(dir) / "solution.csv", t);
    write_file(fs::path(dir) / "meta.json",
               json{{"kind", "hard"}, {"K", data.K()}, {"P", data.routing.to_rows()}, {"eps", sol.eps},
                    {"warnings", data.warnings}}
                   .dump(2));
    if (!consistency_log_json.empty()) write_file(fs::path(dir) / "consistency_log.json", consistency_log_json);
}

void export_trace(const std::string& dir, const SimTrace& trace, const RoutingMatrix& routing) {
    ensure_dir(dir);
    TrajectoryTable t;
    t.grid = trace.grid;
    t.fields = {{"alpha", trace.alpha},   {"routed", trace.routed}, {"xi", trace.xi},
                {"beta", trace.beta},     {"beta_s", trace.beta_s}, {"beta_r", trace.beta_r},
                {"gamma", trace.gamma},   {"busy", trace.busy}};
    t.scalars = {{"mu", trace.mu},     {"effort", trace.effort},          {"iota", trace.iota},
                 {"rho", trace.rho},   {"departures", trace.departures}};
    write_table(fs::path(dir) / "trace.csv", t);
    write_file(fs::path(dir) / "meta.json",
               json{{"kind", "trace"},
                    {"K", trace.K},
                    {"P", routing.to_rows()},
                    {"N", trace.N},
                    {"policy", to_string(trace.policy)},
                    {"eps", trace.eps},
                    {"seed", trace.seed},
                    {"replication", trace.replication},
                    {"event_count", trace.event_count},
                    {"max_balance_residual", trace.max_balance_residual},
                    {"hardness_violations", trace.hardness_violations},
                    {"departure_identity_gap", trace.departure_identity_gap},
                    {"error_identity_gap", trace.error_identity_gap}}
                   .dump(2));
    if (!trace.events.empty()) {
        std::ofstream out(fs::path(dir) / "events.ndjson");
        if (!out) throw ConfigError("cannot write events.ndjson in '" + dir + "'");
        write_events_ndjson(out, trace.events);
    }
}

bool ValidationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.pass; });
}

const ValidationCheck* ValidationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.pass) return &c;
    }
    return nullptr;
}

std::string ValidationReport::to_json() const {
    json arr = json::array();
    for (const auto& c : checks) arr.push_back({{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}});
    return json{{"kind", kind}, {"pass", pass()}, {"checks", arr}}.dump(2);
}

namespace {

void add(ValidationReport& r, const std::string& name, double value, double tol) {
    r.checks.push_back({name, value, tol, value <= tol});
}

ValidationReport validate_soft(const TrajectoryTable& t, const json& meta, double tol) {
    ValidationReport r;
    r.kind = "soft";
    const RoutingMatrix routing = routing_from(meta);
    VmvsmSolution sol;
    sol.xi = field(t, "xi");
    sol.beta = field(t, "beta");
    sol.beta_tail = field(t, "beta_tail");
    sol.iota = scalar(t, "iota");
    const auto& alpha = field(t, "alpha");
    const auto& mu = scalar(t, "mu");
    double neg = 0.0;
    for (const GriddedMeasurePath* f : std::initializer_list<const GriddedMeasurePath*>{&sol.xi, &sol.beta, &sol.beta_tail, &alpha}) neg = std::max(neg, -min_over(*f));
    for (const auto& v : sol.iota) {
        for (double x : v) neg = std::max(neg, -x);
    }
    add(r, "nonnegative", neg, tol);
    const VmvspResiduals res = vmvsp_residuals(sol, alpha, mu, routing);
    const double scale = std::max(1.0, res.input_mass);
    add(r, "balance", res.balance, 1e-6 * scale);
    add(r, "edf_complementarity", res.edf_complementarity, 1e-6 * scale);
    add(r, "idle_complementarity", res.idle_complementarity, 1e-6 * scale);
    add(r, "capacity", res.capacity, 1e-6 * scale);
    add(r, "x_monotone", res.x_monotonicity_violation, tol);
    add(r, "tail_monotone", res.tail_monotonicity_violation, tol);
    return r;
}

ValidationReport validate_hard(const TrajectoryTable& t, const json& meta, double tol) {
    ValidationReport r;
    r.kind = "hard";
    const RoutingMatrix routing = routing_from(meta);
    HardFluidSolution sol;
    sol.xi = field(t, "xi");
    sol.beta = field(t, "beta");
    sol.beta_s = field(t, "beta_s");
    sol.beta_r = field(t, "beta_r");
    sol.gamma = field(t, "gamma");
    sol.mu = scalar(t, "mu");
    sol.iota = scalar(t, "iota");
    sol.rho = scalar(t, "rho");
    sol.sigma = scalar(t, "sigma");
    sol.eps = meta.value("eps", 0.0);
    const auto& alpha = field(t, "alpha");
    double neg = 0.0;
    for (const GriddedMeasurePath* f :
         std::initializer_list<const GriddedMeasurePath*>{&sol.xi, &sol.beta, &sol.beta_s, &sol.beta_r, &sol.gamma, &alpha}) {
        neg = std::max(neg, -min_over(*f));
    }
    add(r, "nonnegative", neg, tol);
    const InvariantReport inv = check_hard_invariants(sol, alpha, routing, tol);
    for (const auto& w : inv.worst) {
        if (w.name == "nonnegative") continue;
        add(r, w.name, w.magnitude, tol);
    }
    return r;
}

ValidationReport validate_trace(const TrajectoryTable& t, const json& meta, double tol) {
    ValidationReport r;
    r.kind = "trace";
    const int K = meta.at("K").get<int>();
    const bool hard = meta.value("policy", std::string("soft")) == "hard";
    const auto& alpha = field(t, "alpha");
    const auto& routed = field(t, "routed");
    const auto& xi = field(t, "xi");
    const auto& beta = field(t, "beta");
    const auto& beta_s = field(t, "beta_s");
    const auto& beta_r = field(t, "beta_r");
    const auto& gamma = field(t, "gamma");
    const Grid& g = t.grid;
    if (alpha.components() != K || routed.components() != K * K) throw ConfigError("trace: component count mismatch");

    double neg = 0.0;
    double frac = 0.0;
    double mono = 0.0;
    for (const auto* f : {&alpha, &routed, &xi, &beta, &beta_s, &beta_r, &gamma}) {
        neg = std::max(neg, -min_over(*f));
        for (double v : f->raw()) frac = std::max(frac, std::abs(v - std::round(v)));
    }
    for (const auto* f : {&alpha, &routed, &beta, &beta_s, &beta_r, &gamma}) {
        mono = std::max(mono, f->t_monotonicity_violation());
    }
    double xmono = 0.0;
    for (const auto* f : {&alpha, &routed, &xi, &beta, &beta_s, &beta_r, &gamma}) {
        xmono = std::max(xmono, f->x_monotonicity_violation());
    }
    add(r, "nonnegative", neg, 0.0);
    add(r, "integer_counts", frac, 0.0);
    add(r, "t_monotone", mono, 0.0);
    add(r, "x_monotone", xmono, 0.0);

    double bal = 0.0;
    double split = 0.0;
    double hardness = 0.0;
    double routed_sum = 0.0;
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            for (int j = 0; j <= g.n_x() + 1; ++j) {
                auto at = [&](const GriddedMeasurePath& f, int c) {
                    return j <= g.n_x() ? f(c, k, j) : f.total_mass(c, k);
                };
                double in = at(alpha, i);
                double out_routes = 0.0;
                for (int s = 0; s < K; ++s) {
                    in += at(routed, s * K + i);
                    out_routes += at(routed, i * K + s);
                }
                bal = std::max(bal, std::abs(at(xi, i) - in + at(beta, i)));
                split = std::max(split, std::abs(at(beta, i) - at(beta_s, i) - at(beta_r, i)));
                routed_sum = std::max(routed_sum, out_routes - at(gamma, i));
            }
            if (hard) {
                const int j_now = g.deadline_floor(g.t(k));
                hardness = std::max(hardness, xi(i, k, j_now));
            }
        }
    }
    add(r, "mass_balance", bal, 0.0);
    add(r, "beta_split", split, 0.0);
    add(r, "routing_within_departures", routed_sum, 0.0);
    if (hard) add(r, "hardness", hardness, 0.0);
    const auto& mu = scalar(t, "mu");
    const auto& effort = scalar(t, "effort");
    const auto& iota = scalar(t, "iota");
    double cap = 0.0;
    double idle = 0.0;
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k <= g.n_t(); ++k) {
            cap = std::max(cap, std::abs(iota[i][k] - (mu[i][k] - effort[i][k])) / std::max(1.0, mu[i][k]));
            idle = std::max(idle, -iota[i][k] / std::max(1.0, mu[i][k]));
        }
    }
    add(r, "capacity", cap, tol);
    add(r, "idleness_nonnegative", idle, tol);
    return r;
}

}  // namespace

ValidationReport validate_export(const std::string& dir, double tol) {
    const fs::path d(dir);
    if (!fs::is_directory(d)) throw ConfigError("'" + dir + "' is not a directory");
    const json meta = read_json(d / "meta.json");
    const std::string kind = meta.value("kind", std::string());
    if (kind == "soft") return validate_soft(read_table(d / "solution.csv"), meta, tol);
    if (kind == "hard") return validate_hard(read_table(d / "solution.csv"), meta, tol);
    if (kind == "trace") return validate_trace(read_table(d / "trace.csv"), meta, tol);
    throw ConfigError("meta.json: unknown kind '" + kind + "'");
}

}  // namespace edfnet
