#include "edfnet/scenario.hpp"

#include "edfnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace edfnet {

using nlohmann::json;

double ExperimentSpec::tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& where, const std::string& what) {
    throw ConfigError(origin + ": " + where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& origin, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) fail(origin, where, std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& origin, const std::string& where) {
    if (!j.is_number()) fail(origin, where, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(origin, where, "expected a finite number");
    return v;
}

int integer(const json& j, const std::string& origin, const std::string& where) {
    if (!j.is_number_integer()) fail(origin, where, "expected an integer");
    return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& origin, const std::string& where) {
    if (!j.is_array()) fail(origin, where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t p = 0; p < j.size(); ++p) out.push_back(number(j[p], origin, where + "[" + std::to_string(p) + "]"));
    return out;
}

PiecewiseConstant table(const json& j, const std::string& origin, const std::string& where) {
    try {
        if (j.is_number()) return PiecewiseConstant::constant(number(j, origin, where));
        return PiecewiseConstant(numbers(need(j, "t", origin, where), origin, where + ".t"),
                                 numbers(need(j, "v", origin, where), origin, where + ".v"));
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(origin, 0) == 0) throw;
        fail(origin, where, msg);
    }
}

json table_to_json(const PiecewiseConstant& f) {
    if (f.breakpoints().size() == 1) return f.values().front();
    return json{{"t", f.breakpoints()}, {"v", f.values()}};
}

LeadDistribution lead(const json& j, const std::string& origin, const std::string& where) {
    const json& type = need(j, "type", origin, where);
    if (!type.is_string()) fail(origin, where + ".type", "expected a string");
    const std::string t = type.get<std::string>();
    try {
        if (t == "uniform") {
            return LeadDistribution::uniform(number(need(j, "lo", origin, where), origin, where + ".lo"),
                                             number(need(j, "hi", origin, where), origin, where + ".hi"));
        }
        if (t == "triangular") {
            return LeadDistribution::triangular(number(need(j, "lo", origin, where), origin, where + ".lo"),
                                                number(need(j, "mode", origin, where), origin, where + ".mode"),
                                                number(need(j, "hi", origin, where), origin, where + ".hi"));
        }
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(origin, 0) == 0) throw;
        fail(origin, where, std::string(e.what()) + " (lead times must be atomless and supported in (0, inf))");
    }
    fail(origin, where + ".type", "unknown lead distribution '" + t + "' (expected uniform or triangular)");
}

ServiceDistribution service(const json& j, const std::string& origin, const std::string& where) {
    if (j.is_string()) {
        if (j.get<std::string>() == "deterministic") return ServiceDistribution::deterministic();
        fail(origin, where, "unknown service distribution");
    }
    const json& type = need(j, "type", origin, where);
    const std::string t = type.is_string() ? type.get<std::string>() : "";
    try {
        if (t == "deterministic") return ServiceDistribution::deterministic();
        if (t == "uniform") return ServiceDistribution::uniform(number(need(j, "c", origin, where), origin, where + ".c"));
        if (t == "scaled_beta") {
            return ServiceDistribution::scaled_beta(integer(need(j, "a", origin, where), origin, where + ".a"),
                                                    integer(need(j, "b", origin, where), origin, where + ".b"));
        }
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(origin, 0) == 0) throw;
        fail(origin, where, msg);
    }
    fail(origin, where + ".type", "unknown service distribution '" + t + "' (expected deterministic, uniform or scaled_beta)");
}

json service_to_json(const ServiceDistribution& s) {
    switch (s.kind()) {
        case ServiceDistribution::Kind::Deterministic: return json{{"type", "deterministic"}};
        case ServiceDistribution::Kind::Uniform: return json{{"type", "uniform"}, {"c", s.half_width()}};
        case ServiceDistribution::Kind::ScaledBeta:
            return json{{"type", "scaled_beta"}, {"a", s.beta_a()}, {"b", s.beta_b()}};
    }
    return {};
}

void line_col(const std::string& text, std::size_t byte, int& line, int& col) {
    line = 1;
    col = 1;
    for (std::size_t p = 0; p < text.size() && p + 1 < byte; ++p) {
        if (text[p] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 0;
        int col = 0;
        line_col(text, e.byte, line, col);
        std::ostringstream msg;
        msg << origin << ":" << line << ":" << col << ": parse error: " << e.what();
        throw ConfigError(msg.str());
    }
    if (!doc.is_object()) fail(origin, "<root>", "expected a JSON object");

    Scenario s;
    if (doc.contains("id")) {
        if (!doc["id"].is_string()) fail(origin, "id", "expected a string");
        s.network.id = doc["id"].get<std::string>();
    }

    const json& net = need(doc, "network", origin, "<root>");
    const int K = integer(need(net, "K", origin, "network"), origin, "network.K");
    if (K < 1) fail(origin, "network.K", "must be at least 1");
    std::vector<std::vector<double>> P(K, std::vector<double>(K, 0.0));
    if (net.contains("P")) {
        const json& jp = net["P"];
        if (!jp.is_array() || static_cast<int>(jp.size()) != K) fail(origin, "network.P", "expected K rows");
        for (int i = 0; i < K; ++i) {
            P[i] = numbers(jp[i], origin, "network.P[" + std::to_string(i) + "]");
            if (static_cast<int>(P[i].size()) != K) fail(origin, "network.P[" + std::to_string(i) + "]", "expected K entries");
        }
    }
    try {
        s.network.routing = RoutingMatrix(P);
    } catch (const ConfigError& e) {
        fail(origin, "network.P", e.what());
    }
    s.network.eps = net.contains("eps") ? number(net["eps"], origin, "network.eps") : 0.0;
    if (s.network.eps < 0.0) fail(origin, "network.eps", "must be nonnegative");

    const json& g = need(doc, "grid", origin, "<root>");
    try {
        s.grid = Grid(number(need(g, "T", origin, "grid"), origin, "grid.T"), number(need(g, "X", origin, "grid"), origin, "grid.X"),
                      integer(need(g, "n_t", origin, "grid"), origin, "grid.n_t"),
                      integer(need(g, "n_x", origin, "grid"), origin, "grid.n_x"));
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(origin, 0) == 0) throw;
        fail(origin, "grid", msg);
    }
    if (s.network.eps > 0.0) {
        const double cells = s.network.eps / s.grid.dx();
        if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells) || std::round(cells) < 1.0) {
            std::ostringstream msg;
            msg << "eps = " << s.network.eps << " is not an integer multiple of dx = " << s.grid.dx()
                << "; nearest grid-aligned eps is " << nearest_aligned_eps(s.network.eps, s.grid.dx());
            fail(origin, "network.eps", msg.str());
        }
    }

    const json& arr = need(doc, "arrivals", origin, "<root>");
    const json& cap = need(doc, "capacity", origin, "<root>");
    if (!arr.is_array() || static_cast<int>(arr.size()) != K) fail(origin, "arrivals", "expected one entry per node");
    if (!cap.is_array() || static_cast<int>(cap.size()) != K) fail(origin, "capacity", "expected one entry per node");
    const json* init = doc.contains("initial_condition") ? &doc["initial_condition"] : nullptr;
    if (init && (!init->is_array() || static_cast<int>(init->size()) != K)) {
        fail(origin, "initial_condition", "expected one entry per node");
    }
    for (int i = 0; i < K; ++i) {
        const std::string a = "arrivals[" + std::to_string(i) + "]";
        const std::string c = "capacity[" + std::to_string(i) + "]";
        NodeData nd;
        nd.rate = table(need(arr[i], "rate", origin, a), origin, a + ".rate");
        nd.lead = lead(need(arr[i], "lead", origin, a), origin, a + ".lead");
        nd.capacity = table(cap[i], origin, c);
        for (std::size_t p = 0; p < nd.capacity.values().size(); ++p) {
            if (!(nd.capacity.values()[p] > 0.0)) {
                std::ostringstream msg;
                msg << "positive capacity: m must be strictly positive (value " << nd.capacity.values()[p]
                    << " from t = " << nd.capacity.breakpoints()[p] << ")";
                fail(origin, c, msg.str());
            }
        }
        if (init && !(*init)[i].is_null()) {
            const std::string w = "initial_condition[" + std::to_string(i) + "]";
            try {
                nd.initial = InitialProfile(numbers(need((*init)[i], "x", origin, w), origin, w + ".x"),
                                            numbers(need((*init)[i], "mass", origin, w), origin, w + ".mass"));
            } catch (const ConfigError& e) {
                const std::string msg = e.what();
                if (msg.rfind(origin, 0) == 0) throw;
                fail(origin, w, msg);
            }
        }
        s.network.nodes.push_back(std::move(nd));
    }

    if (doc.contains("simulation")) {
        const json& sim = doc["simulation"];
        if (sim.contains("service")) s.service = service(sim["service"], origin, "simulation.service");
        if (sim.contains("seed")) {
            if (!sim["seed"].is_number_unsigned() && !sim["seed"].is_number_integer()) {
                fail(origin, "simulation.seed", "expected a nonnegative integer");
            }
            s.seed = sim["seed"].get<std::uint64_t>();
        }
    }

    if (doc.contains("experiment")) {
        const json& ex = doc["experiment"];
        auto& e = s.experiment;
        if (ex.contains("N_list")) {
            e.N_list.clear();
            for (double v : numbers(ex["N_list"], origin, "experiment.N_list")) {
                if (v < 1 || v != std::floor(v)) fail(origin, "experiment.N_list", "entries must be positive integers");
                e.N_list.push_back(static_cast<int>(v));
            }
        }
        if (ex.contains("reps")) e.reps = integer(ex["reps"], origin, "experiment.reps");
        if (ex.contains("martingale_N")) e.martingale_N = integer(ex["martingale_N"], origin, "experiment.martingale_N");
        if (ex.contains("martingale_reps")) {
            e.martingale_reps = integer(ex["martingale_reps"], origin, "experiment.martingale_reps");
        }
        if (ex.contains("delta_list")) e.delta_list = numbers(ex["delta_list"], origin, "experiment.delta_list");
        if (ex.contains("tolerances")) {
            const json& t = ex["tolerances"];
            if (!t.is_object()) fail(origin, "experiment.tolerances", "expected an object");
            for (auto it = t.begin(); it != t.end(); ++it) {
                e.tolerances[it.key()] = number(it.value(), origin, "experiment.tolerances." + it.key());
            }
        }
        if (e.reps < 1) fail(origin, "experiment.reps", "must be at least 1");
        if (e.martingale_reps < 2) fail(origin, "experiment.martingale_reps", "must be at least 2");
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

std::string scenario_to_json(const Scenario& s, int indent) {
    const int K = s.network.K();
    json doc;
    doc["id"] = s.network.id;
    doc["network"] = {{"K", K}, {"P", s.network.routing.to_rows()}, {"eps", s.network.eps}};
    json arr = json::array();
    json cap = json::array();
    json init = json::array();
    for (const auto& nd : s.network.nodes) {
        json l;
        if (nd.lead.kind() == LeadDistribution::Kind::Uniform) {
            l = {{"type", "uniform"}, {"lo", nd.lead.lo()}, {"hi", nd.lead.hi()}};
        } else {
            l = {{"type", "triangular"}, {"lo", nd.lead.lo()}, {"mode", nd.lead.mode()}, {"hi", nd.lead.hi()}};
        }
        arr.push_back({{"rate", table_to_json(nd.rate)}, {"lead", l}});
        cap.push_back(table_to_json(nd.capacity));
        if (nd.initial.empty()) {
            init.push_back(nullptr);
        } else {
            init.push_back({{"x", nd.initial.knots()}, {"mass", nd.initial.masses()}});
        }
    }
    doc["arrivals"] = arr;
    doc["capacity"] = cap;
    doc["grid"] = {{"T", s.grid.t_max()}, {"X", s.grid.x_max()}, {"n_t", s.grid.n_t()}, {"n_x", s.grid.n_x()}};
    doc["simulation"] = {{"service", service_to_json(s.service)}, {"seed", s.seed}};
    doc["experiment"] = {{"N_list", s.experiment.N_list},
                         {"reps", s.experiment.reps},
                         {"martingale_N", s.experiment.martingale_N},
                         {"martingale_reps", s.experiment.martingale_reps},
                         {"delta_list", s.experiment.delta_list},
                         {"tolerances", s.experiment.tolerances}};
    return doc.dump(indent);
}

void apply_tol_overrides(Scenario& s, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("tolerance override '" + o + "' is not key=value");
        const std::string key = o.substr(0, eq);
        const std::string val = o.substr(eq + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size() || !std::isfinite(v)) {
            throw ConfigError("tolerance override '" + o + "' has a non-numeric value");
        }
        s.experiment.tolerances[key] = v;
    }
}

}  // namespace edfnet
