#pragma once

#include "edfnet/fluid_data.hpp"
#include "edfnet/measure_paths.hpp"
#include "edfnet/simulator.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace edfnet {

struct ExperimentSpec {
    std::vector<int> N_list{10, 100, 1000};
    int reps = 20;
    int martingale_N = 100;
    int martingale_reps = 200;
    std::vector<double> delta_list{0.25};
    std::map<std::string, double> tolerances;

    /// tolerances[key] when present, otherwise fallback.
    double tol(const std::string& key, double fallback) const;
};

/// Validated scenario: network primitives, grid, stochastic primitives and
/// experiment settings.
struct Scenario {
    NetworkSpec network;
    Grid grid;
    ServiceDistribution service;
    std::uint64_t seed = 1;
    ExperimentSpec experiment;
};

/// JSON scenario document. Sections: id, network {K, P, eps}, arrivals[]
/// {rate, lead}, capacity[], initial_condition[] (optional), grid {T, X, n_t, n_x},
/// simulation {service, seed}, experiment {N_list, reps, ...}.
/// Rates and capacities are numbers or tables {"t": [...], "v": [...]}.
///
/// Throws ConfigError with line and column for syntax errors and with the
/// offending field path for invalid values.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

std::string scenario_to_json(const Scenario& s, int indent = 2);

/// Applies "key=value" overrides to experiment.tolerances. Throws ConfigError
/// on malformed entries.
void apply_tol_overrides(Scenario& s, const std::vector<std::string>& overrides);

}  // namespace edfnet
