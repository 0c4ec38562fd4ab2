#pragma once

#include "edfnet/fluid_hard.hpp"
#include "edfnet/simulator.hpp"
#include "edfnet/skorokhod.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace edfnet {

/// One JSON object per line: {"t", "kind", "job", "node", "deadline", "extra"}.
void write_events_ndjson(std::ostream& out, const std::vector<SimEvent>& events);
std::vector<SimEvent> read_events_ndjson(std::istream& in);

// Each export writes solution.csv (trajectory table) and meta.json into dir,
// creating it when needed.
void export_soft_solution(const std::string& dir, const VmvsmSolution& sol, const GriddedMeasurePath& alpha,
                          const VectorPath& mu, const RoutingMatrix& routing);
void export_hard_solution(const std::string& dir, const HardFluidSolution& sol, const HardFluidData& data,
                          const std::string& consistency_log_json = "");
/// Raw counts as trace.csv plus events.ndjson when the log was recorded.
void export_trace(const std::string& dir, const SimTrace& trace, const RoutingMatrix& routing);

struct ValidationCheck {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = true;
};

struct ValidationReport {
    std::string kind;  // soft, hard or trace
    std::vector<ValidationCheck> checks;
    bool pass() const;
    const ValidationCheck* first_failure() const;
    std::string to_json() const;
};

/// Re-reads an exported directory and runs the invariant suite that fits its
/// kind. Throws ConfigError when the directory is unreadable or malformed.
ValidationReport validate_export(const std::string& dir, double tol = 1e-8);

}  // namespace edfnet
