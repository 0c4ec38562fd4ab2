#pragma once

#include "edfnet/fluid_hard.hpp"
#include "edfnet/scenario.hpp"
#include "edfnet/simulator.hpp"
#include "edfnet/skorokhod.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace edfnet {

/// mean +- 1.96 sd / sqrt(n); sd uses the n - 1 denominator.
struct SampleStats {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double ci = 0.0;
    double max = 0.0;
};
SampleStats sample_stats(const std::vector<double>& xs);

/// Least-squares slope of log(y) on log(x). NaN when fewer than two
/// positive points are available.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs body(0), ..., body(n - 1) on up to `threads` workers (0 selects the
/// hardware concurrency). Results must be written to per-index slots.
void parallel_for(int n, const std::function<void(int)>& body, int threads = 0);

/// Fluid path restricted to the nodes of a grid that the fine grid refines.
GriddedMeasurePath restrict_to_grid(const GriddedMeasurePath& fine, const Grid& coarse);
VectorPath restrict_to_grid(const VectorPath& fine, const Grid& fine_grid, const Grid& coarse);

/// Fluid reference on grid g and on g refined once, both sampled on g.
struct FluidReference {
    Policy policy = Policy::SoftEdf;
    GriddedMeasurePath xi;        // from the refined grid
    VectorPath rho;               // hard only
    GriddedMeasurePath xi_coarse;
    VectorPath rho_coarse;
    double bias = 0.0;            // sup gap between the two grids
};
FluidReference fluid_reference(const NetworkSpec& spec, const Grid& grid, Policy policy);

struct ConvergenceOptions {
    Policy policy = Policy::SoftEdf;
    std::vector<int> N_list{10, 100, 1000};
    int reps = 20;
    std::uint64_t seed = 1;
    ServiceDistribution service;
    double threshold_factor = 3.0;
    int threads = 0;
};

struct ConvergenceLevel {
    int N = 0;
    std::vector<double> xi_errors;   // per replication, in replication order
    std::vector<double> rho_errors;  // hard only
    std::vector<double> errors;      // judged error: max of the above
    SampleStats xi;
    SampleStats rho;
    SampleStats error;
    double seconds = 0.0;
};

enum class Verdict { Pass, Fail, GridLimited };
std::string to_string(Verdict v);

struct ConvergenceReport {
    std::string scenario_id;
    Policy policy = Policy::SoftEdf;
    std::uint64_t seed = 0;
    int reps = 0;
    Grid grid;
    double bias = 0.0;
    std::vector<ConvergenceLevel> levels;
    double slope = 0.0;               // informational
    bool strictly_decreasing = false; // consecutive CIs separated
    double threshold = 0.0;           // threshold_factor * bias
    bool within_threshold = false;    // largest-N mean error <= threshold
    bool grid_limited = false;        // bias >= smallest mean error / 3
    Verdict verdict = Verdict::Fail;
    double fluid_seconds = 0.0;
    double total_seconds = 0.0;

    std::string to_json() const;
    std::string to_markdown() const;
    /// N, rep, seed, xi_error, rho_error, error.
    std::string to_csv() const;
};

ConvergenceReport run_convergence(const Scenario& scenario, const ConvergenceOptions& options);

struct MartingaleProbe {
    int i = 0;
    int j = 0;
    double t = 0.0;
    double x = 0.0;
    double mean_E = 0.0;
    double second_moment = 0.0;
    double upper_ci = 0.0;
    double mean_D = 0.0;
    double bound = 0.0;  // 41 * mean_D
    bool pass = true;
};

struct MartingaleStats {
    int N = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    bool degenerate = false;  // no probabilistic routing row
    std::string notice;
    std::vector<MartingaleProbe> probes;
    int violations = 0;
    bool pass = true;

    std::string to_json() const;
    std::string to_csv() const;
};

/// Second moment of the routing error against 41 E[D] on a 5 x 5 (t, x)
/// lattice for every pair (i, j), soft policy.
MartingaleStats run_martingale_check(const Scenario& scenario, int N, int reps, std::uint64_t seed,
                                     int threads = 0);

/// Pathwise modulus-of-continuity bound for the reneging count.
struct TightnessRow {
    int N = 0;
    int rep = 0;
    double delta = 0.0;
    double lhs = 0.0;          // w_T(rho_bar, delta), worst node
    double rhs = 0.0;          // (K T / eps + 1)(max_i w(F_alpha_T^i, delta) + 1/N)
    double alpha_modulus = 0.0;
    int chain_violations = 0;  // probe instants where a chain step fails
    double worst_chain_gap = 0.0;
    bool pass = true;
};

struct TightnessTable {
    std::vector<TightnessRow> rows;
    bool pass = true;

    std::string to_json() const;
    std::string to_csv() const;
};

/// Evaluates both sides and every intermediate step on one hard trace.
TightnessRow tightness_on_trace(const SimTrace& trace, double delta, int probes = 200);

TightnessTable run_tightness_surrogate(const Scenario& scenario, const std::vector<int>& N_list, int reps,
                                       const std::vector<double>& delta_list, std::uint64_t seed,
                                       int threads = 0);

struct FisfoVerdict {
    bool identical = false;
    int mismatch_node = -1;
    std::int64_t mismatch_position = -1;
    std::int64_t starts = 0;

    std::string to_json() const;
};

/// Soft EDF against first-in-system-first-out with the same primitives.
/// Unless negative_control is set, leads are replaced by a tiny atomless
/// uniform and the initial queue is dropped, so deadlines track arrival times.
FisfoVerdict run_soft_fisfo_equivalence(const Scenario& scenario, int N, std::uint64_t seed,
                                        bool negative_control = false);

/// Hard fluid with leads long enough that nothing expires against the
/// soft fluid on the same grid. K = 1 compares every level; networks
/// compare totals and idleness (deadline shifts move mass between levels)
/// and require zero reneging.
struct DegenerationGap {
    double xi = 0.0;
    double iota = 0.0;
    double rho = 0.0;
    double worst() const;
};
DegenerationGap hard_soft_degeneration_gap(const NetworkSpec& spec, const Grid& grid);

}  // namespace edfnet
