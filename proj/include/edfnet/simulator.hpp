#pragma once

#include "edfnet/fluid_data.hpp"
#include "edfnet/measure_paths.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace edfnet {

enum class Policy { SoftEdf, HardEdf, Fisfo };

std::string to_string(Policy p);
/// Accepts "soft", "hard" and "fisfo". Throws ConfigError otherwise.
Policy parse_policy(const std::string& s);

/// Unit-mean service requirement law with bounded support.
class ServiceDistribution {
public:
    enum class Kind { Deterministic, Uniform, ScaledBeta };

    ServiceDistribution() = default;
    static ServiceDistribution deterministic();
    /// Uniform on [1 - c, 1 + c], 0 <= c < 1.
    static ServiceDistribution uniform(double c);
    /// (a + b) / a times a Beta(a, b) variable, integer a, b >= 1.
    static ServiceDistribution scaled_beta(int a, int b);

    Kind kind() const noexcept { return kind_; }
    double half_width() const noexcept { return c_; }
    int beta_a() const noexcept { return a_; }
    int beta_b() const noexcept { return b_; }
    double support_bound() const;
    double sample(std::mt19937_64& rng) const;

private:
    Kind kind_ = Kind::Deterministic;
    double c_ = 0.0;
    int a_ = 1;
    int b_ = 1;
};

/// Independent RNG substreams. Each (replication, node, kind) gets its own
/// mt19937_64 seeded through splitmix64 from the master seed.
enum class StreamKind : std::uint64_t { Arrivals = 1, Leads = 2, Service = 3, Routing = 4 };
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t rep, std::uint64_t node, StreamKind kind);
/// Uniform on [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

enum class EventKind { Arrival, ServiceStart, Departure, Routing, Renege };
std::string to_string(EventKind k);

struct SimEvent {
    double t = 0.0;
    EventKind kind = EventKind::Arrival;
    std::int64_t job = 0;
    int node = 0;
    double deadline = 0.0;
    int extra = -1;  // routing destination (-1 = exit)

    bool operator==(const SimEvent&) const = default;
};

/// One job movement at a node: time and the deadline it carries there.
struct Mark {
    double t = 0.0;
    double deadline = 0.0;
    int cell = 0;
    int other = -1;  // source node for routed arrivals, destination for departures
};

struct NodeMarks {
    std::vector<Mark> arrivals;    // exogenous, including the initial queue at t = 0
    std::vector<Mark> routed_in;
    std::vector<Mark> starts;      // queue -> server
    std::vector<Mark> reneges;
    std::vector<Mark> departures;  // server exits, deadline as carried onward
    std::vector<double> requirements;  // in service order
};

struct SimOptions {
    Policy policy = Policy::SoftEdf;
    int N = 1;
    std::uint64_t seed = 1;
    std::uint64_t replication = 0;
    ServiceDistribution service;
    bool record_events = true;
    /// Recount queue histograms from the queue container after every event.
    bool check_balance = false;
};

/// Raw counts sampled at the grid time nodes, deadline levels of the grid.
struct SimTrace {
    int N = 1;
    Policy policy = Policy::SoftEdf;
    Grid grid;
    int K = 1;
    double eps = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;

    std::vector<SimEvent> events;
    std::vector<NodeMarks> marks;

    GriddedMeasurePath alpha;   // exogenous arrivals
    GriddedMeasurePath routed;  // component i * K + j: gamma^{ij}, deadline on arrival at j
    GriddedMeasurePath xi;
    GriddedMeasurePath beta;
    GriddedMeasurePath beta_s;
    GriddedMeasurePath beta_r;
    GriddedMeasurePath gamma;   // all departures from server i
    GriddedMeasurePath busy;    // job in service, by deadline
    VectorPath mu;              // N int m
    VectorPath effort;          // capacity spent serving
    VectorPath iota;
    VectorPath rho;
    VectorPath departures;

    // Diagnostics, all expected to be exactly 0.
    std::int64_t balance_checks = 0;
    std::int64_t max_balance_residual = 0;
    std::int64_t hardness_violations = 0;
    double departure_identity_gap = 0.0;
    double error_identity_gap = 0.0;

    std::int64_t event_count = 0;

    /// Field divided by N.
    GriddedMeasurePath scaled(const GriddedMeasurePath& counts) const;
    VectorPath scaled(const VectorPath& counts) const;
};

/// Raised when B_svc / (N inf m) >= eps on a node with positive capacity.
int minimal_admissible_N(const NetworkSpec& spec, const ServiceDistribution& service, double horizon);

/// Event-driven simulation of the scaled network with non-preemptive EDF
/// (or first-in-system-first-out) service on [0, grid.t_max()].
SimTrace simulate(const NetworkSpec& spec, const Grid& grid, const SimOptions& options);

SimTrace simulate_soft(const NetworkSpec& spec, const Grid& grid, SimOptions options);
SimTrace simulate_hard(const NetworkSpec& spec, const Grid& grid, SimOptions options);

/// E^{ij}(t, x) = gamma^{ij}_t[0, x] - P_ij gamma^i_t[0, x], divided by N.
/// Component i * K + j.
GriddedMeasurePath routing_error_field(const SimTrace& trace, const RoutingMatrix& routing);
/// Unscaled E^{ij}(t, x) at an arbitrary (t, x), from the job marks.
double routing_error_at(const SimTrace& trace, const RoutingMatrix& routing, int i, int j, double t, double x);
/// Departures D^i(t) from the marks.
std::int64_t departures_by(const SimTrace& trace, int i, double t);

struct CapacityError {
    VectorPath e;             // scaled: beta_s[0, inf) + iota - mu, over N
    VectorPath decomposition;  // (-1 + B + S(T) - T) / N
    double identity_gap = 0.0;
};
CapacityError capacity_error(const SimTrace& trace);

/// Service-start order per node as job ids.
std::vector<std::vector<std::int64_t>> service_start_order(const SimTrace& trace);

}  // namespace edfnet
