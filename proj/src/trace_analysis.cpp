#include "edfnet/errors.hpp"
#include "edfnet/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace edfnet {

GriddedMeasurePath routing_error_field(const SimTrace& trace, const RoutingMatrix& routing) {
    const int K = trace.K;
    if (routing.size() != K) throw ShapeError("routing_error_field: routing size differs from trace");
    const Grid& g = trace.grid;
    GriddedMeasurePath E(g, K * K);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            const double p = routing.p(i, j);
            const int c = i * K + j;
            for (int k = 0; k <= g.n_t(); ++k) {
                for (int l = 0; l <= g.n_x(); ++l) {
                    E(c, k, l) = (trace.routed(c, k, l) - p * trace.gamma(i, k, l)) / trace.N;
                }
                E.overflow(c, k) = (trace.routed.overflow(c, k) - p * trace.gamma.overflow(i, k)) / trace.N;
            }
        }
    }
    return E;
}

double routing_error_at(const SimTrace& trace, const RoutingMatrix& routing, int i, int j, double t, double x) {
    if (i < 0 || i >= trace.K || j < 0 || j >= trace.K) throw BoundsError("routing_error_at: node index");
    double to_j = 0.0;
    double all = 0.0;
    for (const auto& m : trace.marks[i].departures) {
        if (m.t > t) break;
        if (m.deadline > x) continue;
        all += 1.0;
        if (m.other == j) to_j += 1.0;
    }
    return to_j - routing.p(i, j) * all;
}

std::int64_t departures_by(const SimTrace& trace, int i, double t) {
    if (i < 0 || i >= trace.K) throw BoundsError("departures_by: node index");
    const auto& d = trace.marks[i].departures;
    return std::upper_bound(d.begin(), d.end(), t, [](double v, const Mark& m) { return v < m.t; }) - d.begin();
}

CapacityError capacity_error(const SimTrace& trace) {
    const Grid& g = trace.grid;
    CapacityError out;
    out.e = make_vector_path(g, trace.K);
    out.decomposition = make_vector_path(g, trace.K);
    for (int i = 0; i < trace.K; ++i) {
        std::vector<double> prefix;
        double acc = 0.0;
        for (double r : trace.marks[i].requirements) prefix.push_back(acc += r);
        const auto& served = trace.policy == Policy::HardEdf ? trace.beta_s : trace.beta;
        for (int k = 0; k <= g.n_t(); ++k) {
            const double started = served.total_mass(i, k);
            const double T = trace.effort[i][k];
            const double S = 1.0 + static_cast<double>(
                std::upper_bound(prefix.begin(), prefix.end(), T * (1.0 + 1e-12) + 1e-12) - prefix.begin());
            const double B = trace.busy.total_mass(i, k);
            out.e[i][k] = (started + trace.iota[i][k] - trace.mu[i][k]) / trace.N;
            out.decomposition[i][k] = (-1.0 + B + S - T) / trace.N;
            out.identity_gap = std::max(out.identity_gap, std::abs(out.e[i][k] - out.decomposition[i][k]));
        }
    }
    return out;
}

std::vector<std::vector<std::int64_t>> service_start_order(const SimTrace& trace) {
    if (trace.events.empty() && trace.event_count > 0) {
        throw PreconditionError("service_start_order: trace was recorded without its event log");
    }
    std::vector<std::vector<std::int64_t>> order(trace.K);
    for (const auto& ev : trace.events) {
        if (ev.kind == EventKind::ServiceStart) order[ev.node].push_back(ev.job);
    }
    return order;
}

}  // namespace edfnet
