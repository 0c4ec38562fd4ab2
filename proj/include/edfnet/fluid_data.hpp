#pragma once

#include "edfnet/measure_paths.hpp"
#include "edfnet/routing.hpp"

#include <string>
#include <vector>

namespace edfnet {

/// Right-continuous step function: value v[p] on [t[p], t[p+1]), the last
/// value extends to infinity. t[0] must be 0.
class PiecewiseConstant {
public:
    PiecewiseConstant() : t_{0.0}, v_{0.0} {}
    /// Throws ConfigError on malformed tables.
    PiecewiseConstant(std::vector<double> t, std::vector<double> v);
    static PiecewiseConstant constant(double value) { return PiecewiseConstant({0.0}, {value}); }

    double operator()(double s) const;
    /// Integral over [0, s].
    double cumulative(double s) const;
    /// Smallest s with cumulative(s) >= c, or +inf when never reached.
    double inverse_cumulative(double c) const;
    double inf_on(double a, double b) const;
    double sup_on(double a, double b) const;
    /// First breakpoint strictly after s, or +inf.
    double next_breakpoint(double s) const;

    const std::vector<double>& breakpoints() const noexcept { return t_; }
    const std::vector<double>& values() const noexcept { return v_; }

private:
    int piece(double s) const;

    std::vector<double> t_;
    std::vector<double> v_;
    std::vector<double> cum_;  // cumulative at breakpoints
};

/// Atomless lead-time law (deadline minus arrival time).
class LeadDistribution {
public:
    enum class Kind { Uniform, Triangular };

    LeadDistribution() : LeadDistribution(uniform(0.0, 1.0)) {}
    static LeadDistribution uniform(double lo, double hi);
    static LeadDistribution triangular(double lo, double mode, double hi);

    Kind kind() const noexcept { return kind_; }
    double lo() const noexcept { return lo_; }
    double mode() const noexcept { return mode_; }
    double hi() const noexcept { return hi_; }

    double cdf(double l) const;
    /// Antiderivative of the cdf, G(l) = integral of F over (-inf, l].
    double integrated_cdf(double l) const;
    double quantile(double u) const;
    double mean() const;

private:
    LeadDistribution(Kind kind, double lo, double mode, double hi);

    Kind kind_;
    double lo_;
    double mode_;
    double hi_;
};

/// Piecewise-uniform initial queue profile: mass[p] spread evenly over
/// [x[p], x[p+1]].
class InitialProfile {
public:
    InitialProfile() = default;
    InitialProfile(std::vector<double> x, std::vector<double> mass);

    double cdf(double x) const;
    double total() const;
    /// Smallest x with cdf(x) >= c for c in (0, total].
    double quantile(double c) const;
    bool empty() const noexcept { return mass_.empty(); }
    double support_hi() const { return x_.empty() ? 0.0 : x_.back(); }
    double support_lo() const { return x_.empty() ? 0.0 : x_.front(); }
    const std::vector<double>& knots() const noexcept { return x_; }
    const std::vector<double>& masses() const noexcept { return mass_; }

private:
    std::vector<double> x_;
    std::vector<double> mass_;
};

struct NodeData {
    PiecewiseConstant rate;      // exogenous arrival rate lambda(t)
    LeadDistribution lead;
    PiecewiseConstant capacity;  // m(t)
    InitialProfile initial;      // xi_{0-}
};

/// Primitives of an EDF network at fluid scale.
struct NetworkSpec {
    std::string id = "scenario";
    RoutingMatrix routing;
    double eps = 0.0;
    std::vector<NodeData> nodes;

    int K() const noexcept { return routing.size(); }
};

/// alpha_t[0, x] = xi_{0-}[0, x] + int_0^t lambda(s) F(x - s) ds, evaluated in
/// closed form at every grid node. Mass beyond x_max goes to the overflow marginal.
GriddedMeasurePath build_alpha(const NetworkSpec& spec, const Grid& grid);
/// mu(t_k) = int_0^{t_k} m.
VectorPath build_mu(const NetworkSpec& spec, const Grid& grid);

struct HardDataChecks {
    bool require_positive_capacity = true;
    double edge_bound = 0.0;      // 0 disables the check
    double cell_mass_cap = 0.0;   // 0 selects total mass / sqrt(n_x)
};

/// Exogenous data for the hard fluid solvers on a fixed grid.
struct HardFluidData {
    GriddedMeasurePath alpha;
    VectorPath mu;
    RoutingMatrix routing;
    double eps = 0.0;
    std::vector<std::string> warnings;

    Grid grid() const { return alpha.grid(); }
    int K() const { return routing.size(); }
    /// eps / dx.
    int eps_cells() const;
};

/// Checks the grid-level form of the data assumptions and returns the data
/// with any warnings attached. Throws PreconditionError on violations and
/// ConfigError when eps is not a multiple of dx or dx is not a multiple of dt.
HardFluidData make_hard_data(GriddedMeasurePath alpha, VectorPath mu, RoutingMatrix routing,
                             double eps, HardDataChecks checks = {});
HardFluidData make_hard_data(const NetworkSpec& spec, const Grid& grid, HardDataChecks checks = {});

/// Nearest positive multiple of dx to eps.
double nearest_aligned_eps(double eps, double dx);

}  // namespace edfnet
