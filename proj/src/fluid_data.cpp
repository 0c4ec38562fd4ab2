#include "edfnet/fluid_data.hpp"

#include "edfnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace edfnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

PiecewiseConstant::PiecewiseConstant(std::vector<double> t, std::vector<double> v)
    : t_(std::move(t)), v_(std::move(v)) {
    if (t_.empty() || t_.size() != v_.size()) {
        throw ConfigError("piecewise table: t and v must be nonempty and of equal length");
    }
    if (t_.front() != 0.0) throw ConfigError("piecewise table: first breakpoint must be 0");
    if (!finite_all(t_) || !finite_all(v_)) throw ConfigError("piecewise table: non-finite entry");
    for (std::size_t p = 1; p < t_.size(); ++p) {
        if (!(t_[p] > t_[p - 1])) throw ConfigError("piecewise table: breakpoints must increase strictly");
    }
    for (double x : v_) {
        if (x < 0.0) throw ConfigError("piecewise table: values must be nonnegative");
    }
    cum_.assign(t_.size(), 0.0);
    for (std::size_t p = 1; p < t_.size(); ++p) cum_[p] = cum_[p - 1] + v_[p - 1] * (t_[p] - t_[p - 1]);
}

int PiecewiseConstant::piece(double s) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), s);
    if (it == t_.begin()) return 0;
    return static_cast<int>(it - t_.begin()) - 1;
}

double PiecewiseConstant::operator()(double s) const { return v_[piece(s)]; }

double PiecewiseConstant::cumulative(double s) const {
    if (!(s > 0.0)) return 0.0;
    const int p = piece(s);
    return cum_[p] + v_[p] * (s - t_[p]);
}

double PiecewiseConstant::inverse_cumulative(double c) const {
    if (!(c > 0.0)) return 0.0;
    const std::size_t n = t_.size();
    for (std::size_t p = 0; p < n; ++p) {
        const double end = p + 1 < n ? cum_[p + 1] : kInf;
        if (c <= end && v_[p] > 0.0) {
            return std::max(t_[p], t_[p] + (c - cum_[p]) / v_[p]);
        }
    }
    return kInf;
}

double PiecewiseConstant::inf_on(double a, double b) const {
    int first = piece(a);
    int last = piece(b);
    if (last > first && t_[last] >= b) --last;
    double m = kInf;
    for (int p = first; p <= last; ++p) m = std::min(m, v_[p]);
    return m;
}

double PiecewiseConstant::sup_on(double a, double b) const {
    int first = piece(a);
    int last = piece(b);
    if (last > first && t_[last] >= b) --last;
    double m = 0.0;
    for (int p = first; p <= last; ++p) m = std::max(m, v_[p]);
    return m;
}

double PiecewiseConstant::next_breakpoint(double s) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), s);
    return it == t_.end() ? kInf : *it;
}

LeadDistribution::LeadDistribution(Kind kind, double lo, double mode, double hi)
    : kind_(kind), lo_(lo), mode_(mode), hi_(hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(mode)) {
        throw ConfigError("lead distribution: non-finite parameter");
    }
    if (lo < 0.0) throw ConfigError("lead distribution: support must lie in [0, inf)");
    if (!(hi > lo)) throw ConfigError("lead distribution: hi must exceed lo (atomless law required)");
    if (mode < lo || mode > hi) throw ConfigError("lead distribution: mode must lie in [lo, hi]");
}

LeadDistribution LeadDistribution::uniform(double lo, double hi) {
    return LeadDistribution(Kind::Uniform, lo, 0.5 * (lo + hi), hi);
}

LeadDistribution LeadDistribution::triangular(double lo, double mode, double hi) {
    return LeadDistribution(Kind::Triangular, lo, mode, hi);
}

double LeadDistribution::cdf(double l) const {
    if (l <= lo_) return 0.0;
    if (l >= hi_) return 1.0;
    const double w = hi_ - lo_;
    if (kind_ == Kind::Uniform) return (l - lo_) / w;
    if (l <= mode_) return (l - lo_) * (l - lo_) / (w * (mode_ - lo_));
    return 1.0 - (hi_ - l) * (hi_ - l) / (w * (hi_ - mode_));
}

double LeadDistribution::integrated_cdf(double l) const {
    if (l <= lo_) return 0.0;
    const double w = hi_ - lo_;
    if (kind_ == Kind::Uniform) {
        if (l < hi_) return (l - lo_) * (l - lo_) / (2.0 * w);
        return 0.5 * w + (l - hi_);
    }
    const double g_mode = (mode_ - lo_) * (mode_ - lo_) / (3.0 * w);
    if (l <= mode_) {
        const double d = l - lo_;
        return d * d * d / (3.0 * w * (mode_ - lo_));
    }
    const double r = hi_ - mode_;
    if (l < hi_) {
        const double q = hi_ - l;
        return g_mode + (l - mode_) - (r * r * r - q * q * q) / (3.0 * w * r);
    }
    return g_mode + r - r * r / (3.0 * w) + (l - hi_);
}

double LeadDistribution::quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    const double w = hi_ - lo_;
    if (kind_ == Kind::Uniform) return lo_ + u * w;
    const double split = (mode_ - lo_) / w;
    if (u < split) return lo_ + std::sqrt(u * w * (mode_ - lo_));
    return hi_ - std::sqrt((1.0 - u) * w * (hi_ - mode_));
}

double LeadDistribution::mean() const {
    if (kind_ == Kind::Uniform) return 0.5 * (lo_ + hi_);
    return (lo_ + mode_ + hi_) / 3.0;
}

InitialProfile::InitialProfile(std::vector<double> x, std::vector<double> mass)
    : x_(std::move(x)), mass_(std::move(mass)) {
    if (x_.empty() && mass_.empty()) return;
    if (x_.size() != mass_.size() + 1) {
        throw ConfigError("initial profile: x needs one more entry than mass");
    }
    if (!finite_all(x_) || !finite_all(mass_)) throw ConfigError("initial profile: non-finite entry");
    if (x_.front() < 0.0) throw ConfigError("initial profile: deadlines must be nonnegative");
    for (std::size_t p = 1; p < x_.size(); ++p) {
        if (!(x_[p] > x_[p - 1])) throw ConfigError("initial profile: x must increase strictly");
    }
    for (double m : mass_) {
        if (m < 0.0) throw ConfigError("initial profile: mass must be nonnegative");
    }
}

double InitialProfile::cdf(double x) const {
    double acc = 0.0;
    for (std::size_t p = 0; p < mass_.size(); ++p) {
        if (x >= x_[p + 1]) {
            acc += mass_[p];
        } else {
            if (x > x_[p]) acc += mass_[p] * (x - x_[p]) / (x_[p + 1] - x_[p]);
            break;
        }
    }
    return acc;
}

double InitialProfile::total() const {
    double acc = 0.0;
    for (double m : mass_) acc += m;
    return acc;
}

double InitialProfile::quantile(double c) const {
    double acc = 0.0;
    for (std::size_t p = 0; p < mass_.size(); ++p) {
        if (mass_[p] > 0.0 && c <= acc + mass_[p]) {
            return x_[p] + (c - acc) / mass_[p] * (x_[p + 1] - x_[p]);
        }
        acc += mass_[p];
    }
    return support_hi();
}

namespace {

double arrival_cdf(const NodeData& node, double t, double x) {
    const auto& bp = node.rate.breakpoints();
    const auto& v = node.rate.values();
    double acc = 0.0;
    for (std::size_t p = 0; p < bp.size() && bp[p] < t; ++p) {
        if (v[p] == 0.0) continue;
        const double a = bp[p];
        const double b = p + 1 < bp.size() ? std::min(bp[p + 1], t) : t;
        acc += v[p] * (node.lead.integrated_cdf(x - a) - node.lead.integrated_cdf(x - b));
    }
    return acc;
}

}  // namespace

GriddedMeasurePath build_alpha(const NetworkSpec& spec, const Grid& grid) {
    const int K = spec.K();
    if (static_cast<int>(spec.nodes.size()) != K) throw ShapeError("build_alpha: node count differs from K");
    GriddedMeasurePath alpha(grid, K);
    for (int i = 0; i < K; ++i) {
        const NodeData& node = spec.nodes[i];
        for (int k = 0; k <= grid.n_t(); ++k) {
            const double t = grid.t(k);
            for (int j = 0; j <= grid.n_x(); ++j) {
                alpha(i, k, j) = node.initial.cdf(grid.x(j)) + arrival_cdf(node, t, grid.x(j));
            }
            const double total = node.initial.total() + node.rate.cumulative(t);
            const double over = total - alpha(i, k, grid.n_x());
            alpha.overflow(i, k) = over > 1e-12 * std::max(1.0, total) ? over : 0.0;
        }
    }
    return alpha;
}

VectorPath build_mu(const NetworkSpec& spec, const Grid& grid) {
    VectorPath mu = make_vector_path(grid, spec.K());
    for (int i = 0; i < spec.K(); ++i) {
        for (int k = 0; k <= grid.n_t(); ++k) mu[i][k] = spec.nodes[i].capacity.cumulative(grid.t(k));
    }
    return mu;
}

int HardFluidData::eps_cells() const {
    return static_cast<int>(std::lround(eps / alpha.grid().dx()));
}

double nearest_aligned_eps(double eps, double dx) {
    return std::max(1.0, std::round(eps / dx)) * dx;
}

HardFluidData make_hard_data(GriddedMeasurePath alpha, VectorPath mu, RoutingMatrix routing,
                             double eps, HardDataChecks checks) {
    const Grid g = alpha.grid();
    const int K = routing.size();
    if (alpha.components() != K || static_cast<int>(mu.size()) != K) {
        throw ShapeError("hard data: alpha, mu and routing disagree on K");
    }
    for (const auto& m : mu) {
        if (m.size() != static_cast<std::size_t>(g.n_t() + 1)) throw ShapeError("hard data: mu length differs from grid");
    }
    if (!g.deadline_nodes_are_time_nodes()) {
        throw ConfigError("hard data: deadline step dx must be an integer multiple of the time step dt");
    }
    const double cells = eps / g.dx();
    if (!(eps > 0.0) || std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells) ||
        std::round(cells) < 1.0) {
        std::ostringstream msg;
        msg << "eps = " << eps << " is not a positive multiple of dx = " << g.dx()
            << "; nearest grid-aligned eps is " << nearest_aligned_eps(eps, g.dx());
        throw ConfigError(msg.str());
    }

    HardFluidData d{std::move(alpha), std::move(mu), std::move(routing), eps, {}};
    const auto& a = d.alpha;
    double total = 0.0;
    for (int i = 0; i < K; ++i) total += a.total_mass(i, g.n_t());
    const double tol = 1e-12 * std::max(1.0, total);
    const int q = g.deadline_to_time_ratio();

    for (int i = 0; i < K; ++i) {
        if (d.mu[i][0] != 0.0) throw PreconditionError("hard data: mu(0) must be 0");
        for (int k = 0; k < g.n_t(); ++k) {
            const double dm = d.mu[i][k + 1] - d.mu[i][k];
            if (dm < 0.0 || (checks.require_positive_capacity && !(dm > 0.0))) {
                std::ostringstream msg;
                msg << "positive capacity: m must be strictly positive (node " << i << ", t = " << g.t(k) << ")";
                throw PreconditionError(msg.str());
            }
            // Arrivals during (t_k, t_{k+1}] carry deadlines >= t_k.
            const int j_dead = k / q;
            for (int j = 0; j <= std::min(j_dead, g.n_x()); ++j) {
                if (a(i, k + 1, j) - a(i, k, j) > tol) {
                    std::ostringstream msg;
                    msg << "arrival regularity: arrivals must carry deadlines no earlier than their arrival time "
                        << "(node " << i << ", t = " << g.t(k) << ", x = " << g.x(j) << ")";
                    throw PreconditionError(msg.str());
                }
            }
        }
    }

    for (int i = 0; i < K; ++i) {
        const double node_total = a.total_mass(i, g.n_t());
        if (node_total <= 0.0) continue;
        const double cap = checks.cell_mass_cap > 0.0 ? checks.cell_mass_cap : node_total / std::sqrt(g.n_x());
        for (int j = 0; j <= g.n_x(); ++j) {
            const double cell = a(i, g.n_t(), j) - (j > 0 ? a(i, g.n_t(), j - 1) : 0.0);
            if (cell > cap * (1.0 + 1e-12)) {
                std::ostringstream msg;
                msg << "arrival regularity: alpha concentrates mass " << cell << " in deadline cell x = " << g.x(j)
                    << " of node " << i << ", above the atom cap " << cap;
                throw PreconditionError(msg.str());
            }
        }
    }

    bool delta0_warned = false;
    for (int i = 0; i < K; ++i) {
        for (int k = 0; k < g.n_t(); ++k) {
            const int jl = g.deadline_floor(g.t(k));
            auto rate_over = [&](double width) {
                const int jh = std::min(g.n_x(), g.deadline_cell(g.t(k + 1) + width));
                const double lo = jl > 0 ? (a(i, k + 1, jl - 1) - a(i, k, jl - 1)) : 0.0;
                return (a(i, k + 1, jh) - a(i, k, jh) - lo) / g.dt();
            };
            if (checks.edge_bound > 0.0 && rate_over(g.dx()) > checks.edge_bound) {
                std::ostringstream msg;
                msg << "arrival regularity: arrival rate near the deadline edge exceeds " << checks.edge_bound
                    << " (node " << i << ", t = " << g.t(k) << ")";
                throw PreconditionError(msg.str());
            }
            const double m_rate = (d.mu[i][k + 1] - d.mu[i][k]) / g.dt();
            if (!delta0_warned && rate_over(4.0 * g.dx()) >= m_rate && m_rate > 0.0) {
                std::ostringstream msg;
                msg << "delta_0 condition fails for delta_0 = 2 dx at node " << i << ", t = " << g.t(k);
                d.warnings.push_back(msg.str());
                delta0_warned = true;
            }
        }
    }
    return d;
}

HardFluidData make_hard_data(const NetworkSpec& spec, const Grid& grid, HardDataChecks checks) {
    return make_hard_data(build_alpha(spec, grid), build_mu(spec, grid), spec.routing, spec.eps, checks);
}

}  // namespace edfnet
