#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edfnet {

/// Uniform rectangular grid over time [0, T] and deadline [0, X].
///
/// Nodes are computed as index * step every time they are requested, so a
/// node never accumulates summation drift. Off-grid query points snap down.
class Grid {
public:
    Grid() = default;

    /// Throws ConfigError unless T > 0, X > 0, n_t >= 1 and n_x >= 1.
    Grid(double t_max, double x_max, int n_t, int n_x);

    double t_max() const noexcept { return t_max_; }
    double x_max() const noexcept { return x_max_; }
    int n_t() const noexcept { return n_t_; }
    int n_x() const noexcept { return n_x_; }
    double dt() const noexcept { return dt_; }
    double dx() const noexcept { return dx_; }

    double t(int k) const noexcept { return static_cast<double>(k) * dt_; }
    double x(int j) const noexcept { return static_cast<double>(j) * dx_; }

    /// Largest k with t_k <= t (clamped to [0, n_t]).
    int time_floor(double t) const noexcept;
    /// Largest j with x_j <= x (clamped to [0, n_x]).
    int deadline_floor(double x) const noexcept;
    /// Cell holding deadline d: cell 0 is {0}, cell j >= 1 is (x_{j-1}, x_j],
    /// and n_x + 1 is the overflow cell (X, inf).
    int deadline_cell(double d) const noexcept;

    /// Grid with both steps halved `times` times.
    Grid refined(int times = 1) const;

    /// True when every deadline node is also a time node (dx = q * dt).
    bool deadline_nodes_are_time_nodes() const noexcept;
    /// dx / dt when it is an integer, otherwise 0.
    int deadline_to_time_ratio() const noexcept;

    bool operator==(const Grid& other) const noexcept;

private:
    double t_max_ = 1.0;
    double x_max_ = 1.0;
    int n_t_ = 1;
    int n_x_ = 1;
    double dt_ = 1.0;
    double dx_ = 1.0;
};

/// Real-valued path on the time nodes of a grid.
using ScalarPath = std::vector<double>;
/// K scalar paths, indexed [component][time node].
using VectorPath = std::vector<ScalarPath>;

VectorPath make_vector_path(const Grid& grid, int K, double value = 0.0);

/// Cumulative field of a K-vector measure-valued path:
/// value(i, k, j) is the mass of component i at time t_k with deadline in [0, x_j].
/// Mass with deadline beyond x_max is kept per (i, k) in a separate overflow
/// marginal, so totals over [0, inf) stay exact.
class GriddedMeasurePath {
public:
    GriddedMeasurePath() = default;
    GriddedMeasurePath(const Grid& grid, int K);

    const Grid& grid() const noexcept { return grid_; }
    int components() const noexcept { return K_; }
    bool empty() const noexcept { return data_.empty(); }

    // Unchecked access.
    double operator()(int i, int k, int j) const noexcept { return data_[index(i, k, j)]; }
    double& operator()(int i, int k, int j) noexcept { return data_[index(i, k, j)]; }

    /// Checked access; throws BoundsError.
    double at(int i, int k, int j) const;

    /// The n_x + 1 cumulative values of component i at time node k.
    std::span<const double> slice(int i, int k) const;
    std::span<double> slice(int i, int k);

    double overflow(int i, int k) const noexcept { return overflow_[oindex(i, k)]; }
    double& overflow(int i, int k) noexcept { return overflow_[oindex(i, k)]; }
    /// Mass over [0, inf) of component i at node k.
    double total_mass(int i, int k) const noexcept {
        return (*this)(i, k, grid_.n_x()) + overflow(i, k);
    }
    /// total_mass(i, k) for every time node.
    ScalarPath total(int i) const;
    bool has_overflow() const;
    /// Level j of component i as a time path.
    ScalarPath level(int i, int j) const;
    void set_level(int i, int j, std::span<const double> values);

    /// Adds `mass` at deadline x from time t onward (cumulative semantics).
    /// Deadlines beyond x_max land in the overflow marginal.
    void add_mass(int i, double t, double x, double mass);

    /// Largest amount by which F decreases in x anywhere (0 when monotone).
    double x_monotonicity_violation() const;
    /// Largest amount by which F decreases in t anywhere (0 for increasing paths).
    double t_monotonicity_violation() const;
    double min_value() const;

    GriddedMeasurePath& operator+=(const GriddedMeasurePath& other);
    GriddedMeasurePath& operator-=(const GriddedMeasurePath& other);
    GriddedMeasurePath& operator*=(double c);

    const std::vector<double>& raw() const noexcept { return data_; }

private:
    std::size_t index(int i, int k, int j) const noexcept {
        return (static_cast<std::size_t>(i) * (grid_.n_t() + 1) + k) * (grid_.n_x() + 1) + j;
    }
    std::size_t oindex(int i, int k) const noexcept {
        return static_cast<std::size_t>(i) * (grid_.n_t() + 1) + k;
    }
    void require_same_shape(const GriddedMeasurePath& other) const;

    Grid grid_;
    int K_ = 0;
    std::vector<double> data_;
    std::vector<double> overflow_;
};

GriddedMeasurePath make_path(const Grid& grid, int K);

/// Mass of component i at time node k with deadline in [x_lo, x_hi].
///
/// Endpoints snap down to the grid. At grid resolution the closed interval
/// resolves to the cells (x_lo, x_hi], plus the atom cell {0} when x_lo
/// snaps to 0. Returns 0 when x_lo > x_hi.
double interval_mass(const GriddedMeasurePath& path, int i, int k, double x_lo, double x_hi);

/// max over k <= T'/dt and all j of |F1 - F2| for component i.
double sup_cdf_distance(const GriddedMeasurePath& p1, const GriddedMeasurePath& p2, int i,
                        double up_to_time);
/// Same, maximised over every component.
double sup_cdf_distance(const GriddedMeasurePath& p1, const GriddedMeasurePath& p2,
                        double up_to_time);
/// sup-norm distance of two scalar paths over k <= T'/dt.
double sup_distance(const ScalarPath& a, const ScalarPath& b, const Grid& grid, double up_to_time);
double sup_distance(const VectorPath& a, const VectorPath& b, const Grid& grid, double up_to_time);

struct LevyDistanceResult {
    double d = 0.0;
    double sup_cdf = 0.0;
    double resolution = 0.0;
};

/// Levy-Prokhorov distance between two single-time cumulative slices on the
/// same deadline grid, read as right-continuous step functions. The defining
/// inequalities are enforced for every real x, which for step functions
/// reduces to both ends of every cell; h is bisected to 1e-6. d never
/// exceeds sup_cdf and is symmetric in its arguments.
LevyDistanceResult levy_distance(std::span<const double> F1, std::span<const double> F2,
                                 double dx);

/// max |F[i][k][j] - F[i][l][j]| over |t_k - t_l| <= window, k, l <= T'/dt.
/// Uses the total-mass level j = n_x unless a level is given.
double modulus_of_continuity(const GriddedMeasurePath& path, int i, double window,
                             double up_to_time, std::optional<int> level = std::nullopt);
double modulus_of_continuity(const ScalarPath& f, const Grid& grid, double window,
                             double up_to_time);

/// Named paths sharing a grid, as exchanged through the trajectory CSV.
struct TrajectoryTable {
    Grid grid;
    std::map<std::string, GriddedMeasurePath> fields;
    std::map<std::string, VectorPath> scalars;
};

/// CSV with header `component,i,t,x,value`, one row per grid node.
/// Scalar paths use x = inf; a field also gets x = inf rows holding its
/// total mass over [0, inf). Values carry 17 significant digits.
void write_trajectory_csv(std::ostream& out, const TrajectoryTable& table);
/// Inverse of write_trajectory_csv. Throws ConfigError on malformed input.
TrajectoryTable read_trajectory_csv(std::istream& in);

}  // namespace edfnet
