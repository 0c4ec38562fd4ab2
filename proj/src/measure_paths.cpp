#include "edfnet/measure_paths.hpp"

#include "edfnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace edfnet {

namespace {

// Relative slack for snapping values that sit on a node up to rounding.
constexpr double kSnap = 1e-9;

}  // namespace

Grid::Grid(double t_max, double x_max, int n_t, int n_x)
    : t_max_(t_max), x_max_(x_max), n_t_(n_t), n_x_(n_x) {
    if (!(t_max > 0.0) || !(x_max > 0.0) || !std::isfinite(t_max) || !std::isfinite(x_max)) {
        throw ConfigError("grid: horizons T and X must be positive and finite");
    }
    if (n_t < 1 || n_x < 1) {
        throw ConfigError("grid: n_t and n_x must be at least 1");
    }
    dt_ = t_max / n_t;
    dx_ = x_max / n_x;
}

int Grid::time_floor(double t) const noexcept {
    if (!(t > 0.0)) return 0;
    const double k = std::floor(t / dt_ + kSnap);
    return k >= n_t_ ? n_t_ : static_cast<int>(k);
}

int Grid::deadline_floor(double x) const noexcept {
    if (!(x > 0.0)) return 0;
    const double j = std::floor(x / dx_ + kSnap);
    return j >= n_x_ ? n_x_ : static_cast<int>(j);
}

int Grid::deadline_cell(double d) const noexcept {
    if (!(d > 0.0)) return 0;
    const double c = std::ceil(d / dx_ - kSnap);
    if (c > n_x_) return n_x_ + 1;
    return c < 0.0 ? 0 : static_cast<int>(c);
}

Grid Grid::refined(int times) const {
    const int f = 1 << times;
    return Grid(t_max_, x_max_, n_t_ * f, n_x_ * f);
}

int Grid::deadline_to_time_ratio() const noexcept {
    const double q = dx_ / dt_;
    const double r = std::round(q);
    if (r < 1.0 || std::abs(q - r) > 1e-9 * r) return 0;
    return static_cast<int>(r);
}

bool Grid::deadline_nodes_are_time_nodes() const noexcept { return deadline_to_time_ratio() > 0; }

bool Grid::operator==(const Grid& other) const noexcept {
    return t_max_ == other.t_max_ && x_max_ == other.x_max_ && n_t_ == other.n_t_ &&
           n_x_ == other.n_x_;
}

VectorPath make_vector_path(const Grid& grid, int K, double value) {
    return VectorPath(static_cast<std::size_t>(K), ScalarPath(grid.n_t() + 1, value));
}

GriddedMeasurePath::GriddedMeasurePath(const Grid& grid, int K) : grid_(grid), K_(K) {
    if (K < 1) throw ConfigError("measure path: component count must be at least 1");
    data_.assign(static_cast<std::size_t>(K) * (grid.n_t() + 1) * (grid.n_x() + 1), 0.0);
    overflow_.assign(static_cast<std::size_t>(K) * (grid.n_t() + 1), 0.0);
}

GriddedMeasurePath make_path(const Grid& grid, int K) { return GriddedMeasurePath(grid, K); }

double GriddedMeasurePath::at(int i, int k, int j) const {
    if (i < 0 || i >= K_ || k < 0 || k > grid_.n_t() || j < 0 || j > grid_.n_x()) {
        std::ostringstream msg;
        msg << "measure path index (" << i << ", " << k << ", " << j << ") out of range";
        throw BoundsError(msg.str());
    }
    return (*this)(i, k, j);
}

std::span<const double> GriddedMeasurePath::slice(int i, int k) const {
    return {data_.data() + index(i, k, 0), static_cast<std::size_t>(grid_.n_x() + 1)};
}

std::span<double> GriddedMeasurePath::slice(int i, int k) {
    return {data_.data() + index(i, k, 0), static_cast<std::size_t>(grid_.n_x() + 1)};
}

ScalarPath GriddedMeasurePath::total(int i) const {
    ScalarPath out(grid_.n_t() + 1);
    for (int k = 0; k <= grid_.n_t(); ++k) out[k] = total_mass(i, k);
    return out;
}

bool GriddedMeasurePath::has_overflow() const {
    return std::any_of(overflow_.begin(), overflow_.end(), [](double v) { return v != 0.0; });
}

ScalarPath GriddedMeasurePath::level(int i, int j) const {
    ScalarPath out(grid_.n_t() + 1);
    for (int k = 0; k <= grid_.n_t(); ++k) out[k] = (*this)(i, k, j);
    return out;
}

void GriddedMeasurePath::set_level(int i, int j, std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(grid_.n_t() + 1)) {
        throw ShapeError("set_level: path length does not match the time grid");
    }
    for (int k = 0; k <= grid_.n_t(); ++k) (*this)(i, k, j) = values[k];
}

void GriddedMeasurePath::add_mass(int i, double t, double x, double mass) {
    if (i < 0 || i >= K_) throw BoundsError("add_mass: component out of range");
    const int cell = grid_.deadline_cell(x);
    // first node with t_k >= t
    int k0 = grid_.time_floor(t);
    if (grid_.t(k0) < t * (1.0 - kSnap) - kSnap) ++k0;
    for (int k = k0; k <= grid_.n_t(); ++k) {
        if (cell > grid_.n_x()) {
            overflow(i, k) += mass;
            continue;
        }
        for (int j = cell; j <= grid_.n_x(); ++j) (*this)(i, k, j) += mass;
    }
}

double GriddedMeasurePath::x_monotonicity_violation() const {
    double worst = 0.0;
    for (int i = 0; i < K_; ++i) {
        for (int k = 0; k <= grid_.n_t(); ++k) {
            const auto s = slice(i, k);
            for (std::size_t j = 1; j < s.size(); ++j) worst = std::max(worst, s[j - 1] - s[j]);
        }
    }
    return worst;
}

double GriddedMeasurePath::t_monotonicity_violation() const {
    double worst = 0.0;
    for (int i = 0; i < K_; ++i) {
        for (int k = 1; k <= grid_.n_t(); ++k) {
            const auto prev = slice(i, k - 1);
            const auto cur = slice(i, k);
            for (std::size_t j = 0; j < cur.size(); ++j) worst = std::max(worst, prev[j] - cur[j]);
            worst = std::max(worst, overflow(i, k - 1) - overflow(i, k));
        }
    }
    return worst;
}

double GriddedMeasurePath::min_value() const {
    if (data_.empty()) return 0.0;
    return std::min(*std::min_element(data_.begin(), data_.end()),
                    *std::min_element(overflow_.begin(), overflow_.end()));
}

void GriddedMeasurePath::require_same_shape(const GriddedMeasurePath& other) const {
    if (!(grid_ == other.grid_) || K_ != other.K_) {
        throw ShapeError("measure paths live on different grids or component counts");
    }
}

GriddedMeasurePath& GriddedMeasurePath::operator+=(const GriddedMeasurePath& other) {
    require_same_shape(other);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
    for (std::size_t n = 0; n < overflow_.size(); ++n) overflow_[n] += other.overflow_[n];
    return *this;
}

GriddedMeasurePath& GriddedMeasurePath::operator-=(const GriddedMeasurePath& other) {
    require_same_shape(other);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
    for (std::size_t n = 0; n < overflow_.size(); ++n) overflow_[n] -= other.overflow_[n];
    return *this;
}

GriddedMeasurePath& GriddedMeasurePath::operator*=(double c) {
    for (double& v : data_) v *= c;
    for (double& v : overflow_) v *= c;
    return *this;
}

double interval_mass(const GriddedMeasurePath& path, int i, int k, double x_lo, double x_hi) {
    if (i < 0 || i >= path.components() || k < 0 || k > path.grid().n_t()) {
        throw BoundsError("interval_mass: component or time index out of range");
    }
    if (x_lo > x_hi) return 0.0;
    const Grid& g = path.grid();
    const int j_hi = g.deadline_floor(x_hi);
    const int j_lo = g.deadline_floor(x_lo);
    if (j_lo == 0) return path(i, k, j_hi);
    return path(i, k, j_hi) - path(i, k, j_lo);
}

double sup_cdf_distance(const GriddedMeasurePath& p1, const GriddedMeasurePath& p2, int i,
                        double up_to_time) {
    if (!(p1.grid() == p2.grid()) || p1.components() != p2.components()) {
        throw ShapeError("sup_cdf_distance: paths live on different grids");
    }
    if (i < 0 || i >= p1.components()) throw BoundsError("sup_cdf_distance: component out of range");
    const int k_max = p1.grid().time_floor(up_to_time);
    double worst = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        const auto a = p1.slice(i, k);
        const auto b = p2.slice(i, k);
        for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    }
    return worst;
}

double sup_cdf_distance(const GriddedMeasurePath& p1, const GriddedMeasurePath& p2,
                        double up_to_time) {
    double worst = 0.0;
    for (int i = 0; i < p1.components(); ++i) {
        worst = std::max(worst, sup_cdf_distance(p1, p2, i, up_to_time));
    }
    return worst;
}

double sup_distance(const ScalarPath& a, const ScalarPath& b, const Grid& grid, double up_to_time) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(grid.n_t() + 1)) {
        throw ShapeError("sup_distance: path lengths differ from the time grid");
    }
    const int k_max = grid.time_floor(up_to_time);
    double worst = 0.0;
    for (int k = 0; k <= k_max; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

double sup_distance(const VectorPath& a, const VectorPath& b, const Grid& grid, double up_to_time) {
    if (a.size() != b.size()) throw ShapeError("sup_distance: component counts differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, sup_distance(a[i], b[i], grid, up_to_time));
    }
    return worst;
}

LevyDistanceResult levy_distance(std::span<const double> F1, std::span<const double> F2,
                                 double dx) {
    if (F1.size() != F2.size() || F1.empty()) {
        throw ShapeError("levy_distance: slices have different deadline grids");
    }
    const int n = static_cast<int>(F1.size()) - 1;
    LevyDistanceResult out;
    out.resolution = std::max(dx, 1e-6);
    for (std::size_t j = 0; j < F1.size(); ++j) {
        out.sup_cdf = std::max(out.sup_cdf, std::abs(F1[j] - F2[j]));
    }
    if (out.sup_cdf == 0.0) return out;

    auto cdf1 = [&](double y) {
        if (y < 0.0) return 0.0;
        const double j = std::floor(y / dx + kSnap);
        return j >= n ? F1[n] : F1[static_cast<std::size_t>(j)];
    };
    // F1 just left of y: value at the last node strictly below y.
    auto cdf1_left = [&](double y) {
        const double i = std::ceil(y / dx - kSnap) - 1.0;
        if (i < 0.0) return 0.0;
        return i >= n ? F1[n] : F1[static_cast<std::size_t>(i)];
    };
    // F2 is constant on [x_j, x_{j+1}), so the lower inequality binds at the
    // right end of the cell and the upper one at its left end.
    auto feasible = [&](double h) {
        for (int j = 0; j <= n; ++j) {
            const double lower = j < n ? cdf1_left((j + 1) * dx - h) : F1[n];
            if (lower - h > F2[j]) return false;
            if (F2[j] > cdf1(j * dx + h) + h) return false;
        }
        return true;
    };

    double lo = 0.0;
    double hi = out.sup_cdf;
    if (!feasible(hi)) {
        throw InternalError("levy_distance: sup-CDF distance is not feasible");
    }
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.d = std::min(hi, out.sup_cdf);
    return out;
}

double modulus_of_continuity(const ScalarPath& f, const Grid& grid, double window,
                             double up_to_time) {
    if (f.size() != static_cast<std::size_t>(grid.n_t() + 1)) {
        throw ShapeError("modulus_of_continuity: path length differs from the time grid");
    }
    const int k_max = grid.time_floor(up_to_time);
    const int w = std::max(1, grid.time_floor(window));
    double worst = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        for (int l = k + 1; l <= std::min(k_max, k + w); ++l) {
            worst = std::max(worst, std::abs(f[l] - f[k]));
        }
    }
    return worst;
}

double modulus_of_continuity(const GriddedMeasurePath& path, int i, double window,
                             double up_to_time, std::optional<int> level) {
    if (i < 0 || i >= path.components()) {
        throw BoundsError("modulus_of_continuity: component out of range");
    }
    const int j = level.value_or(path.grid().n_x());
    if (j < 0 || j > path.grid().n_x()) throw BoundsError("modulus_of_continuity: level out of range");
    return modulus_of_continuity(path.level(i, j), path.grid(), window, up_to_time);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryTable& table) {
    const Grid& g = table.grid;
    out << "component,i,t,x,value\n";
    char buf[128];
    for (const auto& [name, path] : table.fields) {
        if (!(path.grid() == g)) throw ShapeError("write_trajectory_csv: field '" + name + "' grid mismatch");
        for (int i = 0; i < path.components(); ++i) {
            for (int k = 0; k <= g.n_t(); ++k) {
                for (int j = 0; j <= g.n_x(); ++j) {
                    std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g,%.17g\n", i, g.t(k), g.x(j),
                                  path(i, k, j));
                    out << name << buf;
                }
                std::snprintf(buf, sizeof buf, ",%d,%.17g,inf,%.17g\n", i, g.t(k),
                              path.total_mass(i, k));
                out << name << buf;
            }
        }
    }
    for (const auto& [name, vec] : table.scalars) {
        for (std::size_t i = 0; i < vec.size(); ++i) {
            if (vec[i].size() != static_cast<std::size_t>(g.n_t() + 1)) {
                throw ShapeError("write_trajectory_csv: scalar '" + name + "' length mismatch");
            }
            for (int k = 0; k <= g.n_t(); ++k) {
                std::snprintf(buf, sizeof buf, ",%zu,%.17g,inf,%.17g\n", i, g.t(k), vec[i][k]);
                out << name << buf;
            }
        }
    }
}

namespace {

struct CsvRow {
    std::string component;
    int i;
    double t;
    double x;
    double value;
};

double parse_number(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ConfigError("trajectory csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

}  // namespace

TrajectoryTable read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("component,i,t,x,value", 0) != 0) {
        throw ConfigError("trajectory csv: missing header 'component,i,t,x,value'");
    }
    std::vector<CsvRow> rows;
    std::set<double> ts;
    std::set<double> xs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 5) {
            throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": expected 5 columns");
        }
        CsvRow r{cols[0], static_cast<int>(parse_number(cols[1], lineno)), parse_number(cols[2], lineno),
                 parse_number(cols[3], lineno), parse_number(cols[4], lineno)};
        if (r.i < 0) throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": negative index");
        ts.insert(r.t);
        if (std::isfinite(r.x)) xs.insert(r.x);
        rows.push_back(std::move(r));
    }
    if (ts.size() < 2) throw ConfigError("trajectory csv: need at least two time nodes");
    TrajectoryTable table;
    const int n_t = static_cast<int>(ts.size()) - 1;
    const double T = *ts.rbegin();
    const int n_x = xs.size() >= 2 ? static_cast<int>(xs.size()) - 1 : 1;
    const double X = xs.size() >= 2 ? *xs.rbegin() : 1.0;
    table.grid = Grid(T, X, n_t, n_x);
    const Grid& g = table.grid;

    // A component with any finite-x row is a field; its x = inf rows are totals.
    std::map<std::string, int> field_k;
    std::map<std::string, int> scalar_k;
    for (const auto& r : rows) {
        if (std::isfinite(r.x)) field_k[r.component] = std::max(field_k[r.component], r.i + 1);
    }
    for (const auto& r : rows) {
        if (!field_k.count(r.component)) scalar_k[r.component] = std::max(scalar_k[r.component], r.i + 1);
    }
    for (const auto& [name, K] : field_k) table.fields.emplace(name, GriddedMeasurePath(g, K));
    for (const auto& [name, K] : scalar_k) table.scalars.emplace(name, make_vector_path(g, K));
    std::vector<std::pair<const CsvRow*, GriddedMeasurePath*>> totals;
    for (const auto& r : rows) {
        const int k = static_cast<int>(std::lround(r.t / g.dt()));
        if (k < 0 || k > g.n_t()) throw ConfigError("trajectory csv: time off the grid");
        if (auto f = table.fields.find(r.component); f != table.fields.end()) {
            if (std::isfinite(r.x)) {
                const int j = static_cast<int>(std::lround(r.x / g.dx()));
                if (j < 0 || j > g.n_x()) throw ConfigError("trajectory csv: deadline off the grid");
                f->second(r.i, k, j) = r.value;
            } else {
                totals.emplace_back(&r, &f->second);
            }
        } else {
            table.scalars.at(r.component)[r.i][k] = r.value;
        }
    }
    for (const auto& [r, path] : totals) {
        const int k = static_cast<int>(std::lround(r->t / g.dt()));
        path->overflow(r->i, k) = r->value - (*path)(r->i, k, g.n_x());
    }
    return table;
}

}  // namespace edfnet
