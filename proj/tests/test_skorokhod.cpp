#include <doctest.h>

#include "oracles.hpp"

#include "edfnet/errors.hpp"
#include "edfnet/fluid_data.hpp"
#include "edfnet/skorokhod.hpp"

#include <cmath>

using namespace edfnet;

namespace {

ScalarPath sampled(int n, const std::function<double(double)>& f) {
    ScalarPath p(n + 1);
    for (int k = 0; k <= n; ++k) p[k] = f(static_cast<double>(k) / n);
    return p;
}

double sup_gap(const ScalarPath& a, const ScalarPath& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s = std::max(s, std::abs(a[k] - b[k]));
    return s;
}

}  // namespace

TEST_CASE("routing matrix certification") {
    CHECK_NOTHROW(RoutingMatrix(std::vector<std::vector<double>>{{0.0, 0.5}, {0.3, 0.0}}));
    CHECK_THROWS_AS(RoutingMatrix(std::vector<std::vector<double>>{{0.0, 1.2}, {0.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(RoutingMatrix(std::vector<std::vector<double>>{{0.0, -0.1}, {0.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(RoutingMatrix(std::vector<std::vector<double>>{{0.0, 1.0}, {1.0, 0.0}}), ConfigError);
    const RoutingMatrix r(std::vector<std::vector<double>>{{0.0, 0.5}, {0.0, 0.0}});
    CHECK(r.spectral_radius_bound() < 1.0);
    CHECK(r.exit_probability(0) == doctest::Approx(0.5));
    CHECK((r.r_inverse().array() >= 0.0).all());
    CHECK(r.has_probabilistic_row());
    CHECK_FALSE(RoutingMatrix(std::vector<std::vector<double>>{{0.0, 1.0}, {0.0, 0.0}}).has_probabilistic_row());
}

TEST_CASE("sm1d examples") {
    const int n = 1000;
    auto s = sm1d(sampled(n, [](double t) { return t; }));
    CHECK(sup_gap(s.z, sampled(n, [](double t) { return t; })) == 0.0);
    CHECK(*std::max_element(s.y.begin(), s.y.end()) == 0.0);

    s = sm1d(sampled(n, [](double t) { return -t; }));
    CHECK(*std::max_element(s.z.begin(), s.z.end()) == 0.0);
    CHECK(sup_gap(s.y, sampled(n, [](double t) { return t; })) <= 1e-15);

    s = sm1d(sampled(n, [](double t) { return 1.0 - 2.0 * t; }));
    CHECK(sup_gap(s.y, sampled(n, [](double t) { return std::max(0.0, 2.0 * t - 1.0); })) <= 1e-15);
    CHECK(sup_gap(s.z, sampled(n, [](double t) { return std::max(1.0 - 2.0 * t, 0.0); })) <= 1e-15);

    CHECK_THROWS_AS(sm1d(ScalarPath{-0.1, 0.0}), PreconditionError);
}

TEST_CASE("ormt two-node feedback example") {
    const int n = 2000;
    const RoutingMatrix rm(std::vector<std::vector<double>>{{0.0, 0.5}, {0.0, 0.0}});
    const VectorPath u{sampled(n, [](double t) { return -t; }), sampled(n, [](double t) { return t; })};
    const auto r = ormt(u, rm);
    const auto t = sampled(n, [](double s) { return s; });
    CHECK(sup_gap(r.y[0], t) <= 1e-14);
    CHECK(sup_gap(r.z[0], ScalarPath(n + 1, 0.0)) <= 1e-14);
    CHECK(sup_gap(r.z[1], sampled(n, [](double s) { return 0.5 * s; })) <= 1e-14);
    CHECK(sup_gap(r.y[1], ScalarPath(n + 1, 0.0)) == 0.0);

    oracle::VPath oz, oy;
    oracle::ormt(u, rm.to_rows(), oz, oy);
    CHECK(sup_gap(r.y[0], oy[0]) <= 1e-14);
    CHECK(sup_gap(r.z[1], oz[1]) <= 1e-14);
}

TEST_CASE("ormt trivial inputs and errors") {
    const RoutingMatrix rm(std::vector<std::vector<double>>{{0.0, 0.4}, {0.5, 0.0}});
    const VectorPath zero(2, ScalarPath(50, 0.0));
    const auto r = ormt(zero, rm);
    CHECK(r.z == zero);
    CHECK(r.y == zero);
    VectorPath bad = zero;
    bad[1][0] = -1.0;
    CHECK_THROWS_AS(ormt(bad, rm), PreconditionError);
    CHECK_THROWS_AS(ormt_lipschitz_check(zero, zero, rm), PreconditionError);

    // A positive tolerance with a one-step budget cannot converge here.
    VectorPath u(2);
    u[0] = sampled(200, [](double t) { return -t; });
    u[1] = sampled(200, [](double t) { return -0.5 * t; });
    CHECK_THROWS_AS(ormt(u, rm, OrmtOptions{1e-15, 1}), NonConvergenceError);
}

TEST_CASE("ormt property checks reject bad preconditions") {
    const RoutingMatrix rm(std::vector<std::vector<double>>{{0.0, 0.5}, {0.0, 0.0}});
    const int n = 100;
    const VectorPath u1{sampled(n, [](double t) { return 0.5 - t; }), sampled(n, [](double t) { return t; })};
    VectorPath u2 = u1;
    for (auto& p : u2)
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += static_cast<double>(k) / n;
    CHECK(ormt_monotonicity_check(u1, u2, rm).pass);
    CHECK(ormt_monotonicity_check(u1, u1, rm).pass);
    CHECK_THROWS_AS(ormt_monotonicity_check(u2, u1, rm), PreconditionError);

    const Grid g(1.0, 1.0, n, 1);
    VectorPath u3 = u1;
    for (auto& p : u3)
        for (int k = n / 2 + 1; k <= n; ++k) p[k] -= 1.0;
    CHECK(ormt_nonanticipation_check(u1, u3, rm, g, 0.5).pass);
    CHECK_THROWS_AS(ormt_nonanticipation_check(u1, u3, rm, g, 0.8), PreconditionError);
    CHECK(ormt_nonanticipation_check(u1, u1, rm, g, 1.0).pass);

    VectorPath c = u1;
    for (auto& p : c)
        for (auto& v : p) v += 0.3;
    CHECK(ormt_lipschitz_check(u1, c, rm) <= rm.lipschitz_bound());
}

TEST_CASE("vmvsm: empty system, subcritical and supercritical single node") {
    const Grid g(4.0, 6.0, 400, 300);
    NetworkSpec spec;
    spec.nodes.resize(1);
    spec.nodes[0].capacity = PiecewiseConstant::constant(1.0);
    spec.nodes[0].lead = LeadDistribution::uniform(0.0, 1.0);

    {
        spec.nodes[0].rate = PiecewiseConstant::constant(0.0);
        const auto alpha = build_alpha(spec, g);
        const auto mu = build_mu(spec, g);
        const auto sol = vmvsm_solve(alpha, mu, spec.routing);
        CHECK(sol.xi.min_value() == 0.0);
        CHECK(sol.beta.total(0) == ScalarPath(g.n_t() + 1, 0.0));
        CHECK(sup_gap(sol.iota[0], mu[0]) == 0.0);
    }
    {
        spec.nodes[0].rate = PiecewiseConstant::constant(0.7);
        const auto alpha = build_alpha(spec, g);
        const auto mu = build_mu(spec, g);
        const auto sol = vmvsm_solve(alpha, mu, spec.routing);
        double worst = 0.0, idle = 0.0;
        for (int k = 0; k <= g.n_t(); ++k) {
            worst = std::max(worst, sol.xi.total_mass(0, k));
            idle = std::max(idle, std::abs(sol.iota[0][k] - (mu[0][k] - 0.7 * g.t(k))));
        }
        CHECK(worst <= 1e-12);
        CHECK(idle <= 1e-12);
        // Each level is the half-line reflection of alpha[0, x_j] - mu.
        for (int j : {0, 40, 150, 300}) {
            ScalarPath u(g.n_t() + 1);
            for (int k = 0; k <= g.n_t(); ++k) u[k] = alpha(0, k, j) - mu[0][k];
            ScalarPath z, y;
            oracle::sm1d(u, z, y);
            CHECK(sup_gap(z, sol.xi.level(0, j)) <= 1e-12);
        }
    }
    {
        spec.nodes[0].rate = PiecewiseConstant::constant(1.5);
        const auto alpha = build_alpha(spec, g);
        const auto mu = build_mu(spec, g);
        const auto sol = vmvsm_solve(alpha, mu, spec.routing);
        double worst = 0.0;
        for (int k = 0; k <= g.n_t(); ++k) worst = std::max(worst, std::abs(sol.xi.total_mass(0, k) - 0.5 * g.t(k)));
        CHECK(worst <= 1e-12);
        const auto res = vmvsp_residuals(sol, alpha, mu, spec.routing);
        CHECK(res.balance <= 1e-12);
        CHECK(res.capacity <= 1e-12);
        CHECK(res.edf_complementarity <= 1e-8 * res.input_mass);
    }
}

TEST_CASE("vmvsm rejects mass beyond the deadline range") {
    const Grid g(4.0, 2.0, 100, 50);
    NetworkSpec spec;
    spec.nodes.resize(1);
    spec.nodes[0].rate = PiecewiseConstant::constant(1.0);
    spec.nodes[0].capacity = PiecewiseConstant::constant(1.0);
    spec.nodes[0].lead = LeadDistribution::uniform(0.5, 1.0);
    CHECK_THROWS_AS(vmvsm_solve(build_alpha(spec, g), build_mu(spec, g), spec.routing), DomainTruncationError);
}
