#include <doctest.h>

#include "edfnet/errors.hpp"
#include "edfnet/scenario.hpp"
#include "edfnet/simulator.hpp"
#include "edfnet/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace edfnet;

namespace {

Scenario scenario(const std::string& name) {
    return load_scenario(std::string(EDFNET_SCENARIO_DIR) + "/" + name + ".json");
}

NetworkSpec single(double rate, double cap, LeadDistribution lead, double eps = 0.2) {
    NetworkSpec s;
    s.eps = eps;
    s.nodes.resize(1);
    s.nodes[0].rate = PiecewiseConstant::constant(rate);
    s.nodes[0].capacity = PiecewiseConstant::constant(cap);
    s.nodes[0].lead = lead;
    return s;
}

}  // namespace

TEST_CASE("substreams are distinct and reproducible") {
    CHECK(substream_seed(1, 0, 0, StreamKind::Arrivals) == substream_seed(1, 0, 0, StreamKind::Arrivals));
    CHECK(substream_seed(1, 0, 0, StreamKind::Arrivals) != substream_seed(1, 0, 0, StreamKind::Leads));
    CHECK(substream_seed(1, 0, 0, StreamKind::Arrivals) != substream_seed(1, 1, 0, StreamKind::Arrivals));
    CHECK(substream_seed(1, 0, 0, StreamKind::Arrivals) != substream_seed(2, 0, 0, StreamKind::Arrivals));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(rng);
        CHECK((u >= 0.0 && u < 1.0));
    }
}

TEST_CASE("service laws have unit mean") {
    std::mt19937_64 rng(7);
    for (const auto& d : {ServiceDistribution::deterministic(), ServiceDistribution::uniform(0.5),
                          ServiceDistribution::scaled_beta(2, 3)}) {
        double s = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double v = d.sample(rng);
            CHECK(v <= d.support_bound());
            s += v;
        }
        CHECK(s / n == doctest::Approx(1.0).epsilon(0.01));
    }
    CHECK_THROWS_AS(ServiceDistribution::uniform(1.0), ConfigError);
}

TEST_CASE("no arrivals: only idleness accrues") {
    const Grid g(2.0, 3.0, 50, 30);
    SimOptions o;
    o.N = 50;
    o.check_balance = true;
    const auto tr = simulate(single(0.0, 1.0, LeadDistribution::uniform(0.5, 1.0)), g, o);
    CHECK(tr.event_count == 0);
    CHECK(tr.xi.min_value() == 0.0);
    CHECK(tr.alpha.total(0) == ScalarPath(g.n_t() + 1, 0.0));
    CHECK(tr.iota[0] == tr.mu[0]);
    const auto e = capacity_error(tr);
    for (double v : e.e[0]) CHECK(std::abs(v) <= 2.0 / o.N);
}

TEST_CASE("deterministic service keeps the capacity error within 2/N") {
    const Grid g(4.0, 6.0, 200, 150);
    for (int N : {10, 100, 1000}) {
        SimOptions o;
        o.N = N;
        o.seed = 3;
        o.service = ServiceDistribution::deterministic();
        const auto tr = simulate(single(1.3, 1.0, LeadDistribution::uniform(0.5, 1.5)), g, o);
        const auto e = capacity_error(tr);
        double worst = 0.0;
        for (double v : e.e[0]) worst = std::max(worst, std::abs(v));
        CHECK(worst <= 2.0 / N + 1e-12);
        CHECK(e.identity_gap <= 1e-12);
    }
}

TEST_CASE("subcritical queue stays small at N = 1000") {
    const Grid g(4.0, 6.0, 200, 150);
    SimOptions o;
    o.N = 1000;
    o.seed = 21;
    const auto tr = simulate(single(0.6, 1.0, LeadDistribution::uniform(0.5, 1.5)), g, o);
    const auto xi = tr.scaled(tr.xi);
    double worst = 0.0;
    for (int k = 0; k <= g.n_t(); ++k) worst = std::max(worst, xi.total_mass(0, k));
    CHECK(worst <= 3.0 * std::sqrt(g.t_max() / o.N));
}

TEST_CASE("zero capacity: every arrival reneges at its deadline") {
    const Grid g(4.0, 6.0, 200, 150);
    SimOptions o;
    o.N = 200;
    o.policy = Policy::HardEdf;
    o.check_balance = true;
    const auto tr = simulate(single(1.0, 0.0, LeadDistribution::uniform(0.5, 1.0)), g, o);
    const int j = g.deadline_floor(g.t_max());
    CHECK(tr.rho[0].back() == tr.alpha(0, g.n_t(), j));
    CHECK(tr.beta_s.total_mass(0, g.n_t()) == 0.0);
    CHECK(tr.max_balance_residual == 0);
    CHECK(tr.hardness_violations == 0);
}

TEST_CASE("hard with unexpirable deadlines replays the soft log") {
    const Grid g(4.0, 10.0, 200, 250);
    const auto spec = single(1.2, 1.0, LeadDistribution::uniform(4.5, 5.5));
    SimOptions o;
    o.N = 300;
    o.seed = 8;
    const auto soft = simulate_soft(spec, g, o);
    const auto hard = simulate_hard(spec, g, o);
    CHECK(soft.events.size() > 1000);
    CHECK(soft.events == hard.events);
}

TEST_CASE("same seed, same log; different seed, different log") {
    const auto s = scenario("feedback2");
    SimOptions o;
    o.N = 100;
    o.seed = 4;
    o.service = s.service;
    const auto a = simulate(s.network, s.grid, o);
    const auto b = simulate(s.network, s.grid, o);
    o.replication = 1;
    const auto c = simulate(s.network, s.grid, o);
    CHECK(a.events == b.events);
    CHECK_FALSE(a.events == c.events);
}

TEST_CASE("routing errors") {
    const auto tandem = scenario("tandem");
    SimOptions o;
    o.N = 100;
    o.service = tandem.service;
    const auto tr = simulate(tandem.network, tandem.grid, o);
    const auto E = routing_error_field(tr, tandem.network.routing);
    CHECK(E.min_value() == 0.0);
    CHECK(-E.min_value() == 0.0);
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k <= tandem.grid.n_t(); ++k) CHECK(E.total_mass(c, k) == 0.0);

    const auto fb = scenario("feedback2");
    o.service = fb.service;
    const auto tf = simulate(fb.network, fb.grid, o);
    CHECK(routing_error_at(tf, fb.network.routing, 0, 1, 0.0, 6.0) == 0.0);
    // Direct count from the marks at one probe.
    double routed = 0.0, all = 0.0;
    for (const auto& m : tf.marks[0].departures) {
        if (m.t <= 2.0 && m.deadline <= 3.0) {
            all += 1.0;
            routed += m.other == 1;
        }
    }
    CHECK(routing_error_at(tf, fb.network.routing, 0, 1, 2.0, 3.0) ==
          doctest::Approx(routed - fb.network.routing.p(0, 1) * all));
    CHECK(departures_by(tf, 0, 2.0) == static_cast<std::int64_t>(std::count_if(
                                           tf.marks[0].departures.begin(), tf.marks[0].departures.end(),
                                           [](const Mark& m) { return m.t <= 2.0; })));
}

TEST_CASE("EDF order at service starts") {
    const auto s = scenario("single_supercritical");
    SimOptions o;
    o.N = 200;
    o.service = s.service;
    const auto tr = simulate(s.network, s.grid, o);
    // At every start, no queued job may carry a smaller deadline.
    const auto& mk = tr.marks[0];
    std::vector<std::pair<double, double>> present;  // (arrival time, deadline)
    for (const auto& a : mk.arrivals) present.push_back({a.t, a.deadline});
    std::multiset<double> queued;
    std::size_t ai = 0;
    std::sort(present.begin(), present.end());
    int bad = 0;
    for (const auto& st : mk.starts) {
        while (ai < present.size() && present[ai].first <= st.t) queued.insert(present[ai++].second);
        auto it = queued.find(st.deadline);
        REQUIRE(it != queued.end());
        if (*queued.begin() < st.deadline) ++bad;
        queued.erase(it);
    }
    CHECK(bad == 0);
}

TEST_CASE("too small N is rejected for the hard model") {
    const auto s = scenario("single_supercritical");
    const int n = minimal_admissible_N(s.network, s.service, s.grid.t_max());
    CHECK(n > 1);
    SimOptions o;
    o.policy = Policy::HardEdf;
    o.N = n - 1;
    o.service = s.service;
    CHECK_THROWS_AS(simulate(s.network, s.grid, o), PreconditionError);
    o.N = n;
    CHECK_NOTHROW(simulate(s.network, s.grid, o));
}
