#include "edfnet/simulator.hpp"

#include "edfnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

namespace edfnet {

std::string to_string(Policy p) {
    switch (p) {
        case Policy::SoftEdf: return "soft";
        case Policy::HardEdf: return "hard";
        case Policy::Fisfo: return "fisfo";
    }
    return "unknown";
}

Policy parse_policy(const std::string& s) {
    if (s == "soft") return Policy::SoftEdf;
    if (s == "hard") return Policy::HardEdf;
    if (s == "fisfo") return Policy::Fisfo;
    throw ConfigError("unknown policy '" + s + "' (expected soft, hard or fisfo)");
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::Arrival: return "arrival";
        case EventKind::ServiceStart: return "service_start";
        case EventKind::Departure: return "departure";
        case EventKind::Routing: return "routing";
        case EventKind::Renege: return "renege";
    }
    return "unknown";
}

ServiceDistribution ServiceDistribution::deterministic() { return {}; }

ServiceDistribution ServiceDistribution::uniform(double c) {
    if (!(c >= 0.0 && c < 1.0)) throw ConfigError("uniform service: half-width must lie in [0, 1)");
    ServiceDistribution d;
    d.kind_ = Kind::Uniform;
    d.c_ = c;
    return d;
}

ServiceDistribution ServiceDistribution::scaled_beta(int a, int b) {
    if (a < 1 || b < 1) throw ConfigError("scaled-beta service: a and b must be positive integers");
    ServiceDistribution d;
    d.kind_ = Kind::ScaledBeta;
    d.a_ = a;
    d.b_ = b;
    return d;
}

double ServiceDistribution::support_bound() const {
    switch (kind_) {
        case Kind::Deterministic: return 1.0;
        case Kind::Uniform: return 1.0 + c_;
        case Kind::ScaledBeta: return static_cast<double>(a_ + b_) / a_;
    }
    return 1.0;
}

double ServiceDistribution::sample(std::mt19937_64& rng) const {
    switch (kind_) {
        case Kind::Deterministic: return 1.0;
        case Kind::Uniform: return 1.0 - c_ + 2.0 * c_ * uniform01(rng);
        case Kind::ScaledBeta: {
            // a-th order statistic of a + b - 1 uniforms is Beta(a, b).
            std::vector<double> u(static_cast<std::size_t>(a_ + b_ - 1));
            for (auto& x : u) x = uniform01(rng);
            std::nth_element(u.begin(), u.begin() + (a_ - 1), u.end());
            return u[a_ - 1] * (a_ + b_) / a_;
        }
    }
    return 1.0;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t rep, std::uint64_t node, StreamKind kind) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s = h ^ (rep * 0xd1b54a32d192ed03ULL);
    h = splitmix64(s);
    s = h ^ (node * 0xabc98388fb8fac03ULL);
    h = splitmix64(s);
    s = h ^ (static_cast<std::uint64_t>(kind) * 0x8cb92ba72f3d8dd7ULL);
    return splitmix64(s);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

GriddedMeasurePath SimTrace::scaled(const GriddedMeasurePath& counts) const {
    GriddedMeasurePath out = counts;
    out *= 1.0 / N;
    return out;
}

VectorPath SimTrace::scaled(const VectorPath& counts) const {
    VectorPath out = counts;
    for (auto& c : out) {
        for (auto& v : c) v /= N;
    }
    return out;
}

int minimal_admissible_N(const NetworkSpec& spec, const ServiceDistribution& service, double horizon) {
    int n_min = 1;
    for (int i = 0; i < spec.K(); ++i) {
        const auto& m = spec.nodes[i].capacity;
        if (m.sup_on(0.0, horizon) == 0.0) continue;
        const double inf_m = m.inf_on(0.0, horizon);
        if (!(inf_m > 0.0)) return std::numeric_limits<int>::max();
        const double need = std::floor(service.support_bound() / (spec.eps * inf_m)) + 1.0;
        n_min = std::max(n_min, static_cast<int>(std::min(need, 2e9)));
    }
    return n_min;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class QKind : int { Renege = 0, Completion = 1, Arrival = 2, Wakeup = 3 };

struct QEvent {
    double t;
    QKind kind;
    std::uint64_t seq;
    int node;
    std::int64_t job;
    std::uint64_t token;

    bool operator>(const QEvent& o) const {
        return std::tie(t, kind, seq) > std::tie(o.t, o.kind, o.seq);
    }
};

struct Job {
    double deadline;
    double arrival_time;
    int cell;
    int node;
    int migrations = 0;
    bool queued = false;
    std::uint64_t token = 0;
};

using QueueKey = std::tuple<double, double, std::int64_t>;

struct Server {
    std::int64_t job = -1;
    double start = 0.0;
    double start_capacity = 0.0;  // int_0^start m
    double requirement = 0.0;
    bool wakeup_pending = false;
};

class Engine {
public:
    Engine(const NetworkSpec& spec, const Grid& grid, const SimOptions& opt)
        : spec_(spec), g_(grid), opt_(opt), K_(spec.K()), nx_(grid.n_x()), T_(grid.t_max()) {
        hard_ = opt.policy == Policy::HardEdf;
        if (hard_) {
            const double cells = spec.eps / grid.dx();
            if (!(spec.eps > 0.0) || std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells)) {
                std::ostringstream msg;
                msg << "eps = " << spec.eps << " is not a positive multiple of dx = " << grid.dx()
                    << "; nearest grid-aligned eps is " << nearest_aligned_eps(spec.eps, grid.dx());
                throw ConfigError(msg.str());
            }
            e_ = static_cast<int>(std::lround(cells));
        }
        const std::size_t C = static_cast<std::size_t>(nx_ + 2);
        auto cells = [&](int comps) { return std::vector<std::vector<std::int64_t>>(comps, std::vector<std::int64_t>(C, 0)); };
        alpha_c_ = cells(K_);
        routed_c_ = cells(K_ * K_);
        beta_s_c_ = cells(K_);
        beta_r_c_ = cells(K_);
        gamma_c_ = cells(K_);
        busy_c_ = cells(K_);
        queue_c_ = cells(K_);
        queues_.resize(K_);
        servers_.resize(K_);
        completed_req_.assign(K_, 0.0);
        departures_.assign(K_, 0);
        started_.assign(K_, 0);
        reneged_.assign(K_, 0);
        prefix_req_.resize(K_);
        arrival_target_.assign(K_, 0.0);
        for (int i = 0; i < K_; ++i) {
            arrival_rng_.emplace_back(substream_seed(opt.seed, opt.replication, i, StreamKind::Arrivals));
            lead_rng_.emplace_back(substream_seed(opt.seed, opt.replication, i, StreamKind::Leads));
            service_rng_.emplace_back(substream_seed(opt.seed, opt.replication, i, StreamKind::Service));
            routing_rng_.emplace_back(substream_seed(opt.seed, opt.replication, i, StreamKind::Routing));
        }

        tr_.N = opt.N;
        tr_.policy = opt.policy;
        tr_.grid = grid;
        tr_.K = K_;
        tr_.eps = spec.eps;
        tr_.seed = opt.seed;
        tr_.replication = opt.replication;
        tr_.marks.resize(K_);
        for (auto* f : {&tr_.alpha, &tr_.xi, &tr_.beta, &tr_.beta_s, &tr_.beta_r, &tr_.gamma, &tr_.busy}) {
            *f = GriddedMeasurePath(grid, K_);
        }
        tr_.routed = GriddedMeasurePath(grid, K_ * K_);
        for (auto* v : {&tr_.mu, &tr_.effort, &tr_.iota, &tr_.rho, &tr_.departures}) *v = make_vector_path(grid, K_);
    }

    SimTrace run() {
        place_initial_jobs();
        for (int i = 0; i < K_; ++i) schedule_next_arrival(i);
        for (int i = 0; i < K_; ++i) try_start(i, 0.0);
        if (opt_.check_balance) check_balance();

        while (!pq_.empty()) {
            const QEvent ev = pq_.top();
            if (ev.t > T_) break;
            pq_.pop();
            sample_before(ev.t);
            switch (ev.kind) {
                case QKind::Renege: on_renege(ev); break;
                case QKind::Completion: on_completion(ev); break;
                case QKind::Arrival: on_arrival(ev); break;
                case QKind::Wakeup:
                    servers_[ev.node].wakeup_pending = false;
                    try_start(ev.node, ev.t);
                    break;
            }
            if (opt_.check_balance) check_balance();
        }
        sample_before(kInf);
        return std::move(tr_);
    }

private:
    void push(double t, QKind kind, int node, std::int64_t job = -1, std::uint64_t token = 0) {
        pq_.push({t, kind, seq_++, node, job, token});
    }

    void log(double t, EventKind kind, std::int64_t job, int node, double deadline, int extra = -1) {
        ++tr_.event_count;
        if (opt_.record_events) tr_.events.push_back({t, kind, job, node, deadline, extra});
    }

    QueueKey key(const Job& j, std::int64_t id) const {
        if (opt_.policy == Policy::Fisfo) return {j.arrival_time, 0.0, id};
        return {j.deadline, j.arrival_time, id};
    }

    void enqueue(std::int64_t id, double now) {
        Job& j = jobs_[id];
        j.queued = true;
        ++j.token;
        queues_[j.node].insert(key(j, id));
        ++queue_c_[j.node][j.cell];
        if (hard_ && j.deadline <= T_) push(std::max(j.deadline, now), QKind::Renege, j.node, id, j.token);
    }

    void place_initial_jobs() {
        for (int i = 0; i < K_; ++i) {
            const auto& prof = spec_.nodes[i].initial;
            const double total = prof.total();
            const auto count = static_cast<std::int64_t>(std::floor(opt_.N * total + 1e-9));
            for (std::int64_t n = 0; n < count; ++n) {
                const double d = prof.quantile((static_cast<double>(n) + 0.5) / count * total);
                new_exogenous_job(i, 0.0, d);
            }
        }
    }

    void new_exogenous_job(int i, double t, double deadline) {
        const auto id = static_cast<std::int64_t>(jobs_.size());
        jobs_.push_back({deadline, t, g_.deadline_cell(deadline), i});
        const Job& j = jobs_.back();
        ++alpha_c_[i][j.cell];
        tr_.marks[i].arrivals.push_back({t, deadline, j.cell, -1});
        log(t, EventKind::Arrival, id, i, deadline);
        enqueue(id, t);
    }

    void schedule_next_arrival(int i) {
        const auto& rate = spec_.nodes[i].rate;
        const double u = uniform01(arrival_rng_[i]);
        arrival_target_[i] += -std::log1p(-u) / opt_.N;
        const double t = rate.inverse_cumulative(arrival_target_[i]);
        if (t <= T_) push(t, QKind::Arrival, i);
    }

    void on_arrival(const QEvent& ev) {
        const int i = ev.node;
        const double lead = spec_.nodes[i].lead.quantile(uniform01(lead_rng_[i]));
        new_exogenous_job(i, ev.t, ev.t + lead);
        schedule_next_arrival(i);
        try_start(i, ev.t);
    }

    void on_renege(const QEvent& ev) {
        Job& j = jobs_[ev.job];
        if (!j.queued || j.token != ev.token || j.node != ev.node) return;
        queues_[j.node].erase(key(j, ev.job));
        j.queued = false;
        --queue_c_[j.node][j.cell];
        ++beta_r_c_[j.node][j.cell];
        ++reneged_[j.node];
        tr_.marks[j.node].reneges.push_back({ev.t, j.deadline, j.cell, -1});
        log(ev.t, EventKind::Renege, ev.job, j.node, j.deadline);
    }

    void try_start(int i, double t) {
        Server& s = servers_[i];
        if (s.job >= 0 || queues_[i].empty()) return;
        const auto& m = spec_.nodes[i].capacity;
        if (!(m(t) > 0.0)) {
            if (s.wakeup_pending) return;
            double b = t;
            while (true) {
                b = m.next_breakpoint(b);
                if (!(b <= T_)) return;
                if (m(b) > 0.0) break;
            }
            s.wakeup_pending = true;
            push(b, QKind::Wakeup, i);
            return;
        }
        const auto front = *queues_[i].begin();
        const std::int64_t id = std::get<2>(front);
        queues_[i].erase(queues_[i].begin());
        Job& j = jobs_[id];
        j.queued = false;
        ++j.token;
        --queue_c_[i][j.cell];
        ++beta_s_c_[i][j.cell];
        ++busy_c_[i][j.cell];
        ++started_[i];
        const double r = opt_.service.sample(service_rng_[i]);
        tr_.marks[i].starts.push_back({t, j.deadline, j.cell, -1});
        tr_.marks[i].requirements.push_back(r);
        prefix_req_[i].push_back((prefix_req_[i].empty() ? 0.0 : prefix_req_[i].back()) + r);
        s.job = id;
        s.start = t;
        s.start_capacity = m.cumulative(t);
        s.requirement = r;
        log(t, EventKind::ServiceStart, id, i, j.deadline);
        const double done = m.inverse_cumulative(s.start_capacity + r / opt_.N);
        if (done <= T_) push(std::max(done, t), QKind::Completion, i, id);
    }

    void on_completion(const QEvent& ev) {
        const int i = ev.node;
        Server& s = servers_[i];
        const std::int64_t id = s.job;
        Job& j = jobs_[id];
        completed_req_[i] += s.requirement;
        ++departures_[i];
        --busy_c_[i][j.cell];
        s.job = -1;

        double carried = j.deadline;
        int cell = j.cell;
        if (hard_) {
            carried = j.deadline + spec_.eps;
            cell = std::min(j.cell + e_, nx_ + 1);
        }
        ++gamma_c_[i][cell];

        const double u = uniform01(routing_rng_[i]);
        int dest = -1;
        double acc = 0.0;
        for (int k = 0; k < K_; ++k) {
            acc += spec_.routing.p(i, k);
            if (u < acc) {
                dest = k;
                break;
            }
        }
        tr_.marks[i].departures.push_back({ev.t, carried, cell, dest});
        log(ev.t, EventKind::Departure, id, i, j.deadline);
        log(ev.t, EventKind::Routing, id, i, dest >= 0 ? carried : j.deadline, dest);
        if (dest >= 0) {
            j.node = dest;
            j.deadline = carried;
            j.cell = cell;
            if (hard_) ++j.migrations;
            ++routed_c_[i * K_ + dest][cell];
            tr_.marks[dest].routed_in.push_back({ev.t, carried, cell, i});
            enqueue(id, ev.t);
        }
        try_start(i, ev.t);
        if (dest >= 0 && dest != i) try_start(dest, ev.t);
    }

    double effort_at(int i, double t) const {
        double eff = completed_req_[i];
        const Server& s = servers_[i];
        if (s.job >= 0) {
            const double acc = opt_.N * (spec_.nodes[i].capacity.cumulative(t) - s.start_capacity);
            eff += std::clamp(acc, 0.0, s.requirement);
        }
        return eff;
    }

    void write_cells(GriddedMeasurePath& f, int comp, int k, const std::vector<std::int64_t>& c) {
        std::int64_t acc = 0;
        for (int j = 0; j <= nx_; ++j) {
            acc += c[j];
            f(comp, k, j) = static_cast<double>(acc);
        }
        f.overflow(comp, k) = static_cast<double>(c[nx_ + 1]);
    }

    void sample_before(double t) {
        while (next_k_ <= g_.n_t() && g_.t(next_k_) < t) {
            snapshot(next_k_);
            ++next_k_;
        }
    }

    void snapshot(int k) {
        const double t = g_.t(k);
        for (int i = 0; i < K_; ++i) {
            write_cells(tr_.alpha, i, k, alpha_c_[i]);
            write_cells(tr_.xi, i, k, queue_c_[i]);
            write_cells(tr_.beta_s, i, k, beta_s_c_[i]);
            write_cells(tr_.beta_r, i, k, beta_r_c_[i]);
            write_cells(tr_.gamma, i, k, gamma_c_[i]);
            write_cells(tr_.busy, i, k, busy_c_[i]);
            for (int j = 0; j < K_; ++j) write_cells(tr_.routed, i * K_ + j, k, routed_c_[i * K_ + j]);
            for (int j = 0; j <= nx_; ++j) tr_.beta(i, k, j) = tr_.beta_s(i, k, j) + tr_.beta_r(i, k, j);
            tr_.beta.overflow(i, k) = tr_.beta_s.overflow(i, k) + tr_.beta_r.overflow(i, k);

            const double mu = opt_.N * spec_.nodes[i].capacity.cumulative(t);
            const double eff = effort_at(i, t);
            tr_.mu[i][k] = mu;
            tr_.effort[i][k] = eff;
            tr_.iota[i][k] = mu - eff;
            tr_.rho[i][k] = static_cast<double>(reneged_[i]);
            tr_.departures[i][k] = static_cast<double>(departures_[i]);

            // D = S(T) - 1 with S counting renewals of the requirement sequence.
            const auto& pre = prefix_req_[i];
            const auto s_minus_1 = std::upper_bound(pre.begin(), pre.end(), eff * (1.0 + 1e-12) + 1e-12) - pre.begin();
            tr_.departure_identity_gap = std::max(tr_.departure_identity_gap,
                                                  std::abs(static_cast<double>(departures_[i] - s_minus_1)));
            const double busy = servers_[i].job >= 0 ? 1.0 : 0.0;
            const double e = static_cast<double>(started_[i]) - eff;
            const double decomposition = -1.0 + busy + static_cast<double>(s_minus_1 + 1) - eff;
            tr_.error_identity_gap = std::max(tr_.error_identity_gap, std::abs(e - decomposition));

            if (hard_ && !queues_[i].empty()) {
                const int j_now = g_.deadline_floor(t);
                if (tr_.xi(i, k, j_now) > 0.0 && g_.x(j_now) <= t) ++tr_.hardness_violations;
            }
        }
    }

    void check_balance() {
        ++tr_.balance_checks;
        std::vector<std::int64_t> hist(nx_ + 2);
        for (int i = 0; i < K_; ++i) {
            std::fill(hist.begin(), hist.end(), 0);
            for (const auto& q : queues_[i]) ++hist[jobs_[std::get<2>(q)].cell];
            for (int c = 0; c <= nx_ + 1; ++c) {
                std::int64_t expected = alpha_c_[i][c] - beta_s_c_[i][c] - beta_r_c_[i][c];
                for (int j = 0; j < K_; ++j) expected += routed_c_[j * K_ + i][c];
                const std::int64_t r = std::abs(hist[c] - expected);
                tr_.max_balance_residual = std::max(tr_.max_balance_residual, r);
                if (r != 0) {
                    std::ostringstream msg;
                    msg << "simulator: queue balance broken at node " << i << ", cell " << c;
                    throw InternalError(msg.str());
                }
            }
        }
    }

    const NetworkSpec& spec_;
    Grid g_;
    SimOptions opt_;
    int K_;
    int nx_;
    double T_;
    bool hard_ = false;
    int e_ = 0;

    std::vector<Job> jobs_;
    std::vector<std::set<QueueKey>> queues_;
    std::vector<Server> servers_;
    std::priority_queue<QEvent, std::vector<QEvent>, std::greater<>> pq_;
    std::uint64_t seq_ = 0;

    std::vector<std::vector<std::int64_t>> alpha_c_, routed_c_, beta_s_c_, beta_r_c_, gamma_c_, busy_c_, queue_c_;
    std::vector<double> completed_req_;
    std::vector<std::int64_t> departures_, started_, reneged_;
    std::vector<std::vector<double>> prefix_req_;
    std::vector<double> arrival_target_;
    std::vector<std::mt19937_64> arrival_rng_, lead_rng_, service_rng_, routing_rng_;

    int next_k_ = 0;
    SimTrace tr_;
};

}  // namespace

SimTrace simulate(const NetworkSpec& spec, const Grid& grid, const SimOptions& options) {
    if (options.N < 1) throw ConfigError("simulate: N must be at least 1");
    if (static_cast<int>(spec.nodes.size()) != spec.K()) throw ConfigError("simulate: node count differs from K");
    if (options.policy == Policy::HardEdf) {
        const int n_min = minimal_admissible_N(spec, options.service, grid.t_max());
        if (options.N < n_min) {
            std::ostringstream msg;
            msg << "simulate_hard: a job could outlive its postponed deadline; service bound "
                << options.service.support_bound() << " needs N >= ";
            if (n_min == std::numeric_limits<int>::max()) {
                msg << "infinity (capacity vanishes on part of the horizon)";
            } else {
                msg << n_min;
            }
            throw PreconditionError(msg.str());
        }
    }
    return Engine(spec, grid, options).run();
}

SimTrace simulate_soft(const NetworkSpec& spec, const Grid& grid, SimOptions options) {
    if (options.policy == Policy::HardEdf) options.policy = Policy::SoftEdf;
    return simulate(spec, grid, options);
}

SimTrace simulate_hard(const NetworkSpec& spec, const Grid& grid, SimOptions options) {
    options.policy = Policy::HardEdf;
    return simulate(spec, grid, options);
}

}  // namespace edfnet
