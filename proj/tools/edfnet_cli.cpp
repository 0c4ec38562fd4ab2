#include "edfnet/convergence.hpp"
#include "edfnet/errors.hpp"
#include "edfnet/export.hpp"
#include "edfnet/fluid_hard.hpp"
#include "edfnet/scenario.hpp"
#include "edfnet/simulator.hpp"
#include "edfnet/skorokhod.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string scenario;
    std::string out = "out";
    int refine = 0;
    std::vector<std::string> tol_overrides;
};

void add_common(CLI::App* app, Common& c, bool needs_out = true) {
    app->add_option("--scenario", c.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    if (needs_out) app->add_option("--out", c.out, "Output directory");
    app->add_option("--grid-refine", c.refine, "Halve both grid steps k times")->check(CLI::NonNegativeNumber);
    app->add_option("--tol-overrides", c.tol_overrides, "Tolerance overrides key=value");
}

edfnet::Scenario load(const Common& c) {
    edfnet::Scenario s = edfnet::load_scenario(c.scenario);
    if (c.refine > 0) s.grid = s.grid.refined(c.refine);
    edfnet::apply_tol_overrides(s, c.tol_overrides);
    return s;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw edfnet::ConfigError("cannot write '" + p.string() + "'");
    out << text;
}

int fluid_soft(const Common& c) {
    const auto s = load(c);
    edfnet::VmvsmOptions opt;
    opt.ormt.tol = s.experiment.tol("ormt_tol", opt.ormt.tol);
    opt.comp_rel_tol = s.experiment.tol("comp_rel_tol", opt.comp_rel_tol);
    const auto alpha = edfnet::build_alpha(s.network, s.grid);
    const auto mu = edfnet::build_mu(s.network, s.grid);
    const auto sol = edfnet::vmvsm_solve(alpha, mu, s.network.routing, opt);
    edfnet::export_soft_solution(c.out, sol, alpha, mu, s.network.routing);
    std::cout << "soft fluid solution written to " << c.out << "\n";
    return 0;
}

int fluid_hard(const Common& c) {
    const auto s = load(c);
    const auto data = edfnet::make_hard_data(s.network, s.grid);
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    edfnet::SquareInductionOptions opt;
    opt.consistency_tol = s.experiment.tol("consistency_tol", opt.consistency_tol);
    const auto sq = edfnet::hard_network_square_induction(data, opt);
    const auto direct = edfnet::hard_network_direct(data);
    const double gap = edfnet::hard_solution_distance(sq.solution, direct);
    const double inv_tol = s.experiment.tol("invariant_tol", 1e-8);
    const auto inv = edfnet::check_hard_invariants(sq.solution, data.alpha, data.routing, inv_tol);

    edfnet::export_hard_solution(c.out, sq.solution, data, sq.consistency_log_json());
    edfnet::export_hard_solution((fs::path(c.out) / "direct").string(), direct, data);
    json cross{{"scheme_gap", gap},
               {"dt_plus_dx", s.grid.dt() + s.grid.dx()},
               {"invariants_pass", inv.pass(inv_tol)},
               {"max_invariant_violation", inv.max_violation()}};
    write_text(fs::path(c.out) / "crosscheck.json", cross.dump(2));
    std::cout << "hard fluid solutions written to " << c.out << " (scheme gap " << gap << ")\n";
    if (const auto* f = inv.failing(inv_tol)) {
        std::cerr << "invariant violated: " << f->name << " (" << f->magnitude << ")\n";
        return 1;
    }
    return 0;
}

int simulate(const Common& c, const std::string& policy, std::optional<std::uint64_t> seed, int N,
             std::uint64_t replication, bool check_balance) {
    const auto s = load(c);
    edfnet::SimOptions opt;
    opt.policy = edfnet::parse_policy(policy);
    opt.N = N;
    opt.seed = seed.value_or(s.seed);
    opt.replication = replication;
    opt.service = s.service;
    opt.check_balance = check_balance;
    const auto trace = edfnet::simulate(s.network, s.grid, opt);
    edfnet::export_trace(c.out, trace, s.network.routing);
    std::cout << trace.event_count << " events simulated, trace written to " << c.out << "\n";
    return 0;
}

int converge(const Common& c, const std::string& policy, std::optional<std::uint64_t> seed, int threads,
             bool martingale, bool tightness) {
    const auto s = load(c);
    edfnet::ConvergenceOptions opt;
    opt.policy = edfnet::parse_policy(policy);
    opt.N_list = s.experiment.N_list;
    opt.reps = s.experiment.reps;
    opt.seed = seed.value_or(s.seed);
    opt.service = s.service;
    opt.threshold_factor = s.experiment.tol("threshold_factor", opt.threshold_factor);
    opt.threads = threads;
    const auto rep = edfnet::run_convergence(s, opt);
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "report.json", rep.to_json());
    write_text(fs::path(c.out) / "report.md", rep.to_markdown());
    write_text(fs::path(c.out) / "errors.csv", rep.to_csv());
    bool ok = rep.verdict == edfnet::Verdict::Pass;
    if (martingale) {
        const auto m = edfnet::run_martingale_check(s, s.experiment.martingale_N, s.experiment.martingale_reps,
                                                    opt.seed, threads);
        write_text(fs::path(c.out) / "martingale.json", m.to_json());
        write_text(fs::path(c.out) / "martingale.csv", m.to_csv());
        if (!m.notice.empty()) std::cerr << "notice: " << m.notice << "\n";
        ok = ok && m.pass;
    }
    if (tightness) {
        const auto t = edfnet::run_tightness_surrogate(s, s.experiment.N_list, s.experiment.reps,
                                                       s.experiment.delta_list, opt.seed, threads);
        write_text(fs::path(c.out) / "tightness.json", t.to_json());
        write_text(fs::path(c.out) / "tightness.csv", t.to_csv());
        ok = ok && t.pass;
    }
    std::cout << rep.to_markdown();
    return ok ? 0 : 1;
}

int validate(const std::string& dir, double tol) {
    const auto rep = edfnet::validate_export(dir, tol);
    std::cout << rep.to_json() << "\n";
    if (const auto* f = rep.first_failure()) {
        std::cerr << "invariant violated: " << f->name << " (value " << f->value << ", tolerance " << f->tol << ")\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EDF network fluid solvers, simulator and convergence harness"};
    app.require_subcommand(1);

    Common soft_c, hard_c, sim_c, conv_c;
    auto* soft = app.add_subcommand("fluid-soft", "Solve the soft-EDF fluid model");
    add_common(soft, soft_c);
    auto* hard = app.add_subcommand("fluid-hard", "Solve the hard-EDF fluid model with both schemes");
    add_common(hard, hard_c);

    auto* sim = app.add_subcommand("simulate", "Run one stochastic replication");
    add_common(sim, sim_c);
    std::string sim_policy = "soft";
    std::optional<std::uint64_t> sim_seed;
    int sim_N = 100;
    std::uint64_t sim_rep = 0;
    bool sim_check = false;
    sim->add_option("--policy", sim_policy, "soft, hard or fisfo")->check(CLI::IsMember({"soft", "hard", "fisfo"}));
    sim->add_option("--seed", sim_seed, "Master seed (default: scenario seed)");
    sim->add_option("--N", sim_N, "Scale parameter")->check(CLI::PositiveNumber);
    sim->add_option("--replication", sim_rep, "Replication index");
    sim->add_flag("--check-balance", sim_check, "Recount queues after every event");

    auto* conv = app.add_subcommand("converge", "Run the N-scaling convergence experiment");
    add_common(conv, conv_c);
    std::string conv_policy = "soft";
    std::optional<std::uint64_t> conv_seed;
    int conv_threads = 0;
    bool conv_mart = false;
    bool conv_tight = false;
    conv->add_option("--policy", conv_policy, "soft or hard")->check(CLI::IsMember({"soft", "hard"}));
    conv->add_option("--seed", conv_seed, "Master seed (default: scenario seed)");
    conv->add_option("--threads", conv_threads, "Worker threads (0: all cores)");
    conv->add_flag("--martingale", conv_mart, "Also run the martingale bound check");
    conv->add_flag("--tightness", conv_tight, "Also run the reneging tightness check");

    auto* val = app.add_subcommand("validate", "Check invariants of an exported solution or trace");
    std::string val_dir;
    double val_tol = 1e-8;
    val->add_option("--solution", val_dir, "Exported directory")->required();
    val->add_option("--tol", val_tol, "Absolute tolerance");

    app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*soft) return fluid_soft(soft_c);
        if (*hard) return fluid_hard(hard_c);
        if (*sim) return simulate(sim_c, sim_policy, sim_seed, sim_N, sim_rep, sim_check);
        if (*conv) return converge(conv_c, conv_policy, conv_seed, conv_threads, conv_mart, conv_tight);
        if (*val) return validate(val_dir, val_tol);
        std::cout << "edfnet " << kVersion << "\n";
        return 0;
    } catch (const edfnet::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const edfnet::PreconditionError& e) {
        std::cerr << "precondition violated: " << e.what() << "\n";
        return 2;
    } catch (const edfnet::ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return 1;
    } catch (const edfnet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
