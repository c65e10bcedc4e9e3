#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tap/brute_force.hpp"
#include "tap/fixtures.hpp"
#include "tap/solver.hpp"
#include "tap/tntp_io.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// FNV-1a 64-bit, stable across runs on identical bytes.
std::string digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Options {
    std::string net_path, trips_path, out_dir = "out";
    double gamma = 0.0, eps = 0.0;
    int max_iter = 0, gap_every = 0;
    double kappa = -1.0, power = -1.0;  // global overrides, < 0 means keep file values
};

void add_common_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--net", opt.net_path, "TNTP network file")->required();
    cmd->add_option("--trips", opt.trips_path, "TNTP trips file")->required();
    cmd->add_option("--gamma", opt.gamma, "entropy temperature (default: auto)");
    cmd->add_option("--eps", opt.eps, "target duality gap (default: auto)");
    cmd->add_option("--max-iter", opt.max_iter, "outer iteration cap");
    cmd->add_option("--gap-every", opt.gap_every, "duality-gap evaluation period");
    cmd->add_option("--kappa", opt.kappa, "override BPR kappa on every link");
    cmd->add_option("--power", opt.power, "override BPR power (1/mu) on every link");
    cmd->add_option("--out", opt.out_dir, "output directory");
}

int run_mode(const std::string& mode, const Options& opt) {
    const auto start = std::chrono::system_clock::now();
    std::string net_text, trips_text;
    tap::Network net;
    tap::DemandSpec demand;
    try {
        net_text = read_file(opt.net_path);
        trips_text = read_file(opt.trips_path);
        net = tap::parse_net(net_text);
        demand = tap::marginals(tap::parse_trips(trips_text));
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    for (auto& link : net.links) {
        if (opt.kappa >= 0.0) link.kappa = opt.kappa;
        if (opt.power >= 1.0) link.power_inv = opt.power;
    }

    tap::SolverConfig cfg;
    cfg.gamma = opt.gamma;
    cfg.eps = opt.eps;
    if (opt.max_iter > 0) {
        cfg.max_iter = opt.max_iter;
        cfg.baseline_max_passes = opt.max_iter;
    }
    if (opt.gap_every > 0) cfg.gap_every = opt.gap_every;
    tap::resolve_defaults(net, demand, cfg);

    tap::EquilibriumResult res;
    try {
        if (mode == "solve") {
            res = tap::solve_two_stage(net, demand, cfg);
        } else if (mode == "assign") {
            if (demand.d_ref.size() == 0) {
                std::cerr << "input error: trips file carries no reference matrix\n";
                return 1;
            }
            res = tap::solve_fixed_demand(net, demand, demand.d_ref, cfg);
        } else {
            res = tap::baseline_alternation(net, demand, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    }

    try {
        Eigen::MatrixXd d_vehicle = res.total_demand * res.d;
        tap::write_tables(net, demand, res.f, res.t, d_vehicle, res.history, opt.out_dir);

        std::ofstream summary(std::filesystem::path(opt.out_dir) / "summary.txt");
        auto t0 = std::chrono::system_clock::to_time_t(start);
        summary << "mode=" << mode << "\n"
                << "net=" << opt.net_path << "\n"
                << "trips=" << opt.trips_path << "\n"
                << "net_digest=" << digest(net_text) << "\n"
                << "trips_digest=" << digest(trips_text) << "\n"
                << "gamma=" << tap::fmt17(cfg.gamma) << "\n"
                << "eps=" << tap::fmt17(cfg.eps) << "\n"
                << "lambda=" << tap::fmt17(demand.total) << "\n"
                << "max_iter=" << cfg.max_iter << "\n"
                << "gap_every=" << cfg.gap_every << "\n"
                << "iterations=" << res.history.size() << "\n"
                << "status=" << tap::to_string(res.status) << "\n"
                << "objective=" << tap::fmt17(res.objective) << "\n"
                << "gap=" << tap::fmt17(res.gap) << "\n"
                << "start_timestamp=" << t0 << "\n"
                << "flows=" << opt.out_dir << "/flows.csv\n"
                << "demand=" << opt.out_dir << "/demand.csv\n"
                << "convergence=" << opt.out_dir << "/convergence.csv\n";
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return 1;
    }

    std::cout << "status: " << tap::to_string(res.status) << ", iterations: "
              << res.history.size() << ", F: " << tap::fmt17(res.objective)
              << ", gap: " << tap::fmt17(res.gap) << "\n";
    switch (res.status) {
        case tap::SolveStatus::converged: return 0;
        case tap::SolveStatus::iteration_cap: return 2;
        case tap::SolveStatus::diverged: return 3;
    }
    return 2;
}

int run_selfcheck() {
    using namespace tap;
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    };

    auto run_case = [&](const char* name, std::pair<Network, DemandSpec> fixture) {
        auto& [net, demand] = fixture;
        SolverConfig cfg;
        cfg.eps = 1e-6 * std::max(1.0, demand.total);
        cfg.max_iter = 250000;
        cfg.gap_every = 200;
        resolve_defaults(net, demand, cfg);
        EquilibriumResult res = solve_two_stage(net, demand, cfg);
        BruteForceResult bf = brute_force_oracle(net, demand, cfg.gamma);
        double d_err = (demand.total * res.d - bf.d).cwiseAbs().maxCoeff();
        double f_err = (res.f - bf.f).cwiseAbs().maxCoeff();
        double tol = 1e-3 * demand.total;
        check(name, d_err <= tol && f_err <= tol);
    };

    run_case("single link vs brute force", fixtures::single_link());
    run_case("parallel links vs brute force", fixtures::parallel_links());
    run_case("triangle vs brute force", fixtures::triangle());

    {
        auto [net, demand] = fixtures::parallel_links();
        SolverConfig cfg;
        cfg.eps = 1e-6;
        cfg.max_iter = 250000;
        cfg.gap_every = 500;
        resolve_defaults(net, demand, cfg);
        EquilibriumResult res = solve_fixed_demand(net, demand, demand.d_ref, cfg);
        bool ok = std::abs(res.f[0] - 2.0) < 1e-6 && std::abs(res.f[1] - 1.0) < 1e-6 &&
                  std::abs(res.t[0] - 3.0) < 1e-6 && std::abs(res.t[1] - 3.0) < 1e-6;
        check("fixed-demand analytic split (2, 1)", ok);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage traffic assignment solver (entropy distribution + Wardrop equilibrium)"};
    app.require_subcommand(1);

    Options opt;
    CLI::App* solve = app.add_subcommand("solve", "two-stage equilibrium via the dual functional");
    CLI::App* assign = app.add_subcommand("assign", "fixed-demand Wardrop assignment");
    CLI::App* baseline = app.add_subcommand("baseline", "naive two-block alternation");
    CLI::App* selfcheck =
        app.add_subcommand("selfcheck", "run the built-in small-instance oracle suite");
    add_common_flags(solve, opt);
    add_common_flags(assign, opt);
    add_common_flags(baseline, opt);
    (void)selfcheck;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) return run_mode("solve", opt);
        if (assign->parsed()) return run_mode("assign", opt);
        if (baseline->parsed()) return run_mode("baseline", opt);
        return run_selfcheck();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
