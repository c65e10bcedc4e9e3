#include "tap/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace tap {

namespace {

Eigen::Array<bool, Eigen::Dynamic, 1> pinned_links(const Network& net) {
    Eigen::Array<bool, Eigen::Dynamic, 1> pinned(net.link_count());
    for (int e = 0; e < net.link_count(); ++e) pinned[e] = net.links[e].constant_cost();
    return pinned;
}

double now_ms(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::iteration_cap: return "iteration_cap";
        case SolveStatus::diverged: return "diverged";
    }
    return "unknown";
}

void resolve_defaults(const Network& net, const DemandSpec& demand, SolverConfig& cfg) {
    const CostVector tbar = net.free_flow_times();
    if (cfg.gamma <= 0.0) {
        Eigen::MatrixXd T0 = cost_matrix(net, tbar, demand);
        SanitizedProblem san =
            sanitize(demand.l, demand.w, T0, demand.od_mask, cfg.eps_mass, cfg.big_multiplier);
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < T0.rows(); ++i)
            for (int j = 0; j < T0.cols(); ++j)
                if (demand.od_mask(i, j)) {
                    sum += san.T(i, j);
                    ++count;
                }
        cfg.gamma = 0.05 * sum / std::max(count, 1);
        if (!(cfg.gamma > 0.0)) cfg.gamma = 1.0;
    }
    if (cfg.eps <= 0.0) cfg.eps = 1e-3 * demand.total * tbar.mean();
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

DualOracle::DualOracle(const Network& net, const DemandSpec& demand, double gamma,
                       const SolverConfig& cfg)
    : net_(net), demand_(demand), gamma_(gamma), cfg_(cfg), lambda_total_(demand.total) {
    SanitizedProblem san =
        sanitize(demand.l, demand.w, Eigen::MatrixXd::Zero(demand.zone_dim(), demand.zone_dim()),
                 demand.od_mask, cfg.eps_mass, cfg.big_multiplier);
    l_ = san.l;
    w_ = san.w;

    // Unreachable pairs ride a virtual path of fixed cost; freezing the cost
    // keeps the functional smooth and the gradient consistent with the value.
    Eigen::MatrixXd T0 = cost_matrix(net, net.free_flow_times(), demand);
    double max_finite = 0.0;
    for (int i = 0; i < T0.rows(); ++i)
        for (int j = 0; j < T0.cols(); ++j)
            if (demand.od_mask(i, j) && std::isfinite(T0(i, j)))
                max_finite = std::max(max_finite, T0(i, j));
    big_cost_ = cfg.big_multiplier * std::max(max_finite, 1.0);
}

void DualOracle::set_fixed_demand(const Eigen::MatrixXd& d_vehicle) {
    double total = 0.0;
    for (int i = 0; i < d_vehicle.rows(); ++i)
        for (int j = 0; j < d_vehicle.cols(); ++j)
            if (demand_.od_mask(i, j)) total += d_vehicle(i, j);
    if (!(total > 0.0)) throw std::invalid_argument("set_fixed_demand: demand sums to zero");
    lambda_total_ = total;
    fixed_d_ = d_vehicle / total;
}

OracleEval DualOracle::eval(const CostVector& t, bool need_grad, double inner_tol) {
    OracleEval out;
    std::vector<ShortestPathTree> trees;
    Eigen::MatrixXd T_raw = cost_matrix(net_, t, demand_, &trees);

    out.T = T_raw;
    for (int i = 0; i < out.T.rows(); ++i)
        for (int j = 0; j < out.T.cols(); ++j)
            if (demand_.od_mask(i, j) && !std::isfinite(out.T(i, j)))
                out.T(i, j) = big_cost_;

    double separable = 0.0;
    for (int e = 0; e < net_.link_count(); ++e)
        separable += sigma_conj(net_.links[e], t[e]);

    if (fixed_d_) {
        out.d = *fixed_d_;
        double transport = 0.0;
        for (int i = 0; i < out.T.rows(); ++i)
            for (int j = 0; j < out.T.cols(); ++j)
                if (demand_.od_mask(i, j)) transport += out.d(i, j) * out.T(i, j);
        out.value = -lambda_total_ * transport + separable;
    } else {
        SinkhornResult sk = sinkhorn(out.T, demand_.od_mask, l_, w_, gamma_, inner_tol,
                                     cfg_.sinkhorn_max_iter, warm_);
        warm_ = sk.pot;
        out.pot = sk.pot;
        out.sinkhorn_sweeps = sk.sweeps;
        out.inexact = !sk.converged;
        out.d = demand_from_potentials(out.T, demand_.od_mask, sk.pot, gamma_);
        out.value = lambda_total_ *
                        eval_entropy_dual(out.T, demand_.od_mask, sk.pot, gamma_, l_, w_) +
                    separable;
    }
    if (!std::isfinite(out.value))
        throw std::runtime_error("oracle: non-finite objective value");

    if (need_grad) {
        // demand on unreachable pairs stays on the virtual path
        Eigen::MatrixXd d_routed = out.d;
        for (int i = 0; i < d_routed.rows(); ++i)
            for (int j = 0; j < d_routed.cols(); ++j)
                if (demand_.od_mask(i, j) && !std::isfinite(T_raw(i, j))) d_routed(i, j) = 0.0;
        Eigen::VectorXd inv_flows = Eigen::VectorXd::Zero(net_.link_count());
        for (int e = 0; e < net_.link_count(); ++e)
            if (!net_.links[e].constant_cost()) inv_flows[e] = bpr_inverse(net_.links[e], t[e]);
        out.aon = aon_assign_split(net_, trees, demand_, lambda_total_ * d_routed, t, inv_flows,
                                   cfg_.tie_tol);
        out.grad = Eigen::VectorXd::Zero(net_.link_count());
        for (int e = 0; e < net_.link_count(); ++e) {
            if (net_.links[e].constant_cost()) continue;  // pinned coordinate
            out.grad[e] = inv_flows[e] - out.aon[e];
        }
        if (!out.grad.allFinite()) throw std::runtime_error("oracle: non-finite gradient");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Duality gap
// ---------------------------------------------------------------------------

double duality_gap(const CostVector& t_k, const CostVector& t0, const Eigen::VectorXd& grad,
                   const CostVector& lower) {
    const double radius = 2.0 * (t0 - t_k).norm();
    if (radius == 0.0) return 0.0;
    const double gnorm = grad.norm();
    if (gnorm == 0.0) return 0.0;

    auto moved = [&](double s) { return (t_k - s * grad).cwiseMax(lower); };
    auto dist = [&](double s) { return (moved(s) - t_k).norm(); };

    // dist(s) is non-decreasing; find the step putting t(s) on the sphere.
    double s_hi = radius / gnorm;
    while (dist(s_hi) < radius && s_hi < 1e30) s_hi *= 2.0;
    double s = s_hi;
    if (dist(s_hi) >= radius) {
        double s_lo = 0.0;
        while ((s_hi - s_lo) > 1e-12 * s_hi) {
            double mid = 0.5 * (s_lo + s_hi);
            (dist(mid) < radius ? s_lo : s_hi) = mid;
        }
        s = 0.5 * (s_lo + s_hi);
    }
    return grad.dot(t_k - moved(s));
}

// ---------------------------------------------------------------------------
// Universal method of similar triangles
// ---------------------------------------------------------------------------

EquilibriumResult umst_minimize(const Oracle& oracle, const CostVector& t0,
                                const CostVector& lower,
                                const Eigen::Array<bool, Eigen::Dynamic, 1>& pinned,
                                const SolverConfig& cfg, double eps) {
    const auto start = std::chrono::steady_clock::now();

    auto project = [&](CostVector v) {
        v = v.cwiseMax(lower);
        for (int e = 0; e < v.size(); ++e)
            if (pinned[e]) v[e] = lower[e];
        return v;
    };

    EquilibriumResult res;
    CostVector x = project(t0);
    CostVector u = x;
    double big_a = 0.0;
    double trial_l = std::max(cfg.initial_smoothness, 1e-12);

    auto inner_tol = [&](int k) {
        return std::max(cfg.inner_tol_min, cfg.inner_tol_c0 / double((k + 1) * (k + 1)));
    };

    OracleEval ex = oracle(x, false, inner_tol(0));
    double accepted_l = trial_l;

    for (int k = 0; k < cfg.max_iter; ++k) {
        const double tol_k = inner_tol(k);
        int sweeps = 0;
        CostVector y, u_next, x_next;
        OracleEval ey, ex_next;
        double alpha = 0.0, big_a_next = 0.0;

        bool accepted = false;
        for (int doubling = 0; doubling < 200; ++doubling) {
            alpha = (1.0 + std::sqrt(1.0 + 4.0 * trial_l * big_a)) / (2.0 * trial_l);
            big_a_next = big_a + alpha;
            y = (alpha * u + big_a * x) / big_a_next;
            y = project(y);
            ey = oracle(y, true, tol_k);
            u_next = project(u - alpha * ey.grad);
            x_next = (alpha * u_next + big_a * x) / big_a_next;
            ex_next = oracle(x_next, false, tol_k);
            sweeps += ey.sinkhorn_sweeps + ex_next.sinkhorn_sweeps;

            const double rhs = ey.value + ey.grad.dot(x_next - y) +
                               0.5 * trial_l * (x_next - y).squaredNorm() +
                               eps * alpha / (2.0 * big_a_next) +
                               1e-12 * (1.0 + std::abs(ey.value));
            if (ex_next.value <= rhs) {
                accepted = true;
                break;
            }
            trial_l *= 2.0;
            if (trial_l > 1e60) throw std::runtime_error("umst: smoothness estimate diverged");
        }
        if (!accepted) throw std::runtime_error("umst: backtracking failed");

        x = x_next;
        u = u_next;
        big_a = big_a_next;
        ex = ex_next;
        accepted_l = trial_l;
        trial_l = std::max(trial_l / 2.0, 1e-12);

        ConvergenceRecord rec;
        rec.iter = k + 1;
        rec.objective = ex.value;
        rec.smoothness = accepted_l;
        rec.sinkhorn_sweeps = sweeps;

        const bool last = (k + 1 == cfg.max_iter);
        if ((k + 1) % cfg.gap_every == 0 || last) {
            OracleEval eg = oracle(x, true, tol_k);
            rec.sinkhorn_sweeps += eg.sinkhorn_sweeps;
            rec.gap = duality_gap(x, t0, eg.grad, lower);
            res.gap = rec.gap;
            res.pot = eg.pot;
            res.d = eg.d;
            res.f = eg.aon;
            ex = eg;
            if (rec.gap <= eps) {
                rec.elapsed_ms = now_ms(start);
                res.history.push_back(rec);
                res.status = SolveStatus::converged;
                break;
            }
        }
        rec.elapsed_ms = now_ms(start);
        res.history.push_back(rec);
    }

    res.t = x;
    res.objective = ex.value;
    if (res.d.size() == 0) {
        OracleEval eg = oracle(x, true, inner_tol(cfg.max_iter));
        res.gap = duality_gap(x, t0, eg.grad, lower);
        res.pot = eg.pot;
        res.d = eg.d;
        res.f = eg.aon;
        res.objective = eg.value;
        if (res.gap <= eps) res.status = SolveStatus::converged;
    }
    res.eps_used = eps;
    return res;
}

// ---------------------------------------------------------------------------
// Solve modes
// ---------------------------------------------------------------------------

namespace {

// Equilibrium flows: tau^{-1}(t) on congestible links, AON flows where the
// cost is constant.
FlowVector recover_flows(const Network& net, const CostVector& t, const FlowVector& aon) {
    FlowVector f(net.link_count());
    for (int e = 0; e < net.link_count(); ++e)
        f[e] = net.links[e].constant_cost() ? aon[e] : bpr_inverse(net.links[e], t[e]);
    return f;
}

EquilibriumResult run_dual_solve(const Network& net, const DemandSpec& demand,
                                 DualOracle& oracle, const SolverConfig& cfg) {
    const CostVector tbar = net.free_flow_times();
    Oracle fn = [&](const CostVector& t, bool need_grad, double tol) {
        return oracle.eval(t, need_grad, tol);
    };
    EquilibriumResult res = umst_minimize(fn, tbar, tbar, pinned_links(net), cfg, cfg.eps);
    res.f = recover_flows(net, res.t, res.f);
    res.gamma_used = cfg.gamma;
    res.total_demand = oracle.total_demand();
    return res;
}

}  // namespace

EquilibriumResult solve_two_stage(const Network& net, const DemandSpec& demand,
                                  const SolverConfig& cfg_in) {
    SolverConfig cfg = cfg_in;
    resolve_defaults(net, demand, cfg);
    DualOracle oracle(net, demand, cfg.gamma, cfg);
    return run_dual_solve(net, demand, oracle, cfg);
}

EquilibriumResult solve_fixed_demand(const Network& net, const DemandSpec& demand,
                                     const Eigen::MatrixXd& d_vehicle,
                                     const SolverConfig& cfg_in) {
    SolverConfig cfg = cfg_in;
    resolve_defaults(net, demand, cfg);
    DualOracle oracle(net, demand, cfg.gamma, cfg);
    oracle.set_fixed_demand(d_vehicle);
    return run_dual_solve(net, demand, oracle, cfg);
}

EquilibriumResult baseline_alternation(const Network& net, const DemandSpec& demand,
                                       const SolverConfig& cfg_in) {
    const auto start = std::chrono::steady_clock::now();
    SolverConfig cfg = cfg_in;
    resolve_defaults(net, demand, cfg);

    SanitizedProblem marg =
        sanitize(demand.l, demand.w, Eigen::MatrixXd::Zero(demand.zone_dim(), demand.zone_dim()),
                 demand.od_mask, cfg.eps_mass, cfg.big_multiplier);

    EquilibriumResult res;
    res.gamma_used = cfg.gamma;
    res.eps_used = cfg.eps;
    res.total_demand = demand.total;
    res.status = SolveStatus::iteration_cap;

    CostVector t = net.free_flow_times();
    Eigen::MatrixXd d_prev;
    FlowVector f_prev;
    std::optional<Potentials> warm;
    std::vector<double> d_changes;

    SolverConfig inner_cfg = cfg;
    inner_cfg.max_iter = cfg.baseline_inner_max_iter;
    inner_cfg.gap_every = 10;

    for (int pass = 1; pass <= cfg.baseline_max_passes; ++pass) {
        // Distribution block.
        Eigen::MatrixXd T_raw = cost_matrix(net, t, demand);
        SanitizedProblem san =
            sanitize(marg.l, marg.w, T_raw, demand.od_mask, cfg.eps_mass, cfg.big_multiplier);
        SinkhornResult sk = sinkhorn(san.T, demand.od_mask, marg.l, marg.w, cfg.gamma,
                                     cfg.inner_tol_min, cfg.sinkhorn_max_iter, warm);
        warm = sk.pot;
        Eigen::MatrixXd d = demand_from_potentials(san.T, demand.od_mask, sk.pot, cfg.gamma);

        // Assignment block.
        EquilibriumResult fd = solve_fixed_demand(net, demand, demand.total * d, inner_cfg);
        t = fd.t;

        double d_change = d_prev.size() ? (d - d_prev).cwiseAbs().sum()
                                        : std::numeric_limits<double>::infinity();
        double f_change = f_prev.size()
                              ? (fd.f - f_prev).norm() / std::max(1.0, f_prev.norm())
                              : std::numeric_limits<double>::infinity();
        d_prev = d;
        f_prev = fd.f;
        d_changes.push_back(d_change);

        ConvergenceRecord rec;
        rec.iter = pass;
        rec.objective = primal_value(net, fd.f, d, demand.od_mask, cfg.gamma, demand.total);
        rec.gap = d_change;
        rec.smoothness = f_change;
        rec.sinkhorn_sweeps = sk.sweeps;
        rec.elapsed_ms = now_ms(start);
        res.history.push_back(rec);

        res.t = t;
        res.f = fd.f;
        res.d = d;
        res.pot = sk.pot;
        res.objective = rec.objective;
        res.gap = d_change;

        if (d_change <= cfg.baseline_tol && f_change <= cfg.baseline_tol) {
            res.status = SolveStatus::converged;
            break;
        }
        // No improvement of the d-change over a 5-pass window.
        const std::size_t n = d_changes.size();
        if (n >= 6 && d_changes[n - 1] >= d_changes[n - 6]) {
            res.status = SolveStatus::diverged;
            break;
        }
    }
    return res;
}

double primal_value(const Network& net, const FlowVector& f, const Eigen::MatrixXd& d,
                    const BoolMask& mask, double gamma, double lambda_total) {
    double beckmann = 0.0;
    for (int e = 0; e < net.link_count(); ++e) beckmann += sigma(net.links[e], f[e]);
    double entropy = 0.0;
    for (int i = 0; i < d.rows(); ++i)
        for (int j = 0; j < d.cols(); ++j)
            if (mask(i, j) && d(i, j) > 0.0) entropy += d(i, j) * std::log(d(i, j));
    return beckmann + gamma * lambda_total * entropy;
}

}  // namespace tap
