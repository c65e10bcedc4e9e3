#include "tap/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tap/shortest_paths.hpp"

namespace tap {

namespace {

struct PathSet {
    std::vector<int> pair_origin;                // per pair: zone index i
    std::vector<int> pair_dest;                  // per pair: zone index j
    std::vector<std::vector<std::vector<int>>> paths;  // per pair: paths as link lists
    std::vector<int> var_pair;                   // per variable: pair index
    std::vector<const std::vector<int>*> var_path;  // nullptr for virtual paths
    double big_cost = 0.0;
};

void dfs_paths(const Network& net, int node, int dest, int first_thru,
               std::vector<char>& visited, std::vector<int>& stack,
               std::vector<std::vector<int>>& out) {
    if (node == dest) {
        out.push_back(stack);
        return;
    }
    for (int e = 0; e < net.link_count(); ++e) {
        if (net.tail[e] != node) continue;
        int v = net.head[e];
        if (visited[v]) continue;
        // Centroids cannot be intermediate nodes.
        if (v != dest && v + 1 < first_thru) continue;
        visited[v] = 1;
        stack.push_back(e);
        dfs_paths(net, v, dest, first_thru, visited, stack, out);
        stack.pop_back();
        visited[v] = 0;
    }
}

PathSet enumerate_paths(const Network& net, const DemandSpec& demand,
                        const BruteForceConfig& cfg) {
    if (net.link_count() > 8)
        throw std::invalid_argument("brute_force: instance too large (more than 8 links)");

    PathSet ps;
    const int z = demand.zone_dim();
    std::size_t total_paths = 0;
    for (int i = 0; i < z; ++i)
        for (int j = 0; j < z; ++j) {
            if (!demand.od_mask(i, j)) continue;
            ps.pair_origin.push_back(i);
            ps.pair_dest.push_back(j);
            std::vector<std::vector<int>> paths;
            std::vector<char> visited(net.node_count, 0);
            std::vector<int> stack;
            visited[demand.zones[i]] = 1;
            dfs_paths(net, demand.zones[i], demand.zones[j], net.first_thru_node, visited,
                      stack, paths);
            total_paths += std::max<std::size_t>(paths.size(), 1);
            ps.paths.push_back(std::move(paths));
        }
    if (ps.pair_origin.size() > 12 || total_paths > 64)
        throw std::invalid_argument("brute_force: instance too large (path enumeration)");

    // Large finite cost for pairs without any path, taken from free-flow costs.
    const CostVector tbar = net.free_flow_times();
    Eigen::MatrixXd T0 = cost_matrix(net, tbar, demand);
    double max_finite = 0.0;
    for (int i = 0; i < z; ++i)
        for (int j = 0; j < z; ++j)
            if (demand.od_mask(i, j) && std::isfinite(T0(i, j)))
                max_finite = std::max(max_finite, T0(i, j));
    ps.big_cost = cfg.big_multiplier * max_finite;

    for (std::size_t q = 0; q < ps.paths.size(); ++q) {
        if (ps.paths[q].empty()) {
            ps.var_pair.push_back(static_cast<int>(q));
            ps.var_path.push_back(nullptr);
        } else {
            for (const auto& p : ps.paths[q]) {
                ps.var_pair.push_back(static_cast<int>(q));
                ps.var_path.push_back(&p);
            }
        }
    }
    return ps;
}

// Objective and gradient in vehicle units over normalized path-mass x.
struct Objective {
    const Network& net;
    const PathSet& ps;
    double gamma;
    double lambda_total;
    bool include_entropy;

    double value(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const int nvar = static_cast<int>(x.size());
        const int npair = static_cast<int>(ps.pair_origin.size());
        FlowVector f = FlowVector::Zero(net.link_count());
        Eigen::VectorXd d = Eigen::VectorXd::Zero(npair);
        double virtual_cost = 0.0;
        for (int p = 0; p < nvar; ++p) {
            d[ps.var_pair[p]] += x[p];
            if (ps.var_path[p]) {
                for (int e : *ps.var_path[p]) f[e] += lambda_total * x[p];
            } else {
                virtual_cost += lambda_total * ps.big_cost * x[p];
            }
        }
        double val = virtual_cost;
        for (int e = 0; e < net.link_count(); ++e) val += sigma(net.links[e], f[e]);
        if (include_entropy) {
            for (int q = 0; q < npair; ++q)
                if (d[q] > 0.0) val += gamma * lambda_total * d[q] * std::log(d[q]);
        }
        if (grad) {
            grad->setZero(nvar);
            CostVector tau(net.link_count());
            for (int e = 0; e < net.link_count(); ++e) tau[e] = bpr_time(net.links[e], f[e]);
            for (int p = 0; p < nvar; ++p) {
                double g = 0.0;
                if (ps.var_path[p]) {
                    for (int e : *ps.var_path[p]) g += tau[e];
                } else {
                    g = ps.big_cost;
                }
                if (include_entropy)
                    g += gamma * (std::log(std::max(d[ps.var_pair[p]], 1e-300)) + 1.0);
                (*grad)[p] = lambda_total * g;
            }
        }
        return val;
    }
};

// Exact Euclidean projection onto a scaled simplex {v >= 0, sum v = s}.
Eigen::VectorXd project_simplex(Eigen::VectorXd v, double s) {
    const int n = static_cast<int>(v.size());
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0, theta = 0.0;
    int rho = 0;
    for (int i = 0; i < n; ++i) {
        cssv += u[i];
        double t = (cssv - s) / (i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    for (int i = 0; i < n; ++i) v[i] = std::max(v[i] - theta, 0.0);
    return v;
}

// Projection onto {x >= 0} cap {Ax = b} by Dykstra's alternating scheme.
class PolytopeProjector {
  public:
    PolytopeProjector(Eigen::MatrixXd a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {
        Eigen::MatrixXd aat = a_ * a_.transpose();
        cod_.compute(aat);
    }

    Eigen::VectorXd affine(const Eigen::VectorXd& v) const {
        return v - a_.transpose() * cod_.solve(a_ * v - b_);
    }

    Eigen::VectorXd operator()(Eigen::VectorXd x) const {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
        Eigen::VectorXd q = Eigen::VectorXd::Zero(x.size());
        for (int sweep = 0; sweep < 1000; ++sweep) {
            Eigen::VectorXd y = affine(x + p);
            p = x + p - y;
            Eigen::VectorXd xn = (y + q).cwiseMax(0.0);
            q = y + q - xn;
            if ((xn - x).lpNorm<Eigen::Infinity>() < 1e-14 && sweep > 2) return xn;
            x = xn;
        }
        return x;
    }

  private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
};

BruteForceResult run_pg(const Network& net, const DemandSpec& demand, const PathSet& ps,
                        const Objective& obj,
                        const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project,
                        const BruteForceConfig& cfg) {
    const int nvar = static_cast<int>(ps.var_pair.size());
    Eigen::VectorXd x = project(Eigen::VectorXd::Constant(nvar, 1.0 / nvar));

    Eigen::VectorXd grad(nvar);
    obj.value(x, &grad);
    const double s0 = 0.25 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());

    BruteForceResult res;
    double gm = std::numeric_limits<double>::infinity();
    long k = 0;
    for (; k < cfg.max_iter; ++k) {
        obj.value(x, &grad);
        if (k % 64 == 0) {
            Eigen::VectorXd probe = project(x - s0 * grad);
            gm = (x - probe).norm() / s0;
            if (gm <= cfg.gm_tol) break;
        }
        const double step = s0 / std::sqrt(double(k + 1));
        x = project(x - step * grad);
    }
    res.iterations = k;
    res.gradient_mapping = gm;

    const int npair = static_cast<int>(ps.pair_origin.size());
    const int z = demand.zone_dim();
    res.d = Eigen::MatrixXd::Zero(z, z);
    res.f = FlowVector::Zero(net.link_count());
    for (int p = 0; p < nvar; ++p) {
        int q = ps.var_pair[p];
        res.d(ps.pair_origin[q], ps.pair_dest[q]) += obj.lambda_total * x[p];
        if (ps.var_path[p])
            for (int e : *ps.var_path[p]) res.f[e] += obj.lambda_total * x[p];
    }
    (void)npair;
    res.objective = obj.value(x, nullptr);
    return res;
}

}  // namespace

BruteForceResult brute_force_oracle(const Network& net, const DemandSpec& demand, double gamma,
                                    const BruteForceConfig& cfg) {
    if (!(gamma > 0.0)) throw std::invalid_argument("brute_force: gamma must be positive");
    PathSet ps = enumerate_paths(net, demand, cfg);
    const int nvar = static_cast<int>(ps.var_pair.size());
    const int npair = static_cast<int>(ps.pair_origin.size());
    const int z = demand.zone_dim();

    // Sanitized, normalized marginals (same treatment as the dual solver).
    SanitizedProblem marg = sanitize(demand.l, demand.w, Eigen::MatrixXd::Zero(z, z),
                                     demand.od_mask, cfg.eps_mass, cfg.big_multiplier);

    // Marginal constraints over path masses.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * z, nvar);
    Eigen::VectorXd b(2 * z);
    for (int p = 0; p < nvar; ++p) {
        int q = ps.var_pair[p];
        a(ps.pair_origin[q], p) = 1.0;
        a(z + ps.pair_dest[q], p) = 1.0;
    }
    b.head(z) = marg.l;
    b.tail(z) = marg.w;
    (void)npair;

    PolytopeProjector proj(std::move(a), std::move(b));
    Objective obj{net, ps, gamma, demand.total, true};
    return run_pg(net, demand, ps, obj, [&](const Eigen::VectorXd& v) { return proj(v); }, cfg);
}

BruteForceResult brute_force_fixed_demand(const Network& net, const DemandSpec& demand,
                                          const Eigen::MatrixXd& d_vehicle, double gamma,
                                          const BruteForceConfig& cfg) {
    PathSet ps = enumerate_paths(net, demand, cfg);
    const int nvar = static_cast<int>(ps.var_pair.size());
    const int npair = static_cast<int>(ps.pair_origin.size());

    double total = 0.0;
    for (int q = 0; q < npair; ++q)
        total += d_vehicle(ps.pair_origin[q], ps.pair_dest[q]);
    if (!(total > 0.0)) throw std::invalid_argument("brute_force: demand sums to zero");

    // Per-pair scaled simplices over the normalized masses.
    std::vector<std::vector<int>> pair_vars(npair);
    for (int p = 0; p < nvar; ++p) pair_vars[ps.var_pair[p]].push_back(p);

    auto project = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(v.size());
        for (int q = 0; q < npair; ++q) {
            const auto& vars = pair_vars[q];
            Eigen::VectorXd sub(vars.size());
            for (std::size_t i = 0; i < vars.size(); ++i) sub[i] = v[vars[i]];
            sub = project_simplex(sub,
                                  d_vehicle(ps.pair_origin[q], ps.pair_dest[q]) / total);
            for (std::size_t i = 0; i < vars.size(); ++i) out[vars[i]] = sub[i];
        }
        return out;
    };

    Objective obj{net, ps, gamma > 0.0 ? gamma : 1.0, total, false};
    return run_pg(net, demand, ps, obj, project, cfg);
}

}  // namespace tap
