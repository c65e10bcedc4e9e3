#pragma once

#include <functional>

#include "tap/convergence.hpp"
#include "tap/entropy.hpp"
#include "tap/network.hpp"
#include "tap/shortest_paths.hpp"

namespace tap {

enum class SolveStatus { converged, iteration_cap, diverged };

const char* to_string(SolveStatus s);

struct SolverConfig {
    double gamma = 0.0;  // <= 0: resolve to 0.05 * mean OD cost at free flow
    double eps = 0.0;    // <= 0: resolve to 1e-3 * Lambda * mean free-flow time
    int max_iter = 3000;
    double initial_smoothness = 1.0;  // L0
    int gap_every = 10;               // duality-gap evaluation period

    // Inner (Sinkhorn) tolerance schedule: max(tol_min, c0 / (k + 1)^2).
    double inner_tol_min = 1e-9;
    double inner_tol_c0 = 1e-3;
    int sinkhorn_max_iter = 50000;

    // Input sanitization.
    double eps_mass = 1e-6;
    double big_multiplier = 10.0;

    // Relative slack band for tie-splitting in the assignment subgradient.
    double tie_tol = 1e-4;

    // Baseline alternation.
    int baseline_max_passes = 50;
    double baseline_tol = 1e-6;
    int baseline_inner_max_iter = 600;
};

struct EquilibriumResult {
    CostVector t;
    FlowVector f;
    Eigen::MatrixXd d;  // normalized, sums to 1 over the OD mask
    Potentials pot;
    ConvergenceHistory history;
    SolveStatus status = SolveStatus::iteration_cap;
    double objective = 0.0;
    double gap = std::numeric_limits<double>::quiet_NaN();
    double gamma_used = 0.0;
    double eps_used = 0.0;
    double total_demand = 0.0;  // Lambda
};

/// One evaluation of the dual functional and (optionally) its gradient.
struct OracleEval {
    double value = 0.0;
    Eigen::VectorXd grad;  // filled when requested
    FlowVector aon;        // all-or-nothing flows at this point (with gradient)
    Eigen::MatrixXd d;     // normalized demand used at this point
    Eigen::MatrixXd T;     // shortest-path costs (sanitized)
    Potentials pot;
    int sinkhorn_sweeps = 0;
    bool inexact = false;
};

using Oracle = std::function<OracleEval(const CostVector& t, bool need_grad, double inner_tol)>;

/// Dual functional F(t) = Lambda * D(t, lambda(t), mu(t)) + sum sigma*_e(t_e)
/// with gradient tau^{-1}(t) - AON(Lambda d). Holds warm-started potentials
/// across calls. When a fixed demand matrix is set, the entropy block is
/// replaced by the frozen demand (Beckmann dual).
class DualOracle {
  public:
    DualOracle(const Network& net, const DemandSpec& demand, double gamma,
               const SolverConfig& cfg);

    /// Freeze the demand matrix (vehicle units over demand.zones).
    void set_fixed_demand(const Eigen::MatrixXd& d_vehicle);

    OracleEval eval(const CostVector& t, bool need_grad, double inner_tol);

    const Eigen::VectorXd& normalized_l() const { return l_; }
    const Eigen::VectorXd& normalized_w() const { return w_; }
    double total_demand() const { return lambda_total_; }

  private:
    const Network& net_;
    const DemandSpec& demand_;
    double gamma_;
    SolverConfig cfg_;
    double lambda_total_;
    double big_cost_ = 1.0;  // fixed cost of the virtual path for unreachable pairs
    Eigen::VectorXd l_, w_;  // sanitized, normalized marginals
    std::optional<Potentials> warm_;
    std::optional<Eigen::MatrixXd> fixed_d_;  // normalized
};

/// Universal accelerated method of similar triangles on min F(t) over
/// t >= lower (coordinates with pinned[e] stay at lower[e]).
EquilibriumResult umst_minimize(const Oracle& oracle, const CostVector& t0,
                                const CostVector& lower,
                                const Eigen::Array<bool, Eigen::Dynamic, 1>& pinned,
                                const SolverConfig& cfg, double eps);

/// Duality-gap estimate: max over { ||t - t_k||_2 <= 2 ||t0 - t_k||_2, t >= lower }
/// of <grad, t_k - t>.
double duality_gap(const CostVector& t_k, const CostVector& t0, const Eigen::VectorXd& grad,
                   const CostVector& lower);

/// Two-stage equilibrium: entropy trip distribution + Wardrop assignment,
/// solved jointly through the dual functional.
EquilibriumResult solve_two_stage(const Network& net, const DemandSpec& demand,
                                  const SolverConfig& cfg);

/// Wardrop equilibrium for a fixed trip matrix (vehicle units).
EquilibriumResult solve_fixed_demand(const Network& net, const DemandSpec& demand,
                                     const Eigen::MatrixXd& d_vehicle, const SolverConfig& cfg);

/// Naive two-block alternation: distribution then assignment, repeated.
EquilibriumResult baseline_alternation(const Network& net, const DemandSpec& demand,
                                       const SolverConfig& cfg);

/// Primal objective: sum_e sigma_e(f_e) + gamma * Lambda * sum d ln d.
double primal_value(const Network& net, const FlowVector& f, const Eigen::MatrixXd& d,
                    const BoolMask& mask, double gamma, double lambda_total);

/// Resolve gamma/eps defaults against an instance (free-flow costs).
void resolve_defaults(const Network& net, const DemandSpec& demand, SolverConfig& cfg);

}  // namespace tap
