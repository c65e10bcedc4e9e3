#pragma once

#include "tap/network.hpp"
#include "tap/solver.hpp"

namespace tap {

/// Result of the desk-scale direct minimization of the two-stage primal.
struct BruteForceResult {
    Eigen::MatrixXd d;  // vehicle units over demand.zones
    FlowVector f;       // vehicle units per link
    double objective = 0.0;
    double gradient_mapping = 0.0;  // norm at the returned point
    long iterations = 0;
};

struct BruteForceConfig {
    long max_iter = 1000000;
    double gm_tol = 1e-10;
    double eps_mass = 1e-6;
    double big_multiplier = 10.0;
};

/// Enumerate all simple paths per OD pair and minimize the two-stage primal
/// objective over path flows by projected gradient with diminishing steps.
/// Refuses instances with more than 8 links or an enumeration that is not
/// desk-scale. gamma must be positive (resolve it with resolve_defaults first).
BruteForceResult brute_force_oracle(const Network& net, const DemandSpec& demand, double gamma,
                                    const BruteForceConfig& cfg = {});

/// Same machinery with the demand matrix frozen (Beckmann restriction);
/// the feasible set becomes a product of scaled simplices.
BruteForceResult brute_force_fixed_demand(const Network& net, const DemandSpec& demand,
                                          const Eigen::MatrixXd& d_vehicle, double gamma,
                                          const BruteForceConfig& cfg = {});

}  // namespace tap
