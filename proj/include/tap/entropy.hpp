#pragma once

#include <optional>

#include "tap/network.hpp"

namespace tap {

/// Dual multipliers of the marginal constraints; defined up to additive
/// constants per side.
struct Potentials {
    Eigen::VectorXd lambda;  // per origin
    Eigen::VectorXd mu;      // per destination
};

struct SinkhornResult {
    Potentials pot;
    int sweeps = 0;
    bool converged = true;
};

/// Marginals (normalized) and cost matrix after input sanitization.
struct SanitizedProblem {
    Eigen::VectorXd l;  // sums to 1
    Eigen::VectorXd w;  // sums to 1
    Eigen::MatrixXd T;  // finite on the mask
};

/// Raise zero marginal entries to eps_mass (of total), taking the mass
/// proportionally from larger entries; replace infinite costs by
/// big_multiplier * (max finite cost). Returns marginals normalized to sum 1.
SanitizedProblem sanitize(const Eigen::VectorXd& l, const Eigen::VectorXd& w,
                          Eigen::MatrixXd T, const BoolMask& mask, double eps_mass = 1e-6,
                          double big_multiplier = 10.0);

/// Alternating exact coordinate minimization of the entropy dual in the log
/// domain. l and w must be strictly positive and sum to 1. Stops when the
/// l1 marginal error of the implied demand matrix is at most tol.
SinkhornResult sinkhorn(const Eigen::MatrixXd& T, const BoolMask& mask,
                        const Eigen::VectorXd& l, const Eigen::VectorXd& w, double gamma,
                        double tol, int max_iter,
                        const std::optional<Potentials>& warm = std::nullopt);

/// Normalized demand matrix d_ij = softmax((-T_ij + lambda_i + mu_j) / gamma)
/// over the mask; entries off the mask are 0.
Eigen::MatrixXd demand_from_potentials(const Eigen::MatrixXd& T, const BoolMask& mask,
                                       const Potentials& pot, double gamma);

/// Entropy dual D(t, lambda, mu) = gamma * LSE((-T + lambda + mu) / gamma)
///                                 - <l, lambda> - <w, mu>.
double eval_entropy_dual(const Eigen::MatrixXd& T, const BoolMask& mask, const Potentials& pot,
                         double gamma, const Eigen::VectorXd& l, const Eigen::VectorXd& w);

}  // namespace tap
