#pragma once

#include <cmath>
#include <stdexcept>

namespace tap {

/// BPR parameters of a single link: tau(f) = free_flow_time * (1 + kappa * (f / capacity)^power_inv).
struct LinkParams {
    double free_flow_time = 1.0;  // t_bar, > 0
    double capacity = 1.0;        // f_bar, > 0
    double kappa = 0.15;          // >= 0; kappa == 0 means constant cost
    double power_inv = 4.0;       // exponent 1/mu, >= 1

    void validate() const {
        if (!(free_flow_time > 0.0) || !std::isfinite(free_flow_time))
            throw std::invalid_argument("LinkParams: free_flow_time must be positive");
        if (!(capacity > 0.0) || !std::isfinite(capacity))
            throw std::invalid_argument("LinkParams: capacity must be positive");
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw std::invalid_argument("LinkParams: kappa must be non-negative");
        if (!(power_inv >= 1.0) || !std::isfinite(power_inv))
            throw std::invalid_argument("LinkParams: power_inv must be >= 1");
    }

    bool constant_cost() const { return kappa == 0.0; }
};

// Slack below t_bar that is still treated as the boundary of dom sigma*.
inline constexpr double kDomainSlack = 1e-12;

/// Travel time tau(f) = t_bar * (1 + kappa * (f / f_bar)^power_inv).
inline double bpr_time(const LinkParams& p, double f) {
    if (!(f >= 0.0) || !std::isfinite(f))
        throw std::domain_error("bpr_time: flow must be finite and non-negative");
    return p.free_flow_time * (1.0 + p.kappa * std::pow(f / p.capacity, p.power_inv));
}

/// Inverse travel time: f such that bpr_time(p, f) == t. Requires kappa > 0.
inline double bpr_inverse(const LinkParams& p, double t) {
    if (p.constant_cost())
        throw std::domain_error("bpr_inverse: constant-cost link has no inverse");
    const double tb = p.free_flow_time;
    if (!(t >= tb * (1.0 - kDomainSlack)) || !std::isfinite(t))
        throw std::domain_error("bpr_inverse: time below free-flow time");
    const double ratio = t / tb - 1.0;
    if (ratio <= 0.0) return 0.0;
    return p.capacity * std::pow(ratio / p.kappa, 1.0 / p.power_inv);
}

/// Beckmann integrand primitive sigma(f) = integral_0^f tau(z) dz.
inline double sigma(const LinkParams& p, double f) {
    if (!(f >= 0.0) || !std::isfinite(f))
        throw std::domain_error("sigma: flow must be finite and non-negative");
    const double q = 1.0 + p.power_inv;
    return p.free_flow_time * f +
           p.free_flow_time * p.kappa * p.capacity / q * std::pow(f / p.capacity, q);
}

/// Convex conjugate sigma*(t) = max_{f >= 0} { f t - sigma(f) }; zero for constant-cost links.
inline double sigma_conj(const LinkParams& p, double t) {
    const double tb = p.free_flow_time;
    if (!(t >= tb * (1.0 - kDomainSlack)) || !std::isfinite(t))
        throw std::domain_error("sigma_conj: time below free-flow time");
    if (p.constant_cost()) return 0.0;
    const double dt = t - tb;
    if (dt <= 0.0) return 0.0;
    const double mu = 1.0 / p.power_inv;
    return p.capacity * std::pow(dt, mu + 1.0) /
           ((mu + 1.0) * std::pow(p.kappa * tb, mu));
}

}  // namespace tap
