#include "tap/entropy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stable log-sum-exp of z + shift over masked entries of one column/row.
// Entries may be -inf; returns -inf when nothing is masked.
double lse(const Eigen::ArrayXd& z) {
    double m = -kInf;
    for (int i = 0; i < z.size(); ++i) m = std::max(m, z[i]);
    if (m == -kInf) return -kInf;
    double s = 0.0;
    for (int i = 0; i < z.size(); ++i)
        if (z[i] != -kInf) s += std::exp(z[i] - m);
    return m + std::log(s);
}

// Logit matrix (-T + lambda_i + mu_j) / gamma, -inf off the mask.
Eigen::ArrayXXd logits(const Eigen::MatrixXd& T, const BoolMask& mask, const Potentials& pot,
                       double gamma) {
    Eigen::ArrayXXd z = Eigen::ArrayXXd::Constant(T.rows(), T.cols(), -kInf);
    for (int i = 0; i < T.rows(); ++i)
        for (int j = 0; j < T.cols(); ++j)
            if (mask(i, j)) z(i, j) = (-T(i, j) + pot.lambda[i] + pot.mu[j]) / gamma;
    return z;
}

}  // namespace

SanitizedProblem sanitize(const Eigen::VectorXd& l, const Eigen::VectorXd& w,
                          Eigen::MatrixXd T, const BoolMask& mask, double eps_mass,
                          double big_multiplier) {
    auto fix_zeros = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        const double total = v.sum();
        if (!(total > 0.0)) throw std::invalid_argument("sanitize: marginal sums to zero");
        const double eps = eps_mass * total;
        int zeros = 0;
        for (int i = 0; i < v.size(); ++i) {
            if (v[i] < 0.0) throw std::invalid_argument("sanitize: negative marginal entry");
            if (v[i] == 0.0) ++zeros;
        }
        Eigen::VectorXd out = v;
        if (zeros > 0) {
            const double scale = 1.0 - zeros * eps / total;
            for (int i = 0; i < v.size(); ++i) out[i] = v[i] == 0.0 ? eps : v[i] * scale;
        }
        return out / total;
    };

    SanitizedProblem p;
    p.l = fix_zeros(l);
    p.w = fix_zeros(w);

    double max_finite = 0.0;
    bool any_inf = false;
    for (int i = 0; i < T.rows(); ++i)
        for (int j = 0; j < T.cols(); ++j) {
            if (!mask(i, j)) continue;
            if (std::isfinite(T(i, j)))
                max_finite = std::max(max_finite, T(i, j));
            else
                any_inf = true;
        }
    if (any_inf) {
        const double big = big_multiplier * max_finite;
        for (int i = 0; i < T.rows(); ++i)
            for (int j = 0; j < T.cols(); ++j)
                if (mask(i, j) && !std::isfinite(T(i, j))) T(i, j) = big;
    }
    p.T = std::move(T);
    return p;
}

SinkhornResult sinkhorn(const Eigen::MatrixXd& T, const BoolMask& mask,
                        const Eigen::VectorXd& l, const Eigen::VectorXd& w, double gamma,
                        double tol, int max_iter, const std::optional<Potentials>& warm) {
    const int no = static_cast<int>(T.rows());
    const int nd = static_cast<int>(T.cols());
    if (!(gamma > 0.0)) throw std::invalid_argument("sinkhorn: gamma must be positive");
    for (int i = 0; i < no; ++i)
        if (!(l[i] > 0.0)) throw std::invalid_argument("sinkhorn: l must be strictly positive");
    for (int j = 0; j < nd; ++j)
        if (!(w[j] > 0.0)) throw std::invalid_argument("sinkhorn: w must be strictly positive");

    SinkhornResult res;
    res.pot.lambda = warm ? warm->lambda : Eigen::VectorXd::Zero(no);
    res.pot.mu = warm ? warm->mu : Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd& lambda = res.pot.lambda;
    Eigen::VectorXd& mu = res.pot.mu;

    Eigen::ArrayXd col(no), row(nd);
    for (res.sweeps = 1; res.sweeps <= max_iter; ++res.sweeps) {
        // mu-step: exact minimization over mu.
        for (int j = 0; j < nd; ++j) {
            for (int i = 0; i < no; ++i)
                col[i] = mask(i, j) ? (-T(i, j) + lambda[i]) / gamma : -kInf;
            mu[j] = gamma * std::log(w[j]) - gamma * lse(col);
        }
        // lambda-step.
        for (int i = 0; i < no; ++i) {
            for (int j = 0; j < nd; ++j)
                row[j] = mask(i, j) ? (-T(i, j) + mu[j]) / gamma : -kInf;
            lambda[i] = gamma * std::log(l[i]) - gamma * lse(row);
        }
        Eigen::MatrixXd d = demand_from_potentials(T, mask, res.pot, gamma);
        double err = (d.rowwise().sum() - l).cwiseAbs().sum() +
                     (d.colwise().sum().transpose() - w).cwiseAbs().sum();
        if (err <= tol) return res;
    }
    res.sweeps = max_iter;
    res.converged = false;
    return res;
}

Eigen::MatrixXd demand_from_potentials(const Eigen::MatrixXd& T, const BoolMask& mask,
                                       const Potentials& pot, double gamma) {
    Eigen::ArrayXXd z = logits(T, mask, pot, gamma);
    const double m = z.maxCoeff();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T.rows(), T.cols());
    double total = 0.0;
    for (int i = 0; i < T.rows(); ++i)
        for (int j = 0; j < T.cols(); ++j)
            if (mask(i, j)) {
                d(i, j) = std::exp(z(i, j) - m);
                total += d(i, j);
            }
    d /= total;
    return d;
}

double eval_entropy_dual(const Eigen::MatrixXd& T, const BoolMask& mask, const Potentials& pot,
                         double gamma, const Eigen::VectorXd& l, const Eigen::VectorXd& w) {
    Eigen::ArrayXXd z = logits(T, mask, pot, gamma);
    Eigen::Map<const Eigen::ArrayXd> flat(z.data(), z.size());
    return gamma * lse(flat) - l.dot(pot.lambda) - w.dot(pot.mu);
}

}  // namespace tap
