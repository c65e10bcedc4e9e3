#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tap/link_cost.hpp"

using namespace tap;

namespace {

// Simpson quadrature of tau over [0, f]; independent route to sigma.
double sigma_quadrature(const LinkParams& p, double f, int panels = 4000) {
    double h = f / panels;
    double acc = bpr_time(p, 0.0) + bpr_time(p, f);
    for (int i = 1; i < panels; ++i)
        acc += (i % 2 ? 4.0 : 2.0) * bpr_time(p, i * h);
    return acc * h / 3.0;
}

// Bisection on tau; independent route to bpr_inverse.
double inverse_by_bisection(const LinkParams& p, double t) {
    double lo = 0.0, hi = 1.0;
    while (bpr_time(p, hi) < t) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (bpr_time(p, mid) < t ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// 1-D golden-section maximization of f*t - sigma(f); independent route to sigma_conj.
double conj_by_search(const LinkParams& p, double t) {
    double lo = 0.0, hi = 1.0;
    auto g = [&](double f) { return f * t - sigma(p, f); };
    while (g(hi * 2.0) > g(hi)) hi *= 2.0;
    hi *= 2.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int i = 0; i < 300; ++i) {
        double c = b - phi * (b - a);
        double d = a + phi * (b - a);
        if (g(c) > g(d)) b = d;
        else a = c;
    }
    return g(0.5 * (a + b));
}

LinkParams random_link(std::mt19937& rng) {
    std::uniform_real_distribution<double> tbar(0.5, 30.0), cap(0.5, 500.0), kap(0.05, 2.0);
    std::uniform_int_distribution<int> power(1, 6);
    return LinkParams{tbar(rng), cap(rng), kap(rng), double(power(rng))};
}

}  // namespace

TEST_CASE("bpr_time examples") {
    LinkParams p{10.0, 100.0, 0.15, 4.0};
    CHECK(bpr_time(p, 0.0) == doctest::Approx(10.0));
    CHECK(bpr_time(p, 100.0) == doctest::Approx(11.5));
    LinkParams q{10.0, 2.0, 0.15, 4.0};
    CHECK(bpr_time(q, 1.0) == doctest::Approx(10.09375).epsilon(1e-12));
    // quadrature cross-check: d sigma / df == tau
    double h = 1e-5;
    CHECK((sigma_quadrature(q, 1.0 + h) - sigma_quadrature(q, 1.0 - h)) / (2 * h) ==
          doctest::Approx(10.09375).epsilon(1e-6));
    CHECK_THROWS_AS(bpr_time(p, -1.0), std::domain_error);
    CHECK_THROWS_AS(bpr_time(p, std::nan("")), std::domain_error);
}

TEST_CASE("bpr_inverse examples") {
    LinkParams p{10.0, 100.0, 0.15, 4.0};
    CHECK(bpr_inverse(p, 10.0) == doctest::Approx(0.0));
    CHECK(bpr_inverse(p, 11.5) == doctest::Approx(100.0).epsilon(1e-12));
    LinkParams q{10.0, 2.0, 0.15, 4.0};
    CHECK(bpr_inverse(q, 10.09375) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(bpr_inverse(q, 10.09375) ==
          doctest::Approx(inverse_by_bisection(q, 10.09375)).epsilon(1e-9));
    CHECK_THROWS_AS(bpr_inverse(p, 9.99), std::domain_error);
    // boundary slack: barely below t_bar is the boundary, not an error
    CHECK(bpr_inverse(p, 10.0 * (1.0 - 1e-13)) == doctest::Approx(0.0));
}

TEST_CASE("sigma examples") {
    LinkParams p{10.0, 100.0, 0.15, 4.0};
    CHECK(sigma(p, 0.0) == doctest::Approx(0.0));
    CHECK(sigma(p, 100.0) == doctest::Approx(1030.0).epsilon(1e-12));
    CHECK(sigma(p, 100.0) == doctest::Approx(sigma_quadrature(p, 100.0)).epsilon(1e-9));
    LinkParams lin{1.0, 1.0, 1.0, 1.0};
    CHECK(sigma(lin, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(sigma(lin, 2.0) == doctest::Approx(sigma_quadrature(lin, 2.0)).epsilon(1e-9));
    CHECK_THROWS_AS(sigma(p, -0.1), std::domain_error);
}

TEST_CASE("sigma_conj examples") {
    LinkParams p{10.0, 100.0, 0.15, 4.0};
    CHECK(sigma_conj(p, 10.0) == doctest::Approx(0.0));
    CHECK(sigma_conj(p, 11.5) == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(sigma_conj(p, 11.5) == doctest::Approx(conj_by_search(p, 11.5)).epsilon(1e-8));
    LinkParams lin{1.0, 1.0, 1.0, 1.0};
    CHECK(sigma_conj(lin, 3.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sigma_conj(lin, 3.0) == doctest::Approx(conj_by_search(lin, 3.0)).epsilon(1e-8));
    CHECK_THROWS_AS(sigma_conj(p, 9.0), std::domain_error);
    // constant-cost link: conjugate degenerates to zero at t_bar
    LinkParams flat{5.0, 1.0, 0.0, 1.0};
    CHECK(sigma_conj(flat, 5.0) == doctest::Approx(0.0));
}

TEST_CASE("Fenchel-Young equality on random links") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        LinkParams p = random_link(rng);
        std::uniform_real_distribution<double> flow(0.0, 3.0 * p.capacity);
        double f = flow(rng);
        double t = bpr_time(p, f);
        double lhs = sigma(p, f) + sigma_conj(p, t);
        double rhs = f * t;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("round trip inverse(time(f)) == f") {
    // Flows below ~0.2 capacity on high-power links make the congestion term
    // vanish in double precision, so the inverse is ill-conditioned there by
    // construction; test the round trip where it is numerically meaningful.
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        LinkParams p = random_link(rng);
        std::uniform_real_distribution<double> flow(0.2 * p.capacity, 3.0 * p.capacity);
        double f = flow(rng);
        CHECK(bpr_inverse(p, bpr_time(p, f)) == doctest::Approx(f).epsilon(1e-9));
    }
}

TEST_CASE("finite differences: sigma' == tau and sigma*' == tau^{-1}") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        LinkParams p = random_link(rng);
        std::uniform_real_distribution<double> flow(0.1 * p.capacity, 2.0 * p.capacity);
        double f = flow(rng);
        double h = 1e-6 * std::max(1.0, f);
        double d_sigma = (sigma(p, f + h) - sigma(p, f - h)) / (2 * h);
        CHECK(d_sigma == doctest::Approx(bpr_time(p, f)).epsilon(1e-6));

        // sigma* has steep higher derivatives near t_bar on high-power links,
        // so the central difference carries visible truncation error
        double t = bpr_time(p, f);
        double ht = 1e-6 * t;
        double d_conj = (sigma_conj(p, t + ht) - sigma_conj(p, t - ht)) / (2 * ht);
        CHECK(d_conj == doctest::Approx(bpr_inverse(p, t)).epsilon(1e-4));
    }
}

TEST_CASE("monotonicity of tau and its inverse") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        LinkParams p = random_link(rng);
        double prev_t = -1.0, prev_f = -1.0;
        for (int i = 0; i <= 40; ++i) {
            double f = 3.0 * p.capacity * i / 40.0;
            double t = bpr_time(p, f);
            CHECK(t >= prev_t);
            prev_t = t;
            double fi = bpr_inverse(p, p.free_flow_time * (1.0 + 0.1 * i));
            CHECK(fi >= prev_f);
            prev_f = fi;
        }
    }
}
