#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "waveholtz/filter.hpp"

using namespace wh;
using std::numbers::pi;

namespace
{
    /// (2/T) sum_n sigma_n (cos(w t_n) - a/2) cos(l t_n) dt, summed independently of the library
    double trapezoid_filter(double lambda, double omega, int steps, double dt, double alpha)
    {
        long double acc = 0.0L;
        for (int n = 0; n <= steps; ++n)
        {
            const long double t = static_cast<long double>(n) * dt;
            const long double w = (n == 0 || n == steps) ? 0.5L : 1.0L;
            acc += w * (std::cos(static_cast<long double>(omega) * t) - alpha / 2.0L) * std::cos(static_cast<long double>(lambda) * t);
        }
        return static_cast<double>(2.0L / (steps * dt) * acc * dt);
    }

    double derivative_at_omega(double omega, int nt, double alpha)
    {
        const double dt = 2 * pi / omega / nt, T = nt * dt, h = 1e-6 * omega;
        return (beta_d(omega + h, omega, T, dt, alpha) - beta_d(omega - h, omega, T, dt, alpha)) / (2 * h);
    }
}

TEST_CASE("sinc")
{
    CHECK(sinc(0.0) == 1.0);
    CHECK(sinc(1e-9) == doctest::Approx(1.0).epsilon(1e-16));
    CHECK(sinc(pi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(sinc(-2.0) == doctest::Approx(std::sin(2.0) / 2.0));
}

TEST_CASE("continuous filter function")
{
    for (double omega : {1.0, 5.5, 30.0})
    {
        const double T = 2 * pi / omega;
        CHECK(beta(omega, omega, T, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
        // lambda = 0: sinc(w T) + sinc(w T) - alpha
        CHECK(beta(0.0, omega, T, 0.5) == doctest::Approx(2 * sinc(omega * T) - 0.5).epsilon(1e-14));
        // 2 omega: all three sinc arguments are multiples of 2 pi
        CHECK(std::abs(beta(2 * omega, omega, T, 0.5)) <= 1e-15);
    }
}

TEST_CASE("continuous filter has global maximum one at lambda = omega")
{
    const double omega = 3.0, T = 2 * pi / omega;
    double best = -1.0, where = 0.0;
    for (int k = 0; k <= 40000; ++k)
    {
        const double l = 4.0 * omega * k / 40000;
        const double b = std::abs(beta(l, omega, T, 0.5));
        if (b > best)
        {
            best = b;
            where = l;
        }
    }
    CHECK(best == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(where == doctest::Approx(omega).epsilon(1e-3));
}

TEST_CASE("sinc_d special values and limit")
{
    CHECK(sinc_d(0.0, 1.0, 0.1) == 1.0);
    for (int nt : {2, 3, 5, 10, 17})
    {
        const double omega = 2.3, T = 2 * pi / omega, dt = T / nt;
        CHECK(std::abs(sinc_d(omega, T, dt)) <= 1e-14);
        // with N_t = 2, z = 2 omega aliases to z dt = 2 pi where sinc_d is 1
        if (nt > 2)
            CHECK(std::abs(sinc_d(2 * omega, T, dt)) <= 1e-14);
    }
    CHECK(sinc_d(2 * 2.3, 2 * pi / 2.3, pi / 2.3) == doctest::Approx(1.0));
    // O(dt^2) convergence to sin(zT)/(zT)
    const double z = 1.7, T = 2.0;
    std::vector<double> errs;
    for (int n : {20, 40, 80, 160})
        errs.push_back(std::abs(sinc_d(z, T, T / n) - sinc(z * T)));
    for (std::size_t k = 1; k < errs.size(); ++k)
        CHECK(errs[k - 1] / errs[k] == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("alpha_d")
{
    CHECK(alpha_d(1e-6) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(alpha_d(2 * pi / 5) == doctest::Approx(std::tan(pi / 5) / std::tan(2 * pi / 5)).epsilon(1e-15));
    CHECK_THROWS_AS(alpha_d(pi / 2), std::domain_error);
    CHECK_THROWS_AS(alpha_d(0.0), std::domain_error);

    // alpha_d - 1/2 = O(dt^2)
    std::vector<double> d;
    for (double x : {0.2, 0.1, 0.05, 0.025})
        d.push_back(alpha_d(x) - 0.5);
    for (std::size_t k = 1; k < d.size(); ++k)
        CHECK(d[k - 1] / d[k] == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("alpha_d makes lambda = omega a critical point of beta_d")
{
    for (int nt : {5, 7, 10, 20})
    {
        const double omega = 2.0, dt = 2 * pi / omega / nt;
        const double corrected = derivative_at_omega(omega, nt, alpha_d(omega * dt));
        const double plain = derivative_at_omega(omega, nt, 0.5);
        CHECK(std::abs(corrected) < 1e-6 / omega);
        CHECK(std::abs(plain) >= 100 * std::abs(corrected));
    }
}

TEST_CASE("beta_d is one at lambda = omega")
{
    for (int nt : {5, 7, 10, 20, 100})
        for (int np : {1, 2, 3})
        {
            const double omega = 4.1, dt = 2 * pi / omega / nt;
            CHECK(beta_d(omega, omega, np * nt * dt, dt, alpha_d(omega * dt)) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(beta_d(omega, omega, np * nt * dt, dt, 0.3) == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("closed-form beta_d equals an independent trapezoid sum")
{
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> lam(0.0, 5.0), om(0.3, 10.0), al(0.0, 1.0);
    std::uniform_int_distribution<int> nts(5, 40), nps(1, 4);
    for (int trial = 0; trial < 200; ++trial)
    {
        const double omega = om(gen), lambda = lam(gen) * omega, alpha = al(gen);
        const int nt = nts(gen), np = nps(gen), steps = nt * np;
        const double dt = 2 * pi / omega / nt;
        CAPTURE(omega);
        CAPTURE(lambda);
        CAPTURE(nt);
        const double ref = trapezoid_filter(lambda, omega, steps, dt, alpha);
        CHECK(beta_d(lambda, omega, steps * dt, dt, alpha) == doctest::Approx(ref).epsilon(1e-11).scale(1.0));
        CHECK(beta_d_quadrature(lambda, omega, steps, dt, alpha) == doctest::Approx(ref).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("beta_d removable singularities")
{
    // lambda a multiple of 2 pi / dt aliases to lambda = 0; lambda = omega +- 2 pi/dt aliases to omega
    const double omega = 1.0;
    const int nt = 7;
    const double dt = 2 * pi / omega / nt, T = nt * dt, alpha = 0.4;
    for (double lambda : {0.0, omega, 2 * pi / dt, omega + 2 * pi / dt, 2 * pi / dt - omega})
        CHECK(beta_d(lambda, omega, T, dt, alpha) == doctest::Approx(trapezoid_filter(lambda, omega, nt, dt, alpha)).epsilon(1e-11).scale(1.0));
    // alpha = 0, lambda = 0: trapezoid of cosine over a period vanishes
    for (int n : {2, 3, 9})
        CHECK(std::abs(beta_d(0.0, omega, 2 * pi / omega, 2 * pi / omega / n, 0.0)) <= 1e-14);
}

TEST_CASE("beta_d tends to beta as dt -> 0")
{
    const double omega = 1.3, T = 2 * pi / omega, dt = T / 1000;
    for (double l : {0.0, omega / 2, 2 * omega, 3.7 * omega})
        CHECK(std::abs(beta_d(l, omega, T, dt, 0.5) - beta(l, omega, T, 0.5)) < 1e-4);
}

TEST_CASE("lambda tilde maps")
{
    const double dt = 0.01;
    CHECK(lambda_tilde_explicit(0.0, dt) == 0.0);
    CHECK(lambda_tilde_explicit(2.0 / dt, dt) == doctest::Approx(pi / dt).epsilon(1e-15));
    CHECK_THROWS_AS(lambda_tilde_explicit(2.0 / dt * 1.001, dt), std::domain_error);
    const double l = 0.1 / dt;
    CHECK(lambda_tilde_explicit(l, dt) == doctest::Approx(l * (1 + 0.01 / 24)).epsilon(1e-6));

    CHECK(lambda_tilde_implicit(0.0, dt) == 0.0);
    CHECK(lambda_tilde_implicit(1e12, dt) == doctest::Approx(pi / (2 * dt)).epsilon(1e-6));
    // cos(y) = 1 / (1 + x^2/2) gives y = x (1 - 5 x^2 / 24 + O(x^4))
    CHECK(lambda_tilde_implicit(l, dt) == doctest::Approx(l * (1 - 5 * 0.01 / 24)).epsilon(1e-5));
    CHECK(lambda_tilde_implicit(l, dt) == doctest::Approx(l).epsilon(3e-3));
    // the implicit map is cos(l~ dt)(1 + (l dt)^2 / 2) = 1
    for (double x : {0.05, 0.5, 3.0, 40.0})
        CHECK(std::cos(lambda_tilde_implicit(x / dt, dt) * dt) * (1 + x * x / 2) == doctest::Approx(1.0).epsilon(1e-13));
    // monotone in lambda
    double prev = -1.0;
    for (int k = 0; k < 200; ++k)
    {
        const double v = lambda_tilde_implicit(k * 5.0, dt);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("filter configuration")
{
    FilterConfig cfg{2.0, 3, 10, std::nullopt, TimeMode::Implicit};
    CHECK(cfg.period() == doctest::Approx(pi));
    CHECK(cfg.final_time() == doctest::Approx(3 * pi));
    CHECK(cfg.time_step() * cfg.steps_per_period * cfg.periods == doctest::Approx(cfg.final_time()).epsilon(1e-14));
    CHECK_NOTHROW(cfg.validate());
    cfg.periods = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(std::string(to_string(TimeMode::Explicit)) == "explicit");
    CHECK(time_mode_from_string("implicit") == TimeMode::Implicit);
    CHECK_THROWS(time_mode_from_string("bogus"));
}

TEST_CASE("rate prediction")
{
    FilterConfig cont{2.0, 1, 10, 0.5, TimeMode::Continuous};
    const std::vector<double> two_omega{4.0};
    CHECK(predict_rate(two_omega, cont, 2.0, 0.5).mu <= 1e-15);

    const std::vector<double> resonant{2.0};
    CHECK_THROWS_AS(predict_rate(resonant, cont, 2.0, 0.5), std::domain_error);

    // excluding modes never increases mu; the argmax drops out first
    FilterConfig impl{5.5, 1, 10, std::nullopt, TimeMode::Implicit};
    std::vector<double> eigs;
    for (int m = 1; m < 32; ++m)
        eigs.push_back(m * pi * 0.99);
    const double dt = impl.time_step();
    const RatePrediction full = predict_rate(eigs, impl, 5.5, alpha_d(5.5 * dt));
    std::vector<std::size_t> excl;
    double prev = full.mu;
    RatePrediction cur = full;
    for (int k = 0; k < 5; ++k)
    {
        excl.push_back(cur.argmax);
        cur = predict_rate(eigs, impl, 5.5, alpha_d(5.5 * dt), excl);
        CHECK(cur.mu <= prev);
        CHECK(cur.abs_beta[excl.back()] == 0.0);
        prev = cur.mu;
    }
    CHECK(full.mu < 1.0);
    CHECK(full.unfiltered.empty());
}
