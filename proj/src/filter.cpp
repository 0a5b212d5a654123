#include "waveholtz/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wh
{
    using std::numbers::pi;

    const char* to_string(TimeMode mode)
    {
        switch (mode)
        {
        case TimeMode::Continuous:
            return "continuous";
        case TimeMode::Explicit:
            return "explicit";
        case TimeMode::Implicit:
            return "implicit";
        }
        return "?";
    }

    TimeMode time_mode_from_string(const char* name)
    {
        if (std::strcmp(name, "continuous") == 0)
            return TimeMode::Continuous;
        if (std::strcmp(name, "explicit") == 0)
            return TimeMode::Explicit;
        if (std::strcmp(name, "implicit") == 0)
            return TimeMode::Implicit;
        throw std::invalid_argument(std::string("unknown time-stepping mode '") + name + "'");
    }

    double FilterConfig::period() const { return 2.0 * pi / omega; }
    double FilterConfig::final_time() const { return periods * period(); }
    double FilterConfig::time_step() const { return period() / steps_per_period; }

    void FilterConfig::validate() const
    {
        if (!(omega > 0.0))
            throw std::invalid_argument("filter frequency must be positive");
        if (periods < 1)
            throw std::invalid_argument("number of periods must be positive");
        if (steps_per_period < 1)
            throw std::invalid_argument("steps per period must be positive");
        if (mode == TimeMode::Implicit && steps_per_period < 5)
            throw std::invalid_argument("implicit time-stepping needs at least 5 time-steps per period");
    }

    double sinc(double x)
    {
        if (x == 0.0)
            return 1.0;
        return std::sin(x) / x;
    }

    double beta(double lambda, double omega, double final_time, double alpha)
    {
        return sinc((omega - lambda) * final_time) + sinc((omega + lambda) * final_time) - alpha * sinc(lambda * final_time);
    }

    double sinc_d(double z, double final_time, double dt)
    {
        const double ratio = final_time / dt;
        const double steps = std::round(ratio);
        if (steps < 1.0 || std::abs(ratio - steps) > 1e-8 * steps)
            throw std::invalid_argument("sinc_d requires T to be an integer multiple of dt");

        // x = z dt / 2 = m pi + r with |r| <= pi/2; then z T = 2 N x and the signs
        // (-1)^m of sin(x), cos(x) and sin(2 N m pi + 2 N r) cancel
        const double x = std::abs(z) * dt / 2.0;
        const double m = std::round(x / pi);
        const double r = x - m * pi;
        if (r == 0.0)
            return 1.0;
        const double n2 = 2.0 * steps;
        return std::sin(n2 * r) * std::cos(r) / (n2 * std::sin(r));
    }

    double alpha_d(double omega_dt)
    {
        if (!(omega_dt > 0.0) || !(omega_dt < pi / 2.0))
            throw std::domain_error("alpha_d requires 0 < omega*dt < pi/2 (at least 5 time-steps per period)");
        return std::tan(omega_dt / 2.0) / std::tan(omega_dt);
    }

    double beta_d(double lambda, double omega, double final_time, double dt, double alpha)
    {
        return sinc_d(omega + lambda, final_time, dt) + sinc_d(omega - lambda, final_time, dt) - alpha * sinc_d(lambda, final_time, dt);
    }

    double beta_d_quadrature(double lambda, double omega, int steps, double dt, double alpha)
    {
        if (steps < 1)
            throw std::invalid_argument("quadrature needs at least one step");
        const double final_time = steps * dt;
        double sum = 0.0;
        for (int n = 0; n <= steps; ++n)
        {
            const double t = n * dt;
            const double sigma = (n == 0 || n == steps) ? 0.5 : 1.0;
            sum += (std::cos(omega * t) - alpha / 2.0) * std::cos(lambda * t) * sigma;
        }
        return 2.0 / final_time * sum * dt;
    }

    double lambda_tilde_explicit(double lambda_h, double dt)
    {
        const double s = lambda_h * dt / 2.0;
        if (s > 1.0)
        {
            // allow rounding at the stability limit itself
            if (s > 1.0 + 1e-14)
                throw std::domain_error("explicit time-step is unstable for eigenvalue " + std::to_string(lambda_h));
            return pi / dt;
        }
        return 2.0 / dt * std::asin(s);
    }

    double lambda_tilde_implicit(double lambda_h, double dt)
    {
        const double a = lambda_h * dt;
        // acos(1/(1+a^2/2)) loses accuracy for small a; use the equivalent
        // 2 asin( sqrt( (a^2/4) / (1 + a^2/2) ) )
        const double s = std::sqrt((a * a / 4.0) / (1.0 + a * a / 2.0));
        return 2.0 * std::asin(s) / dt;
    }

    RatePrediction predict_rate(std::span<const double> eigenvalues, const FilterConfig& cfg, double omega_tilde, double alpha,
                                std::span<const std::size_t> excluded)
    {
        cfg.validate();
        if (!(omega_tilde > 0.0))
            throw std::invalid_argument("driving frequency must be positive");

        RatePrediction out;
        out.abs_beta.assign(eigenvalues.size(), 0.0);

        const double period = 2.0 * pi / omega_tilde;
        const int steps = cfg.periods * cfg.steps_per_period;
        const double dt = period / cfg.steps_per_period;

        std::vector<bool> skip(eigenvalues.size(), false);
        for (std::size_t k : excluded)
        {
            if (k >= eigenvalues.size())
                throw std::out_of_range("excluded mode index out of range");
            skip[k] = true;
        }

        bool any = false;
        for (std::size_t m = 0; m < eigenvalues.size(); ++m)
        {
            if (skip[m])
                continue;
            const double lambda = eigenvalues[m];
            double mapped = lambda;
            if (cfg.mode == TimeMode::Explicit)
                mapped = lambda_tilde_explicit(lambda, dt);
            else if (cfg.mode == TimeMode::Implicit)
                mapped = lambda_tilde_implicit(lambda, dt);

            if (std::abs(mapped - omega_tilde) <= 1e-12 * omega_tilde)
                throw std::domain_error("eigenvalue " + std::to_string(lambda) + " (index " + std::to_string(m) + ") is resonant with the frequency");

            double b = 0.0;
            if (cfg.mode == TimeMode::Continuous)
                b = beta(mapped, omega_tilde, cfg.periods * period, alpha);
            else if (cfg.periods == 1)
                b = beta_d(mapped, omega_tilde, period, dt, alpha);
            else
                b = beta_d_quadrature(mapped, omega_tilde, steps, dt, alpha);

            out.abs_beta[m] = std::abs(b);
            if (out.abs_beta[m] >= 1.0)
                out.unfiltered.push_back(m);
            if (!any || out.abs_beta[m] > out.mu)
            {
                out.mu = out.abs_beta[m];
                out.argmax = m;
                any = true;
            }
        }
        return out;
    }
}
