#ifndef WAVEHOLTZ_FILTER_HPP
#define WAVEHOLTZ_FILTER_HPP

#include <optional>
#include <span>
#include <vector>

namespace wh
{
    enum class TimeMode
    {
        Continuous,
        Explicit,
        Implicit
    };

    const char* to_string(TimeMode mode);
    TimeMode time_mode_from_string(const char* name);

    /// @brief Settings of the WaveHoltz time filter.
    ///
    /// `omega` is the frequency the filter is tuned to. When alpha is empty the
    /// corrected value alpha_d is used for discrete modes and 1/2 for the continuous one.
    struct FilterConfig
    {
        double omega = 1.0;
        int periods = 1;
        int steps_per_period = 10;
        std::optional<double> alpha;
        TimeMode mode = TimeMode::Implicit;

        double period() const;
        double final_time() const;
        double time_step() const;

        /// throws std::invalid_argument when the settings are inconsistent
        void validate() const;
    };

    /// sin(x)/x with sinc(0) = 1
    double sinc(double x);

    /// Continuous filter function, three-sinc form.
    double beta(double lambda, double omega, double final_time, double alpha);

    /// @brief Trapezoidal-rule counterpart of sinc over [0, T] with T = N dt.
    ///
    /// sin(zT) / (T tan(z dt/2) / (dt/2)), evaluated through its removable
    /// singularities (value 1 where z dt is a multiple of 2 pi, 0 at the poles of tan).
    double sinc_d(double z, double final_time, double dt);

    /// Corrected filter constant tan(x/2)/tan(x); requires 0 < x < pi/2.
    double alpha_d(double omega_dt);

    /// Discrete filter function on [0, T] with T = N dt, closed form.
    double beta_d(double lambda, double omega, double final_time, double dt, double alpha);

    /// @brief Discrete filter function by direct trapezoidal summation.
    ///
    /// (2/T) sum_n (cos(omega t^n) - alpha/2) cos(lambda t^n) sigma_n dt over
    /// n = 0..steps, T = steps * dt.
    double beta_d_quadrature(double lambda, double omega, int steps, double dt, double alpha);

    /// (2/dt) asin(lambda dt / 2); throws std::domain_error when lambda dt > 2
    double lambda_tilde_explicit(double lambda_h, double dt);

    /// (1/dt) acos(1 / (1 + (lambda dt)^2 / 2))
    double lambda_tilde_implicit(double lambda_h, double dt);

    struct RatePrediction
    {
        double mu = 0.0;                     ///< asymptotic convergence rate
        std::size_t argmax = 0;              ///< index (in the supplied list) of the slowest mode
        std::vector<double> abs_beta;        ///< |beta| per supplied eigenvalue (0 for excluded ones)
        std::vector<std::size_t> unfiltered; ///< modes with |beta| >= 1
    };

    /// @brief Predicted fixed-point convergence rate.
    ///
    /// Each eigenvalue lambda_h is mapped by the time-stepping map of cfg.mode; the
    /// filter is evaluated at the driving frequency omega_tilde with
    /// periods * steps_per_period trapezoidal steps of size 2 pi / (omega_tilde N_t).
    /// Modes listed in `excluded` (deflated ones) do not contribute.
    /// Throws std::domain_error when a mapped eigenvalue is resonant with omega_tilde.
    RatePrediction predict_rate(std::span<const double> eigenvalues, const FilterConfig& cfg, double omega_tilde, double alpha,
                                std::span<const std::size_t> excluded = {});
}

#endif
