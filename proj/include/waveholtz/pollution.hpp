#ifndef WAVEHOLTZ_POLLUTION_HPP
#define WAVEHOLTZ_POLLUTION_HPP

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace wh
{
    using Rational = boost::multiprecision::cpp_rational;

    /// @brief b_mu = 2 (mu!)^2 / (2 mu + 2)! as an exact rational.
    ///
    /// Coefficients of 4 asin^2(eta) = sum b_mu (4 eta^2)^{mu+1}. Throws
    /// std::overflow_error for mu > 20 and std::invalid_argument for mu < 0.
    Rational b_coeff_exact(int mu);

    /// b_mu in double precision (exact path up to 20, log-gamma beyond)
    double b_coeff(int mu);

    /// (pi b_{p/2})^{1/p}
    double ppw_prefactor(int order);

    /// @brief Points-per-wavelength rule of thumb 2 pi (pi b_{p/2})^{1/p} (N_Lambda / eps)^{1/p}.
    double ppw_estimate(int order, double wavelengths, double eps);

    /// (1/2) b_{p/2} k L (k dx)^p
    double pollution_error(int order, double k, double length, double dx);

    struct DispersionResult
    {
        double k_tilde = 0.0;
        double asymptotic_coefficient = 0.0; ///< (1/2) b_{p/2} (k dx)^p
        double relative_error = 0.0;         ///< (k_tilde - k) / k
        int newton_iterations = 0;
    };

    /// @brief Discrete wave number from k^2 = dx^-2 sum_{mu < p/2} b_mu (4 sin^2(k_tilde dx / 2))^{mu+1}.
    ///
    /// Closed form for p = 2, damped Newton otherwise. Requires k dx < 1
    /// (std::invalid_argument) and throws std::runtime_error if Newton fails.
    DispersionResult k_tilde(double k, double dx, int order);

    /// @brief u'' + k^2 u = cos(kappa x) on (a, b) with u(a) = u(b) = 0, discretized with N cells.
    struct ModelProblemSpec
    {
        double k = 1.0;
        double kappa = 1.0;
        double a = 0.0;
        double b = 1.0;
        int cells = 100;
        int order = 2;

        double length() const { return b - a; }
        double dx() const { return length() / cells; }

        /// throws std::invalid_argument for kappa ~ k or sin(kL) ~ 0
        void validate() const;
    };

    /// closed-form continuous solution at x
    double continuous_solution(const ModelProblemSpec& spec, double x);

    /// analytic u''(x)
    double continuous_solution_xx(const ModelProblemSpec& spec, double x);

    /// @brief Closed-form solution of the second-order discrete problem, U_0..U_N.
    ///
    /// Requires p = 2 and k dx < 2; throws std::invalid_argument otherwise.
    std::vector<double> discrete_solution_closed_form(const ModelProblemSpec& spec);

    /// 1 / (|k^2 - kappa^2| |sin(kL)|), the size of the homogeneous solution
    double solution_scale(const ModelProblemSpec& spec);

    /// max_j |U_j - u(x_j)| / scale
    double model_problem_error(const ModelProblemSpec& spec);

    /// @brief Leading-order error bounds of the second-order model problem.
    struct AmplitudePhaseErrors
    {
        double amplitude = 0.0;     ///< K_h kL/|tan kL| (k dx)^2 + K_f (kappa dx)^2 / |(k/kappa)^2 - 1|
        double phase = 0.0;         ///< K_h kL (k dx)^2
        double particular = 0.0;    ///< K_f kappa^2 (kappa dx)^2 / |k^2 - kappa^2|
        double amplification = 0.0; ///< K_h (k_m / |dk|) (k dx)^2 for the nearest k_m = m pi / L
        double nearest_km = 0.0;
        double delta_k = 0.0; ///< k - k_m
    };

    inline constexpr double k_h_constant = 1.0 / 24.0;
    inline constexpr double k_f_constant = 1.0 / 12.0;

    AmplitudePhaseErrors amplitude_phase_errors(const ModelProblemSpec& spec);
}

#endif
