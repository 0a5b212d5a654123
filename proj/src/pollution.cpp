#include "waveholtz/pollution.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wh
{
    using std::numbers::pi;
    using boost::multiprecision::cpp_int;

    Rational b_coeff_exact(int mu)
    {
        if (mu < 0)
            throw std::invalid_argument("b_mu needs mu >= 0");
        if (mu > 20)
            throw std::overflow_error("exact b_mu limited to mu <= 20");
        cpp_int f_mu = 1, f_2mu2 = 1;
        for (int i = 2; i <= mu; ++i)
            f_mu *= i;
        for (int i = 2; i <= 2 * mu + 2; ++i)
            f_2mu2 *= i;
        return Rational(2 * f_mu * f_mu, f_2mu2);
    }

    double b_coeff(int mu)
    {
        if (mu <= 20)
            return static_cast<double>(b_coeff_exact(mu));
        return 2.0 * std::exp(2.0 * std::lgamma(mu + 1.0) - std::lgamma(2.0 * mu + 3.0));
    }

    double ppw_prefactor(int order)
    {
        if (order < 2 || order % 2 != 0)
            throw std::invalid_argument("order must be even and >= 2");
        return std::pow(pi * b_coeff(order / 2), 1.0 / order);
    }

    double ppw_estimate(int order, double wavelengths, double eps)
    {
        if (!(eps > 0.0) || !(wavelengths > 0.0))
            throw std::invalid_argument("PPW estimate needs positive N_Lambda and tolerance");
        return 2.0 * pi * ppw_prefactor(order) * std::pow(wavelengths / eps, 1.0 / order);
    }

    double pollution_error(int order, double k, double length, double dx)
    {
        if (order < 2 || order % 2 != 0)
            throw std::invalid_argument("order must be even and >= 2");
        return 0.5 * b_coeff(order / 2) * k * length * std::pow(k * dx, order);
    }

    DispersionResult k_tilde(double k, double dx, int order)
    {
        if (order < 2 || order % 2 != 0)
            throw std::invalid_argument("order must be even and >= 2");
        if (!(k > 0.0) || !(dx > 0.0))
            throw std::invalid_argument("wave number and spacing must be positive");
        const double kdx = k * dx;
        if (kdx >= 1.0)
            throw std::invalid_argument("k dx must be below 1");

        DispersionResult out;
        out.asymptotic_coefficient = 0.5 * b_coeff(order / 2) * std::pow(kdx, order);
        if (order == 2)
        {
            out.k_tilde = 2.0 / dx * std::asin(kdx / 2.0);
            out.relative_error = (out.k_tilde - k) / k;
            return out;
        }

        const int terms = order / 2;
        std::vector<double> b(terms);
        for (int mu = 0; mu < terms; ++mu)
            b[mu] = b_coeff(mu);

        // g(theta) = sum b_mu (4 sin^2(theta/2))^{mu+1} - (k dx)^2, theta = k_tilde dx
        auto g = [&](double theta, double& dg) {
            const double s = 4.0 * std::pow(std::sin(theta / 2.0), 2);
            double val = -kdx * kdx, pw = 1.0;
            dg = 0.0;
            for (int mu = 0; mu < terms; ++mu)
            {
                dg += b[mu] * (mu + 1) * pw * std::sin(theta); // ds/dtheta = 2 sin(theta), factor 2 applied below
                pw *= s;
                val += b[mu] * pw;
            }
            dg *= 2.0;
            return val;
        };

        double theta = kdx * (1.0 + out.asymptotic_coefficient);
        double dg = 0.0;
        double res = g(theta, dg);
        bool converged = false;
        for (int it = 0; it < 50; ++it)
        {
            out.newton_iterations = it + 1;
            const double step = res / dg;
            double lambda = 1.0, trial = theta - step, dg_trial = 0.0;
            double res_trial = g(trial, dg_trial);
            while (std::abs(res_trial) > std::abs(res) && lambda > 1e-6)
            {
                lambda /= 2.0;
                trial = theta - lambda * step;
                res_trial = g(trial, dg_trial);
            }
            const double change = std::abs(trial - theta);
            theta = trial;
            res = res_trial;
            dg = dg_trial;
            if (change <= 1e-14 * theta || res == 0.0)
            {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw std::runtime_error("Newton iteration for the discrete wave number did not converge");
        out.k_tilde = theta / dx;
        out.relative_error = (out.k_tilde - k) / k;
        return out;
    }

    void ModelProblemSpec::validate() const
    {
        if (!(k > 0.0) || !(kappa > 0.0))
            throw std::invalid_argument("wave numbers must be positive");
        if (!(b > a))
            throw std::invalid_argument("interval must be nonempty");
        if (cells < 2)
            throw std::invalid_argument("model problem needs at least 2 cells");
        if (std::abs(k * k - kappa * kappa) < 1e-10 * k * k)
            throw std::invalid_argument("forcing wave number is resonant (kappa ~ k)");
        if (std::abs(std::sin(k * length())) < 1e-10)
            throw std::invalid_argument("k is an eigenvalue of the model problem (sin(kL) ~ 0)");
    }

    double continuous_solution(const ModelProblemSpec& s, double x)
    {
        s.validate();
        const double d = s.k * s.k - s.kappa * s.kappa;
        const double L = s.length();
        const double ua = std::cos(s.kappa * s.a) / d, ub = std::cos(s.kappa * s.b) / d;
        const double sl = std::sin(s.k * L);
        return std::cos(s.kappa * x) / d - ub * std::sin(s.k * (x - s.a)) / sl - ua * std::sin(s.k * (s.b - x)) / sl;
    }

    double continuous_solution_xx(const ModelProblemSpec& s, double x)
    {
        s.validate();
        const double d = s.k * s.k - s.kappa * s.kappa;
        const double L = s.length();
        const double ua = std::cos(s.kappa * s.a) / d, ub = std::cos(s.kappa * s.b) / d;
        const double sl = std::sin(s.k * L);
        const double k2 = s.k * s.k;
        return -s.kappa * s.kappa * std::cos(s.kappa * x) / d + k2 * ub * std::sin(s.k * (x - s.a)) / sl + k2 * ua * std::sin(s.k * (s.b - x)) / sl;
    }

    std::vector<double> discrete_solution_closed_form(const ModelProblemSpec& s)
    {
        s.validate();
        if (s.order != 2)
            throw std::invalid_argument("the closed-form discrete solution is for p = 2");
        const double dx = s.dx();
        if (s.k * dx >= 2.0)
            throw std::invalid_argument("evanescent regime: k dx >= 2");
        const double kt = 2.0 / dx * std::asin(s.k * dx / 2.0);
        const double kappa_t = std::sin(s.kappa * dx / 2.0) / (dx / 2.0);
        const double d = s.k * s.k - kappa_t * kappa_t;
        const double L = s.length();
        const double sl = std::sin(kt * L);
        if (std::abs(sl) < 1e-14)
            throw std::invalid_argument("discrete problem is singular (sin(k_tilde L) ~ 0)");

        std::vector<double> U(s.cells + 1);
        const double u0 = std::cos(s.kappa * s.a) / d, uN = std::cos(s.kappa * s.b) / d;
        for (int j = 0; j <= s.cells; ++j)
        {
            const double x = s.a + j * dx;
            U[j] = std::cos(s.kappa * x) / d - uN * std::sin(kt * (x - s.a)) / sl - u0 * std::sin(kt * (s.b - x)) / sl;
        }
        // the boundary values vanish analytically
        U.front() = 0.0;
        U.back() = 0.0;
        return U;
    }

    double solution_scale(const ModelProblemSpec& s)
    {
        return 1.0 / (std::abs(s.k * s.k - s.kappa * s.kappa) * std::abs(std::sin(s.k * s.length())));
    }

    double model_problem_error(const ModelProblemSpec& s)
    {
        const auto U = discrete_solution_closed_form(s);
        double err = 0.0;
        for (int j = 0; j <= s.cells; ++j)
            err = std::max(err, std::abs(U[j] - continuous_solution(s, s.a + j * s.dx())));
        return err / solution_scale(s);
    }

    AmplitudePhaseErrors amplitude_phase_errors(const ModelProblemSpec& s)
    {
        s.validate();
        const double L = s.length();
        const double kdx = s.k * s.dx(), qdx = s.kappa * s.dx();
        const double kL = s.k * L;

        AmplitudePhaseErrors e;
        e.amplitude = k_h_constant * kL / std::abs(std::tan(kL)) * kdx * kdx +
                      k_f_constant / std::abs(std::pow(s.k / s.kappa, 2) - 1.0) * qdx * qdx;
        e.phase = k_h_constant * kL * kdx * kdx;
        e.particular = k_f_constant * s.kappa * s.kappa / std::abs(s.k * s.k - s.kappa * s.kappa) * qdx * qdx;

        const double m = std::max(1.0, std::round(kL / pi));
        e.nearest_km = m * pi / L;
        e.delta_k = s.k - e.nearest_km;
        e.amplification = k_h_constant * e.nearest_km / std::abs(e.delta_k) * kdx * kdx;
        return e;
    }
}
