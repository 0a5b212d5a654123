/// @brief Acceptance runner: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/core.h>
#include <lapacke.h>

#include "waveholtz/experiments.hpp"
#include "waveholtz/pollution.hpp"
#include "waveholtz/solver.hpp"

using namespace wh;
using std::numbers::pi;
using boost::multiprecision::cpp_int;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::string detail;

        void require(bool ok, const std::string& what)
        {
            if (!ok)
            {
                pass = false;
                detail += (detail.empty() ? "" : "; ") + what;
            }
        }
    };

    // -- independent oracles

    /// (2/T) sum_n sigma_n (cos(w t_n) - a/2) cos(l t_n) dt in long double
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

    /// b_mu from the Taylor coefficients of 4 asin^2(eta) = sum b_mu 4^{mu+1} eta^{2 mu + 2}
    std::vector<Rational> b_from_series(int count)
    {
        const int terms = count + 1;
        std::vector<Rational> a(2 * terms, Rational(0));
        for (int n = 0; n < terms; ++n)
        {
            cpp_int f2n = 1, fn = 1, four_n = 1;
            for (int i = 2; i <= 2 * n; ++i)
                f2n *= i;
            for (int i = 2; i <= n; ++i)
                fn *= i;
            for (int i = 0; i < n; ++i)
                four_n *= 4;
            a[2 * n + 1] = Rational(f2n, four_n * fn * fn * (2 * n + 1));
        }
        std::vector<Rational> sq(a.size() * 2, Rational(0));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a.size(); ++j)
                sq[i + j] += a[i] * a[j];
        std::vector<Rational> b;
        cpp_int four = 4;
        for (int mu = 0; mu < count; ++mu)
        {
            b.push_back(4 * sq[2 * mu + 2] / Rational(four));
            four *= 4;
        }
        return b;
    }

    /// Thomas solve of U'' + k^2 U = cos(kappa x) with homogeneous Dirichlet ends, second order
    std::vector<double> model_fd(const ModelProblemSpec& s)
    {
        const double dx = s.dx();
        const std::size_t n = s.cells - 1;
        Tridiagonal T{Vector(n, 1 / (dx * dx)), Vector(n, -2 / (dx * dx) + s.k * s.k), Vector(n, 1 / (dx * dx))};
        Vector rhs(n);
        for (std::size_t j = 0; j < n; ++j)
            rhs[j] = std::cos(s.kappa * (s.a + (j + 1) * dx));
        const Vector x = thomas_solve(T, rhs);
        std::vector<double> U(s.cells + 1, 0.0);
        std::copy(x.begin(), x.end(), U.begin() + 1);
        return U;
    }

    double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
    {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            mx += std::log(x[i]);
            my += std::log(y[i]);
        }
        mx /= x.size();
        my /= y.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
            sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
        }
        return sxy / sxx;
    }

    // -- WaveHoltz helpers

    double rel_max_diff(const GridField& a, const GridField& ref)
    {
        double d = 0.0, s = 0.0;
        ref.for_each_unknown([&](int i, int j) {
            d = std::max(d, std::abs(a(i, j) - ref(i, j)));
            s = std::max(s, std::abs(ref(i, j)));
        });
        return s > 0.0 ? d / s : d;
    }

    HelmholtzProblem gaussian_problem(const CartesianGrid& g, int order, double omega)
    {
        return HelmholtzProblem{g, order, 1.0, omega, gaussian_source(g, -100.0, 20.0, {0.4, 0.4})};
    }

    WaveHoltzOptions options(TimeMode mode, int periods, int steps, double tol)
    {
        WaveHoltzOptions o;
        o.mode = mode;
        o.periods = periods;
        o.steps_per_period = steps;
        o.tol = tol;
        o.maxit = 20000;
        return o;
    }

    /// lambda tilde of every discrete eigenvalue under the run's time discretization
    std::vector<double> mapped_eigenvalues(const HelmholtzProblem& p, const TimeCorrection& c)
    {
        std::vector<double> out;
        for (double l : discrete_eigenvalues_symbolic(p.op()))
            out.push_back(c.mode == TimeMode::Implicit ? lambda_tilde_implicit(l, c.dt) : lambda_tilde_explicit(l, c.dt));
        return out;
    }

    /// max |beta_d(lambda tilde)| over the modes not excluded, computed here from the closed form
    double oracle_mu(const HelmholtzProblem& p, const WaveHoltzOptions& o, std::span<const std::size_t> excluded = {})
    {
        const TimeCorrection c = make_correction(p, o);
        const double alpha = o.alpha ? *o.alpha : alpha_d(c.omega_tilde * c.dt);
        const double T = o.periods * c.steps_per_period * c.dt;
        const auto lt = mapped_eigenvalues(p, c);
        double mu = 0.0;
        for (std::size_t m = 0; m < lt.size(); ++m)
            if (std::find(excluded.begin(), excluded.end(), m) == excluded.end())
                mu = std::max(mu, std::abs(beta_d(lt[m], c.omega_tilde, T, c.dt, alpha)));
        return mu;
    }

    std::string mode_name(TimeMode m) { return m == TimeMode::Implicit ? "implicit" : "explicit"; }

    // -- criteria

    Outcome filter_identities()
    {
        Outcome out;
        double worst = 0.0;
        for (int nt : {5, 7, 10, 20, 100})
            for (int np : {1, 2, 4})
            {
                const double omega = 4.1, dt = 2 * pi / omega / nt, T = np * nt * dt;
                worst = std::max(worst, std::abs(beta(omega, omega, T, 0.5) - 1.0));
                worst = std::max(worst, std::abs(beta_d(omega, omega, T, dt, alpha_d(omega * dt)) - 1.0));
                worst = std::max(worst, std::abs(beta_d(omega, omega, T, dt, 0.5) - 1.0));
            }
        out.require(worst <= 1e-12, fmt::format("|beta(omega) - 1| = {:.2e}", worst));

        std::mt19937 gen(2024);
        std::uniform_real_distribution<double> lam(0.0, 5.0), om(0.3, 10.0), al(0.0, 1.0);
        std::uniform_int_distribution<int> nts(5, 40), nps(1, 4);
        double quad = 0.0;
        for (int trial = 0; trial < 200; ++trial)
        {
            const double omega = om(gen), lambda = lam(gen) * omega, alpha = al(gen);
            const int nt = nts(gen), steps = nt * nps(gen);
            const double dt = 2 * pi / omega / nt;
            quad = std::max(quad, std::abs(beta_d(lambda, omega, steps * dt, dt, alpha) - trapezoid_filter(lambda, omega, steps, dt, alpha)));
        }
        out.require(quad <= 1e-11, fmt::format("closed form vs quadrature {:.2e}", quad));
        out.detail = fmt::format("max |beta - 1| {:.2e}, closed form vs quadrature {:.2e} (200 tuples)", worst, quad) +
                     (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome alpha_correction()
    {
        Outcome out;
        const double omega = 2.0;
        const int nt = 5;
        const double dt = 2 * pi / omega / nt, T = nt * dt, h = 1e-6 * omega;
        auto slope = [&](double alpha) { return (beta_d(omega + h, omega, T, dt, alpha) - beta_d(omega - h, omega, T, dt, alpha)) / (2 * h); };
        const double corrected = std::abs(slope(alpha_d(omega * dt))), plain = std::abs(slope(0.5));
        const double gain = plain / std::max(corrected, 1e-300);
        out.require(gain >= 100.0, "derivative reduction below 100");

        std::vector<double> xs, d;
        for (double x : {0.2, 0.1, 0.05, 0.025, 0.0125})
        {
            xs.push_back(x);
            d.push_back(std::abs(alpha_d(x) - 0.5));
        }
        const double order = loglog_slope(xs, d);
        out.require(std::abs(order - 2.0) <= 0.05, "alpha_d - 1/2 not O(dt^2)");
        out.detail = fmt::format("|dbeta_d/dlambda|: {:.2e} (alpha_d) vs {:.2e} (1/2), ratio {:.3g}; alpha_d - 1/2 order {:.4f}", corrected, plain, gain,
                                 order) +
                     (out.pass ? "" : " | " + out.detail);
        return out;
    }

    struct SweepCase
    {
        std::string label;
        HelmholtzProblem problem;
        WaveHoltzOptions opts;
        double mu = 0.0;
        WaveHoltzRun fpi;
        WaveHoltzRun gmres;
    };

    std::vector<SweepCase> rate_sweep_cases()
    {
        std::vector<SweepCase> cases;
        std::vector<std::pair<CartesianGrid, double>> grids;
        for (int n : {16, 32, 64})
            grids.emplace_back(CartesianGrid::interval(n), 5.5);
        grids.emplace_back(CartesianGrid::rectangle(32, 32), 11.0);
        for (const auto& [g, omega] : grids)
            for (int order : {2, 4})
                for (TimeMode mode : {TimeMode::Explicit, TimeMode::Implicit})
                    for (int np : {1, 2, 4})
                    {
                        SweepCase c;
                        c.label = fmt::format("{}D N={} p={} {} N_p={}", g.dim(), g.cells(0), order, mode_name(mode), np);
                        c.problem = gaussian_problem(g, order, omega);
                        c.opts = options(mode, np, 10, 1e-11);
                        cases.push_back(std::move(c));
                    }
        return cases;
    }

    /// shared by the rate oracle and the GMRES comparison
    std::vector<SweepCase>& sweep()
    {
        static std::vector<SweepCase> cases = [] {
            auto cs = rate_sweep_cases();
            parallel_for(cs.size(), [&](std::size_t k) {
                SweepCase& c = cs[k];
                c.mu = oracle_mu(c.problem, c.opts);
                c.fpi = fpi_solve(c.problem, c.opts).run;
                c.gmres = krylov_solve(c.problem, c.opts).run;
            });
            return cs;
        }();
        return cases;
    }

    Outcome rate_oracle()
    {
        Outcome out;
        double worst = 0.0;
        std::string worst_label;
        for (const SweepCase& c : sweep())
        {
            if (!c.fpi.converged || !std::isfinite(c.fpi.cr))
            {
                out.require(false, c.label + " did not produce a rate");
                continue;
            }
            const double d = std::abs(c.fpi.cr - c.mu) / c.mu;
            if (d > worst)
            {
                worst = d;
                worst_label = c.label;
            }
            out.require(d <= 0.05, fmt::format("{}: CR {:.4f} vs mu {:.4f}", c.label, c.fpi.cr, c.mu));
        }
        out.detail = fmt::format("{} cases, worst |CR - mu|/mu = {:.3e} ({})", sweep().size(), worst, worst_label) + (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome exactness()
    {
        Outcome out;
        struct Case
        {
            CartesianGrid g;
            int order;
            double omega;
            TimeMode mode;
            int steps;
        };
        // the fixed-point test stops on the update size, so the error left is about tol mu / (1 - mu); on the
        // square omega = 5.5 keeps mu near 0.8-0.96 where tol = 1e-12 certifies the 1e-10 comparison
        std::vector<Case> cases;
        for (int order : {2, 4})
            for (TimeMode mode : {TimeMode::Explicit, TimeMode::Implicit})
            {
                cases.push_back({CartesianGrid::interval(32), order, 5.5, mode, 10});
                cases.push_back({CartesianGrid::rectangle(32, 32), order, 5.5, mode, 10});
            }
        cases.push_back({CartesianGrid::interval(32), 2, 5.5, TimeMode::Implicit, 5});
        cases.push_back({CartesianGrid::interval(64), 4, 5.5, TimeMode::Implicit, 5});
        cases.push_back({CartesianGrid::rectangle(32, 32), 2, 5.5, TimeMode::Implicit, 5});
        cases.push_back({CartesianGrid::rectangle(32, 32), 4, 5.5, TimeMode::Implicit, 5});
        std::vector<double> diffs(cases.size());
        std::vector<int> ok(cases.size());
        parallel_for(cases.size(), [&](std::size_t k) {
            const Case& c = cases[k];
            const HelmholtzProblem p = gaussian_problem(c.g, c.order, c.omega);
            const HelmholtzSolution s = fpi_solve(p, options(c.mode, 1, c.steps, 1e-12));
            ok[k] = s.run.converged;
            diffs[k] = rel_max_diff(s.u, direct_solve(p));
        });
        double worst = 0.0;
        for (std::size_t k = 0; k < cases.size(); ++k)
        {
            const Case& c = cases[k];
            const std::string label = fmt::format("{}D N={} p={} {} N_t={}", c.g.dim(), c.g.cells(0), c.order, mode_name(c.mode), c.steps);
            out.require(ok[k] != 0, label + " did not converge");
            out.require(diffs[k] <= 1e-10, fmt::format("{}: {:.2e}", label, diffs[k]));
            worst = std::max(worst, diffs[k]);
        }
        out.detail = fmt::format("{} cases incl. implicit N_t=5, worst relative max-norm difference {:.2e}", cases.size(), worst) +
                     (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome implicit_constraint()
    {
        Outcome out;
        double worst = 0.0;
        for (double omega : {0.7, 5.5, 11.0, 40.0})
        {
            bool threw = false;
            try
            {
                correct_implicit(omega, 4);
            }
            catch (const std::invalid_argument&)
            {
                threw = true;
            }
            out.require(threw, fmt::format("N_t=4 accepted at omega={}", omega));
            const TimeCorrection c = correct_implicit(omega, 5);
            const double odt = omega * c.dt;
            worst = std::max(worst, std::abs(std::cos(c.omega_tilde * c.dt) * (1 + odt * odt / 2) - 1.0));
        }
        out.require(worst <= 1e-13, "identity violated");
        out.detail = fmt::format("N_t=4 rejected; |cos(w~ dt)(1 + (w dt)^2/2) - 1| = {:.2e}", worst) + (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome deflation()
    {
        Outcome out;
        std::string parts;
        for (TimeMode mode : {TimeMode::Implicit, TimeMode::Explicit})
        {
            const HelmholtzProblem p = gaussian_problem(CartesianGrid::interval(32), 2, 5.5);
            const WaveHoltzOptions o = options(mode, 1, 10, 1e-12);
            const TimeCorrection c = make_correction(p, o);
            const double alpha = alpha_d(c.omega_tilde * c.dt);
            const RatePrediction full = predict_rate(discrete_eigenvalues_symbolic(p.op()), FilterConfig{c.omega_tilde, 1, c.steps_per_period, alpha, mode},
                                                     c.omega_tilde, alpha);
            const auto slow = slowest_modes(full, 1);
            std::vector<double> sorted = full.abs_beta;
            std::sort(sorted.rbegin(), sorted.rend());
            const double second = oracle_mu(p, o, slow);
            out.require(std::abs(second - sorted[1]) <= 1e-14, "second-largest |beta_d| mismatch");
            const HelmholtzSolution s = deflated_solve(p, o, deflation_from_dense(p.op(), slow));
            const double d = std::abs(s.run.cr - second) / second;
            const double e = rel_max_diff(s.u, direct_solve(p));
            out.require(s.run.converged, mode_name(mode) + " did not converge");
            out.require(d <= 0.05, fmt::format("{}: CR {:.4f} vs {:.4f}", mode_name(mode), s.run.cr, second));
            out.require(e <= 1e-8, fmt::format("{}: vs direct {:.2e}", mode_name(mode), e));
            parts += fmt::format("{}{}: CR {:.4f} (from {:.4f}) vs second |beta_d| {:.4f}, rel diff {:.2e}, vs direct {:.2e}", parts.empty() ? "" : "; ",
                                 mode_name(mode), s.run.cr, full.mu, second, d, e);
        }
        out.detail = parts + (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome gmres_acceleration()
    {
        Outcome out;
        int worst_margin = std::numeric_limits<int>::max();
        for (const SweepCase& c : sweep())
        {
            out.require(c.gmres.converged, c.label + " GMRES did not converge");
            out.require(c.gmres.iterations <= c.fpi.iterations, fmt::format("{}: GMRES {} > FPI {}", c.label, c.gmres.iterations, c.fpi.iterations));
            worst_margin = std::min(worst_margin, c.fpi.iterations - c.gmres.iterations);
        }

        double spec_err = 0.0;
        for (int order : {2, 4})
            for (TimeMode mode : {TimeMode::Implicit, TimeMode::Explicit})
            {
                const HelmholtzProblem p = gaussian_problem(CartesianGrid::interval(16), order, 5.5);
                const WaveHoltzOptions o = options(mode, 1, 10, 1e-12);
                WaveHoltzOperator W(p, o);
                const DenseMatrix A = assemble_dense(W.as_linear_operator());
                const std::size_t n = A.rows;
                std::vector<double> a = A.data, wr(n), wi(n);
                if (LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', int(n), a.data(), int(n), wr.data(), wi.data(), nullptr, 1, nullptr, 1) != 0)
                {
                    out.require(false, "dgeev failed");
                    continue;
                }
                const TimeCorrection c = make_correction(p, o);
                const double alpha = alpha_d(c.omega_tilde * c.dt);
                std::vector<double> expect;
                for (double lt : mapped_eigenvalues(p, c))
                    expect.push_back(1.0 - beta_d(lt, c.omega_tilde, c.steps_per_period * c.dt, c.dt, alpha));
                std::sort(expect.begin(), expect.end());
                std::sort(wr.begin(), wr.end());
                for (std::size_t k = 0; k < n; ++k)
                    spec_err = std::max({spec_err, std::abs(wr[k] - expect[k]), std::abs(wi[k])});
            }
        out.require(spec_err <= 1e-8, fmt::format("spectrum mismatch {:.2e}", spec_err));
        out.detail = fmt::format("{} benchmarks, min FPI - GMRES iterations {}; N=16 spectrum of A vs 1 - beta_d: {:.2e}", sweep().size(), worst_margin,
                                 spec_err) +
                     (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome square_scaling()
    {
        Outcome out;
        ExperimentConfig cfg = ExperimentConfig::for_command("scaling");
        cfg.set("baseline", "0");
        const auto dir = std::filesystem::temp_directory_path() / "waveholtz_acceptance_scaling";
        const ExperimentResult r = run_experiment("scaling", cfg, dir, true);
        std::string summary;
        for (const auto& s : r.summary)
            summary += (summary.empty() ? "" : "; ") + s;
        for (const auto& c : r.checks)
            out.require(c.pass, c.name + (c.detail.empty() ? "" : " [" + c.detail + "]"));
        out.detail = summary + (out.pass ? "" : " | " + out.detail);
        std::filesystem::remove_all(dir);
        return out;
    }

    Outcome ppw_table()
    {
        Outcome out;
        const int ppw[] = {321, 27, 12, 8};
        const double pre[] = {0.51, 0.43, 0.42, 0.42};
        std::string got;
        for (int k = 0; k < 4; ++k)
        {
            const int p = 2 * (k + 1);
            const long n = std::lround(ppw_estimate(p, 100, 1e-2));
            const double c = std::round(ppw_prefactor(p) * 100) / 100;
            out.require(n == ppw[k], fmt::format("PPW p={}: {}", p, n));
            out.require(std::abs(c - pre[k]) < 1e-9, fmt::format("prefactor p={}: {:.2f}", p, c));
            got += fmt::format("{}p={}: {} ({:.2f})", got.empty() ? "" : ", ", p, n, c);
        }
        out.detail = got + (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome b_exact()
    {
        Outcome out;
        const Rational listed[] = {Rational(1), Rational(1, 12), Rational(1, 90), Rational(1, 560), Rational(1, 3150)};
        for (int mu = 0; mu < 5; ++mu)
            out.require(b_coeff_exact(mu) == listed[mu], fmt::format("b_{}", mu));
        const auto series = b_from_series(7);
        for (int mu = 0; mu <= 6; ++mu)
            out.require(b_coeff_exact(mu) == series[mu], fmt::format("series b_{}", mu));
        out.detail = "b_0..b_4 = 1, 1/12, 1/90, 1/560, 1/3150 exactly; series matching agrees through mu = 6" + (out.pass ? "" : std::string(" | ") + out.detail);
        return out;
    }

    Outcome dispersion_order()
    {
        Outcome out;
        std::string got;
        for (int p : {2, 4})
        {
            std::vector<double> dxs, errs;
            for (int h = 0; h < 5; ++h)
            {
                const double dx = 0.04 / std::pow(2.0, h);
                dxs.push_back(dx);
                errs.push_back(k_tilde(10.0, dx, p).relative_error);
            }
            const double s = loglog_slope(dxs, errs);
            out.require(std::abs(s - p) <= 0.1, fmt::format("p={} slope {:.4f}", p, s));
            got += fmt::format("slope p={}: {:.4f}; ", p, s);
        }
        // the remainder of the p=2 expansion is fourth order
        std::vector<double> dxs, rems;
        for (double dx : {0.04, 0.02, 0.01, 0.005})
        {
            const double k = 10.0, kdx = k * dx;
            dxs.push_back(dx);
            rems.push_back(std::abs(k_tilde(k, dx, 2).k_tilde - k * (1 + kdx * kdx / 24)));
        }
        const double r = loglog_slope(dxs, rems);
        out.require(std::abs(r - 4.0) <= 0.1, fmt::format("p=2 expansion remainder order {:.4f}", r));
        out.detail = got + fmt::format("p=2 expansion remainder order {:.4f}", r) + (out.pass ? "" : " | " + out.detail);
        return out;
    }

    Outcome model_problem()
    {
        Outcome out;
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> kd(1.0, 40.0), kap(0.5, 20.0);
        std::uniform_int_distribution<int> cells(20, 400);
        double worst = 0.0;
        int cases = 0;
        while (cases < 100)
        {
            ModelProblemSpec s{kd(gen), kap(gen), 0.0, 1.0, cells(gen), 2};
            // keep the draw away from the continuous and discrete resonances
            if (std::abs(std::sin(s.k)) < 0.05 || std::abs(s.k - s.kappa) < 0.1 || s.k * s.dx() > 1.0)
                continue;
            const auto U = discrete_solution_closed_form(s);
            const auto ref = model_fd(s);
            double d = 0.0, m = 0.0;
            for (std::size_t j = 0; j < U.size(); ++j)
            {
                d = std::max(d, std::abs(U[j] - ref[j]));
                m = std::max(m, std::abs(ref[j]));
            }
            worst = std::max(worst, d / std::max(m, 1.0));
            ++cases;
        }
        out.require(worst <= 1e-12, fmt::format("closed form vs Thomas {:.2e}", worst));

        const double km = 10 * pi;
        std::vector<double> dks, errs;
        for (double dk : {0.3, 0.1, 0.03, 0.01})
        {
            dks.push_back(dk);
            errs.push_back(model_problem_error(ModelProblemSpec{km + dk, 3.0, 0.0, 1.0, 2000, 2}));
        }
        const double slope = loglog_slope(dks, errs);
        out.require(std::abs(slope + 1.0) <= 0.1, fmt::format("amplification slope {:.4f}", slope));
        out.detail = fmt::format("100 cases, closed form vs Thomas {:.2e}; error vs dk log-log slope {:.4f}", worst, slope) + (out.pass ? "" : " | " + out.detail);
        return out;
    }
}

int main()
{
    struct Criterion
    {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "filter identities", filter_identities},
        {2, "alpha_d correction", alpha_correction},
        {3, "rate oracle", rate_oracle},
        {4, "exactness vs direct solve", exactness},
        {5, "implicit N_t >= 5 constraint", implicit_constraint},
        {6, "deflation", deflation},
        {7, "GMRES acceleration", gmres_acceleration},
        {8, "square scaling", square_scaling},
        {9, "PPW table", ppw_table},
        {10, "b_mu exactness", b_exact},
        {11, "dispersion order", dispersion_order},
        {12, "model-problem closed form", model_problem},
    };

    int failed = 0;
    for (const auto& c : criteria)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception& e)
        {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
