#include "waveholtz/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wh
{
    GridField gaussian_source(const CartesianGrid& grid, double a_g, double b_g, std::array<double, 2> x0)
    {
        for (int m = 0; m < grid.dim(); ++m)
            if (x0[m] < grid.lower(m) || x0[m] > grid.upper(m))
                throw std::invalid_argument("source centre lies outside the grid");
        GridField f(grid);
        const int nj = grid.dim() > 1 ? grid.points(1) : 1;
        for (int j = 0; j < nj; ++j)
            for (int i = 0; i < grid.points(0); ++i)
            {
                double r2 = std::pow(grid.coord(0, i) - x0[0], 2);
                if (grid.dim() > 1)
                    r2 += std::pow(grid.coord(1, j) - x0[1], 2);
                f.at(i, j) = a_g * std::exp(-b_g * r2);
            }
        f.enforce_boundary();
        return f;
    }

    double DeflationSet::gram_error() const
    {
        double err = 0.0;
        for (std::size_t a = 0; a < modes.size(); ++a)
            for (std::size_t b = 0; b < modes.size(); ++b)
                err = std::max(err, std::abs(dot_h(modes[a], modes[b]) - (a == b ? 1.0 : 0.0)));
        return err;
    }

    std::vector<std::size_t> nearest_modes(std::span<const double> eigenvalues, double omega, std::size_t count)
    {
        std::vector<std::size_t> idx(eigenvalues.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(eigenvalues[a] - omega) < std::abs(eigenvalues[b] - omega); });
        idx.resize(std::min(count, idx.size()));
        return idx;
    }

    std::vector<std::size_t> slowest_modes(const RatePrediction& prediction, std::size_t count)
    {
        std::vector<std::size_t> idx(prediction.abs_beta.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return prediction.abs_beta[a] > prediction.abs_beta[b]; });
        std::size_t keep = std::min(count, idx.size());
        if (keep == 0)
            return {};
        const double last = prediction.abs_beta[idx[keep - 1]];
        while (keep < idx.size() && std::abs(prediction.abs_beta[idx[keep]] - last) <= 1e-12 * std::max(last, 1e-300))
            ++keep;
        idx.resize(keep);
        return idx;
    }

    DeflationSet deflation_from_sines(const DiscreteOperator& op, std::span<const std::size_t> spectrum_indices)
    {
        if (!op.grid().all(Boundary::Dirichlet))
            throw std::invalid_argument("sine deflation modes need an all-Dirichlet grid");
        const auto spectrum = symbolic_spectrum(op);
        DeflationSet d;
        for (std::size_t k : spectrum_indices)
        {
            if (k >= spectrum.size())
                throw std::out_of_range("deflation index out of range");
            d.lambdas.push_back(spectrum[k].lambda);
            d.modes.push_back(sine_mode(op.grid(), spectrum[k].index));
            d.spectrum_index.push_back(k);
        }
        return d;
    }

    DeflationSet deflation_from_dense(const DiscreteOperator& op, std::span<const std::size_t> spectrum_indices)
    {
        const CartesianGrid& g = op.grid();
        const std::size_t n = g.num_unknowns();
        DenseMatrix A = to_dense(assemble_operator(op), n);
        for (double& a : A.data)
            a = -a;
        // the reflection closure keeps the matrix symmetric up to rounding
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = j + 1; i < n; ++i)
            {
                const double s = 0.5 * (A(i, j) + A(j, i));
                A(i, j) = A(j, i) = s;
            }
        const EigenDecomposition eig = dense_symmetric_eig(A);
        const double scale = 1.0 / std::sqrt(g.cell_volume());

        DeflationSet d;
        std::vector<double> col(n);
        for (std::size_t k : spectrum_indices)
        {
            if (k >= n)
                throw std::out_of_range("deflation index out of range");
            d.lambdas.push_back(std::sqrt(std::max(0.0, eig.values[k])));
            for (std::size_t i = 0; i < n; ++i)
                col[i] = eig.vectors(i, k) * scale;
            GridField phi(g);
            phi.scatter_unknowns(col);
            d.modes.push_back(std::move(phi));
            d.spectrum_index.push_back(k);
        }
        return d;
    }

    RateMeasurement measure_rate(std::span<const double> residuals, int periods, int window)
    {
        if (window < 1 || residuals.size() < static_cast<std::size_t>(window) + 1)
            throw std::invalid_argument("rate measurement needs at least " + std::to_string(window + 1) + " residuals");
        if (periods < 1)
            throw std::invalid_argument("number of periods must be positive");
        const std::size_t last = residuals.size() - 1;
        double log_sum = 0.0;
        for (std::size_t k = last - window + 1; k <= last; ++k)
            log_sum += std::log(residuals[k] / residuals[k - 1]);
        const double cr = std::exp(log_sum / window);
        return {cr, std::pow(cr, 1.0 / periods)};
    }

    TimeCorrection make_correction(const HelmholtzProblem& problem, const WaveHoltzOptions& options)
    {
        switch (options.mode)
        {
        case TimeMode::Explicit:
            return correct_explicit(problem.omega, problem.grid, problem.order, problem.wave_speed, options.steps_per_period);
        case TimeMode::Implicit:
            return correct_implicit(problem.omega, options.steps_per_period);
        case TimeMode::Continuous:
            break;
        }
        throw std::invalid_argument("solves need an explicit or implicit time-stepping mode");
    }

    void check_frequency(const HelmholtzProblem& problem)
    {
        if (!problem.grid.all(Boundary::Dirichlet) && !problem.grid.all(Boundary::Periodic))
            return;
        const auto eigs = discrete_eigenvalues_symbolic(problem.op());
        for (std::size_t m = 0; m < eigs.size(); ++m)
            if (std::abs(problem.omega - eigs[m]) < 1e-10 * problem.omega)
                throw std::domain_error("frequency " + std::to_string(problem.omega) + " coincides with discrete eigenvalue " + std::to_string(m));
    }

    namespace
    {
        std::shared_ptr<ImplicitSolver> inner_solver(const HelmholtzProblem& p, const WaveHoltzOptions& o, const TimeCorrection& corr)
        {
            if (corr.mode != TimeMode::Implicit)
                return nullptr;
            return make_implicit_solver(p.op(), corr.dt, o.inner, o.inner_tol);
        }

        void validate(const HelmholtzProblem& p)
        {
            if (!(p.forcing.grid() == p.grid))
                throw std::invalid_argument("forcing lives on a different grid");
            if (!(p.omega > 0.0))
                throw std::invalid_argument("frequency must be positive");
        }

        /// adds sum (f, Phi)_h / (omega^2 - lambda^2) Phi
        void add_deflated_components(GridField& u, const HelmholtzProblem& p, const DeflationSet& d)
        {
            for (std::size_t m = 0; m < d.size(); ++m)
            {
                const double denom = p.omega * p.omega - d.lambdas[m] * d.lambdas[m];
                if (std::abs(denom) <= 1e-12 * p.omega * p.omega)
                    throw std::domain_error("deflated mode " + std::to_string(d.spectrum_index[m]) + " is resonant with the frequency");
                u.axpy(dot_h(p.forcing, d.modes[m]) / denom, d.modes[m]);
            }
        }

        void finish_run(WaveHoltzRun& run, std::chrono::steady_clock::time_point start, const WaveHoltzMap& map)
        {
            run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            run.seconds_per_iteration = run.iterations > 0 ? run.seconds / run.iterations : 0.0;
            run.wave_solves = map.wave_solves();
            run.inner_iterations = map.inner_iterations();
            run.correction = map.correction();
            run.alpha = map.alpha();
            if (run.residuals.size() >= 6 && run.residuals.back() > 0.0)
            {
                const auto r = measure_rate(run.residuals, map.periods());
                run.cr = r.cr;
                run.ecr = r.ecr;
            }
            else
            {
                run.cr = run.ecr = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }

    WaveHoltzOperator::WaveHoltzOperator(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet* deflation)
        : problem_{problem}, deflation_{deflation && !deflation->empty() ? deflation : nullptr},
          map_{problem.op(), make_correction(problem, options), options.periods, options.alpha,
               inner_solver(problem, options, make_correction(problem, options))},
          scratch_{problem.grid}
    {
        validate(problem);
        if (deflation_)
            for (const auto& phi : deflation_->modes)
                if (!(phi.grid() == problem.grid))
                    throw std::invalid_argument("deflation mode lives on a different grid");
    }

    void WaveHoltzOperator::project(GridField& v) const
    {
        if (!deflation_)
            return;
        for (const auto& phi : deflation_->modes)
            v.axpy(-dot_h(v, phi), phi);
    }

    GridField WaveHoltzOperator::filter(const GridField& v, bool with_forcing)
    {
        GridField w = map_.apply(v, with_forcing ? &problem_.forcing : nullptr);
        project(w);
        return w;
    }

    GridField WaveHoltzOperator::apply_A(const GridField& v)
    {
        GridField w = filter(v, false);
        w.scale(-1.0);
        w.axpy(1.0, v);
        return w;
    }

    GridField WaveHoltzOperator::rhs()
    {
        GridField zero(problem_.grid);
        return filter(zero, true);
    }

    LinearOperator WaveHoltzOperator::as_linear_operator()
    {
        LinearOperator A;
        A.size = problem_.grid.num_unknowns();
        A.symmetric = false;
        A.apply = [this](std::span<const double> x, std::span<double> y) {
            scratch_.scatter_unknowns(x);
            apply_A(scratch_).gather_unknowns(y);
        };
        return A;
    }

    HelmholtzSolution deflated_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet& deflation)
    {
        const auto start = std::chrono::steady_clock::now();
        WaveHoltzOperator W(problem, options, &deflation);
        HelmholtzSolution sol;
        sol.run.method = deflation.empty() ? "fpi" : "deflated-fpi";
        GridField v(problem.grid);

        for (int k = 0; k < options.maxit; ++k)
        {
            GridField next = W.filter(v, true);
            GridField diff = next;
            diff.axpy(-1.0, v);
            const double r = norm_2h(diff);
            v = std::move(next);
            sol.run.residuals.push_back(r);
            sol.run.iterations = k + 1;
            if (r <= options.tol)
            {
                sol.run.converged = true;
                break;
            }
            if (!std::isfinite(r))
                break;
        }
        if (!deflation.empty())
            add_deflated_components(v, problem, deflation);
        sol.u = std::move(v);
        finish_run(sol.run, start, W.map());
        return sol;
    }

    HelmholtzSolution fpi_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options)
    {
        return deflated_solve(problem, options, DeflationSet{});
    }

    HelmholtzSolution krylov_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet* deflation)
    {
        const auto start = std::chrono::steady_clock::now();
        WaveHoltzOperator W(problem, options, deflation);
        HelmholtzSolution sol;
        sol.run.method = (deflation && !deflation->empty()) ? "deflated-gmres" : "gmres";

        const std::size_t n = problem.grid.num_unknowns();
        const double sqrt_n = std::sqrt(static_cast<double>(n));
        std::vector<double> b = W.rhs().unknowns();
        std::vector<double> x(n, 0.0);
        const double bnorm = norm2(b);

        if (bnorm > 0.0)
        {
            // ||r||_2h <= tol  <=>  ||r||_2 / ||b||_2 <= tol sqrt(N) / ||b||_2
            const double rel_tol = options.tol * sqrt_n / bnorm;
            const SolveReport rep = gmres_solve(W.as_linear_operator(), b, x, rel_tol, options.restart, options.maxit);
            sol.run.iterations = rep.iterations;
            sol.run.converged = rep.converged;
            for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
                sol.run.residuals.push_back(rep.residual_history[k] / sqrt_n);
        }
        else
        {
            sol.run.converged = true;
        }

        sol.u = GridField(problem.grid);
        sol.u.scatter_unknowns(x);
        if (deflation && !deflation->empty())
            add_deflated_components(sol.u, problem, *deflation);
        finish_run(sol.run, start, W.map());
        return sol;
    }

    namespace
    {
        std::vector<Triplet> helmholtz_triplets(const HelmholtzProblem& p)
        {
            auto t = assemble_operator(p.op());
            const std::size_t n = p.grid.num_unknowns();
            for (std::size_t i = 0; i < n; ++i)
                t.push_back({i, i, p.omega * p.omega});
            return t;
        }

        double triplet_residual(const std::vector<Triplet>& t, std::span<const double> x, std::span<const double> b)
        {
            std::vector<double> r(b.begin(), b.end());
            for (const auto& e : t)
                r[e.row] -= e.value * x[e.col];
            const double bn = norm2(b);
            return bn > 0.0 ? norm2(r) / bn : norm2(r);
        }
    }

    GridField direct_solve(const HelmholtzProblem& problem, DirectReport* report)
    {
        validate(problem);
        check_frequency(problem);
        const std::size_t n = problem.grid.num_unknowns();
        const auto t = helmholtz_triplets(problem);
        const std::vector<double> f = problem.forcing.unknowns();

        std::vector<double> x;
        std::string method;
        if (problem.grid.all(Boundary::Dirichlet))
        {
            x = banded_solve(t, n, f);
            method = "banded-lu";
        }
        else
        {
            if (n > 4096)
                throw std::length_error("dense direct solve limited to 4096 unknowns");
            x = dense_solve(to_dense(t, n), f);
            method = "dense-lu";
        }
        if (report)
        {
            report->relative_residual = triplet_residual(t, x, f);
            report->method = method;
        }
        GridField u(problem.grid);
        u.scatter_unknowns(x);
        return u;
    }

    SolveReport helmholtz_gmres_baseline(const HelmholtzProblem& problem, double tol, int restart, int maxit, bool jacobi)
    {
        validate(problem);
        const std::size_t n = problem.grid.num_unknowns();
        const auto t = helmholtz_triplets(problem);

        // compressed rows for fast products
        std::vector<std::size_t> row_ptr(n + 1, 0);
        for (const auto& e : t)
            ++row_ptr[e.row + 1];
        for (std::size_t i = 0; i < n; ++i)
            row_ptr[i + 1] += row_ptr[i];
        std::vector<std::size_t> cols(t.size());
        std::vector<double> vals(t.size());
        std::vector<double> diag(n, 0.0);
        {
            std::vector<std::size_t> fill(row_ptr.begin(), row_ptr.end() - 1);
            for (const auto& e : t)
            {
                cols[fill[e.row]] = e.col;
                vals[fill[e.row]++] = e.value;
                if (e.row == e.col)
                    diag[e.row] += e.value;
            }
        }

        LinearOperator A;
        A.size = n;
        A.apply = [&](std::span<const double> x, std::span<double> y) {
            for (std::size_t i = 0; i < n; ++i)
            {
                double s = 0.0;
                for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                    s += vals[k] * x[cols[k]];
                y[i] = s;
            }
        };
        ApplyFn precond;
        if (jacobi)
            precond = [&](std::span<const double> r, std::span<double> z) {
                for (std::size_t i = 0; i < n; ++i)
                    z[i] = r[i] / diag[i];
            };

        const std::vector<double> f = problem.forcing.unknowns();
        std::vector<double> x(n, 0.0);
        return gmres_solve(A, f, x, tol, restart, maxit, precond);
    }
}
