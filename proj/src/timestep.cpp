#include "waveholtz/timestep.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "waveholtz/multigrid.hpp"

namespace wh
{
    using std::numbers::pi;

    double TimeCorrection::period() const { return 2.0 * pi / omega_tilde; }

    double cfl_constant(int order)
    {
        switch (order)
        {
        case 2:
            return 1.0;
        case 4:
            return std::sqrt(3.0) / 2.0;
        default:
            throw std::invalid_argument("no stability constant for order " + std::to_string(order));
        }
    }

    TimeCorrection correct_explicit(double omega, const CartesianGrid& grid, int order, double wave_speed, int min_steps)
    {
        if (!(omega > 0.0))
            throw std::invalid_argument("frequency must be positive");
        double inv_h2 = 0.0;
        for (int m = 0; m < grid.dim(); ++m)
            inv_h2 += 1.0 / (grid.spacing(m) * grid.spacing(m));
        const double C = cfl_constant(order);

        // dt shrinks monotonically as N_t grows, so the search terminates
        int steps = std::max(min_steps, 5);
        double dt = 2.0 / omega * std::sin(pi / steps);
        while (wave_speed * dt * std::sqrt(inv_h2) >= C)
        {
            ++steps;
            dt = 2.0 / omega * std::sin(pi / steps);
        }

        TimeCorrection tc;
        tc.mode = TimeMode::Explicit;
        tc.omega = omega;
        tc.dt = dt;
        tc.steps_per_period = steps;
        tc.omega_tilde = 2.0 * pi / (steps * dt);
        return tc;
    }

    TimeCorrection correct_implicit(double omega, int steps)
    {
        if (!(omega > 0.0))
            throw std::invalid_argument("frequency must be positive");
        if (steps < 5)
            throw std::invalid_argument("implicit time-stepping needs at least 5 time-steps per period");
        TimeCorrection tc;
        tc.mode = TimeMode::Implicit;
        tc.omega = omega;
        tc.steps_per_period = steps;
        tc.dt = std::sqrt(2.0 / std::cos(2.0 * pi / steps) - 2.0) / omega;
        tc.omega_tilde = 2.0 * pi / (steps * tc.dt);
        return tc;
    }

    namespace
    {
        /// (I - theta L) applied through grid fields
        class FieldOperator
        {
        public:
            FieldOperator(const DiscreteOperator& op, double theta) : op_{op}, theta_{theta}, u_{op.grid()}, out_{op.grid()} {}

            void operator()(std::span<const double> x, std::span<double> y)
            {
                u_.scatter_unknowns(x);
                apply_operator(op_, u_, out_);
                out_.gather_unknowns(y);
                for (std::size_t k = 0; k < y.size(); ++k)
                    y[k] = x[k] - theta_ * y[k];
            }

        private:
            DiscreteOperator op_;
            double theta_;
            GridField u_, out_;
        };

        class ThomasSolver final : public ImplicitSolver
        {
        public:
            ThomasSolver(const DiscreteOperator& op, double theta)
            {
                const auto& g = op.grid();
                const std::size_t n = g.num_unknowns();
                const double a = theta * op.wave_speed() * op.wave_speed() / (g.spacing(0) * g.spacing(0));
                T_.sub.assign(n, -a);
                T_.sup.assign(n, -a);
                T_.diag.assign(n, 1.0 + 2.0 * a);
            }

            SolveReport solve(std::span<const double> b, std::span<double> x) override
            {
                const Vector sol = thomas_solve(T_, b);
                std::copy(sol.begin(), sol.end(), x.begin());
                SolveReport rep;
                rep.iterations = 1;
                rep.converged = true;
                rep.work_units = 1;
                return rep;
            }

            const char* name() const override { return "thomas"; }

        private:
            Tridiagonal T_;
        };

        class MultigridSolver final : public ImplicitSolver
        {
        public:
            MultigridSolver(const DiscreteOperator& op, double theta, double tol, int maxit)
                : mg_{op.grid(), 1.0, theta * op.wave_speed() * op.wave_speed()}, tol_{tol}, maxit_{maxit}
            {
            }

            SolveReport solve(std::span<const double> b, std::span<double> x) override { return mg_.solve(b, x, tol_, maxit_); }
            const char* name() const override { return "multigrid"; }

        private:
            MultigridHierarchy mg_;
            double tol_;
            int maxit_;
        };

        class CgSolver final : public ImplicitSolver
        {
        public:
            CgSolver(const DiscreteOperator& op, double theta, double tol, int maxit, bool mg_preconditioned)
                : apply_{std::make_shared<FieldOperator>(op, theta)}, tol_{tol}, maxit_{maxit}
            {
                A_.apply = [f = apply_](std::span<const double> x, std::span<double> y) { (*f)(x, y); };
                A_.size = op.grid().num_unknowns();
                A_.symmetric = true;
                if (mg_preconditioned)
                {
                    // V-cycle of the second-order operator as a symmetric preconditioner
                    mg_ = std::make_shared<MultigridHierarchy>(op.grid(), 1.0, theta * op.wave_speed() * op.wave_speed());
                    precond_ = [mg = mg_](std::span<const double> r, std::span<double> z) {
                        std::fill(z.begin(), z.end(), 0.0);
                        mg->vcycle(r, z);
                    };
                }
            }

            SolveReport solve(std::span<const double> b, std::span<double> x) override { return cg_solve(A_, b, x, tol_, maxit_, precond_); }
            const char* name() const override { return mg_ ? "pcg-multigrid" : "cg"; }

        private:
            std::shared_ptr<FieldOperator> apply_;
            std::shared_ptr<MultigridHierarchy> mg_;
            LinearOperator A_;
            ApplyFn precond_;
            double tol_;
            int maxit_;
        };
    }

    std::unique_ptr<ImplicitSolver> make_implicit_solver(const DiscreteOperator& op, double dt, ImplicitSolverKind kind, double tol, int maxit)
    {
        const double theta = dt * dt / 2.0;
        const CartesianGrid& g = op.grid();
        const bool dirichlet = g.all(Boundary::Dirichlet);

        if (kind == ImplicitSolverKind::Auto)
        {
            if (!dirichlet)
                kind = ImplicitSolverKind::Cg;
            else if (op.order() == 2 && g.dim() == 1)
                kind = ImplicitSolverKind::Thomas;
            else if (op.order() == 2)
                kind = ImplicitSolverKind::Multigrid;
            else
                kind = ImplicitSolverKind::PcgMultigrid;

            // fall back to plain CG when the grid cannot be coarsened
            if (kind == ImplicitSolverKind::Multigrid || kind == ImplicitSolverKind::PcgMultigrid)
            {
                try
                {
                    MultigridHierarchy probe(g, 1.0, theta);
                }
                catch (const std::invalid_argument&)
                {
                    kind = ImplicitSolverKind::Cg;
                }
            }
        }

        switch (kind)
        {
        case ImplicitSolverKind::Thomas:
            if (!dirichlet || g.dim() != 1 || op.order() != 2)
                throw std::invalid_argument("the tridiagonal solver needs a 1D Dirichlet grid with p = 2");
            return std::make_unique<ThomasSolver>(op, theta);
        case ImplicitSolverKind::Multigrid:
            if (op.order() != 2)
                throw std::invalid_argument("standalone multigrid solves the second-order system only");
            return std::make_unique<MultigridSolver>(op, theta, tol, maxit);
        case ImplicitSolverKind::PcgMultigrid:
            return std::make_unique<CgSolver>(op, theta, tol, maxit, true);
        case ImplicitSolverKind::Cg:
        case ImplicitSolverKind::Auto:
            break;
        }
        return std::make_unique<CgSolver>(op, theta, tol, maxit, false);
    }

    WaveState make_wave_state(const GridField& v)
    {
        WaveState s;
        s.current = v;
        s.previous = v;
        s.work = GridField(v.grid(), v.ghost_width());
        return s;
    }

    namespace
    {
        void check_state(const WaveState& s, const DiscreteOperator& op, const GridField* f)
        {
            if (!(s.current.grid() == op.grid()) || (f && !(f->grid() == op.grid())))
                throw std::invalid_argument("wave state, forcing and operator live on different grids");
        }
    }

    void step_explicit(WaveState& s, const DiscreteOperator& op, const GridField* forcing, const TimeCorrection& corr)
    {
        check_state(s, op, forcing);
        const double dt = corr.dt;
        apply_operator(op, s.current, s.work);

        const std::size_t n = s.current.raw().size();
        const double* w = s.current.raw().data();
        const double* lw = s.work.raw().data();
        const double* f = forcing ? forcing->raw().data() : nullptr;
        double* prev = s.previous.raw_mut().data();

        if (s.step == 0)
        {
            const double h = dt * dt / 2.0;
            for (std::size_t k = 0; k < n; ++k)
                prev[k] = w[k] + h * (lw[k] - (f ? f[k] : 0.0));
        }
        else
        {
            const double fc = std::cos(corr.omega_tilde * s.time);
            const double h = dt * dt;
            for (std::size_t k = 0; k < n; ++k)
                prev[k] = 2.0 * w[k] - prev[k] + h * (lw[k] - (f ? fc * f[k] : 0.0));
        }
        std::swap(s.current, s.previous);
        ++s.step;
        s.time = s.step * dt;
    }

    SolveReport step_implicit(WaveState& s, const DiscreteOperator& op, const GridField* forcing, const TimeCorrection& corr, ImplicitSolver& solver,
                              FirstStep first)
    {
        check_state(s, op, forcing);
        const double dt = corr.dt;
        const double theta = dt * dt / 2.0;
        const std::size_t n = s.current.raw().size();
        const double* f = forcing ? forcing->raw().data() : nullptr;

        if (s.step == 0 && first == FirstStep::Explicit)
        {
            // W^1 = W^0 + (dt^2/2)(L W^0 - f cos(w dt)): the inconsistent start
            apply_operator(op, s.current, s.work);
            const double fc = std::cos(corr.omega_tilde * dt);
            const double* w = s.current.raw().data();
            const double* lw = s.work.raw().data();
            double* prev = s.previous.raw_mut().data();
            for (std::size_t k = 0; k < n; ++k)
                prev[k] = w[k] + theta * (lw[k] - (f ? fc * f[k] : 0.0));
            std::swap(s.current, s.previous);
            ++s.step;
            s.time = dt;
            return SolveReport{1, 0.0, true, 0, {}, {}};
        }

        // right-hand side assembled in the work field
        const double fc = std::cos(corr.omega_tilde * s.time) * std::cos(corr.omega_tilde * dt);
        {
            const double* w = s.current.raw().data();
            if (s.step == 0)
            {
                double* r = s.work.raw_mut().data();
                for (std::size_t k = 0; k < n; ++k)
                    r[k] = w[k] - (f ? theta * fc * f[k] : 0.0);
            }
            else
            {
                apply_operator(op, s.previous, s.work);
                const double* p = s.previous.raw().data();
                double* r = s.work.raw_mut().data();
                for (std::size_t k = 0; k < n; ++k)
                    r[k] = 2.0 * w[k] - p[k] + theta * r[k] - (f ? dt * dt * fc * f[k] : 0.0);
            }
        }

        const std::size_t m = op.grid().num_unknowns();
        std::vector<double> rhs(m), x(m), xp(m);
        s.work.gather_unknowns(rhs);
        s.current.gather_unknowns(x);
        if (s.step > 0)
        {
            // extrapolated initial guess 2W^n - W^{n-1}
            s.previous.gather_unknowns(xp);
            for (std::size_t k = 0; k < m; ++k)
                x[k] = 2.0 * x[k] - xp[k];
        }
        SolveReport rep = solver.solve(rhs, x);
        if (!rep.converged)
            throw std::runtime_error(std::string("implicit time-step: inner solve (") + solver.name() + ") did not converge, relative residual " +
                                     std::to_string(rep.relative_residual));
        s.previous.scatter_unknowns(x);
        std::swap(s.current, s.previous);
        ++s.step;
        s.time = s.step * dt;
        return rep;
    }

    WaveHoltzMap::WaveHoltzMap(const DiscreteOperator& op, const TimeCorrection& corr, int periods, std::optional<double> alpha,
                               std::shared_ptr<ImplicitSolver> solver)
        : op_{op}, corr_{corr}, periods_{periods}, solver_{std::move(solver)}
    {
        if (periods < 1)
            throw std::invalid_argument("number of periods must be positive");
        if (corr.mode == TimeMode::Continuous)
            throw std::invalid_argument("the wave solve needs an explicit or implicit time correction");
        if (corr.mode == TimeMode::Implicit && corr.steps_per_period < 5)
            throw std::invalid_argument("implicit time-stepping needs at least 5 time-steps per period");
        alpha_ = alpha ? *alpha : alpha_d(corr.omega_tilde * corr.dt);
        if (corr.mode == TimeMode::Implicit && !solver_)
            solver_ = make_implicit_solver(op_, corr.dt);
    }

    GridField WaveHoltzMap::apply(const GridField& v, const GridField* forcing)
    {
        if (!(v.grid() == op_.grid()))
            throw std::invalid_argument("iterate and operator live on different grids");
        const int total = total_steps();
        const double dt = corr_.dt;
        const double scale = 2.0 / (total * dt) * dt;

        WaveState s = make_wave_state(v);
        GridField acc(v.grid(), v.ghost_width());

        auto accumulate = [&] {
            const double sigma = (s.step == 0 || s.step == total) ? 0.5 : 1.0;
            const double w = scale * sigma * (std::cos(corr_.omega_tilde * s.time) - alpha_ / 2.0);
            acc.axpy(w, s.current);
        };

        accumulate();
        while (s.step < total)
        {
            if (corr_.mode == TimeMode::Explicit)
                step_explicit(s, op_, forcing, corr_);
            else
                inner_iterations_ += step_implicit(s, op_, forcing, corr_, *solver_, first_step).iterations;
            accumulate();
        }
        acc.enforce_boundary();
        ++wave_solves_;
        return acc;
    }

    GridField wave_solve_filtered(const GridField& v, const GridField* forcing, const FilterConfig& cfg, const TimeCorrection& corr, const DiscreteOperator& op)
    {
        if (cfg.steps_per_period != corr.steps_per_period || cfg.mode != corr.mode)
            throw std::invalid_argument("filter settings disagree with the time correction");
        WaveHoltzMap map(op, corr, cfg.periods, cfg.alpha);
        return map.apply(v, forcing);
    }
}
