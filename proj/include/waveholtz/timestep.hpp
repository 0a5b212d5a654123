#ifndef WAVEHOLTZ_TIMESTEP_HPP
#define WAVEHOLTZ_TIMESTEP_HPP

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "waveholtz/filter.hpp"
#include "waveholtz/grid.hpp"
#include "waveholtz/linalg.hpp"

namespace wh
{
    /// @brief Time-step and modified driving frequency for one stepping scheme.
    ///
    /// The driving frequency omega_tilde is chosen so that the time-periodic
    /// solution of the discrete scheme solves the discrete Helmholtz problem at
    /// the original omega.
    struct TimeCorrection
    {
        TimeMode mode = TimeMode::Implicit;
        double omega = 1.0;       ///< Helmholtz frequency
        double omega_tilde = 1.0; ///< frequency the wave equation is driven at
        double dt = 0.0;
        int steps_per_period = 0;

        double period() const; ///< 2 pi / omega_tilde
    };

    /// Stability constant of the explicit scheme: c dt sqrt(sum 1/dx^2) < C.
    double cfl_constant(int order);

    /// @brief Explicit correction: smallest N_t >= min_steps with a stable dt = (2/omega) sin(pi/N_t).
    ///
    /// min_steps is at least 5 so that alpha_d is defined.
    TimeCorrection correct_explicit(double omega, const CartesianGrid& grid, int order, double wave_speed = 1.0, int min_steps = 5);

    /// Implicit correction; throws std::invalid_argument when steps < 5.
    TimeCorrection correct_implicit(double omega, int steps);

    /// @brief Solver for (I - theta L) x = b on unknown vectors, theta = dt^2 / 2.
    class ImplicitSolver
    {
    public:
        virtual ~ImplicitSolver() = default;
        /// x holds the initial guess on entry
        virtual SolveReport solve(std::span<const double> b, std::span<double> x) = 0;
        virtual const char* name() const = 0;
    };

    enum class ImplicitSolverKind
    {
        Auto,      ///< Thomas (1D, p=2, Dirichlet), multigrid (p=2, Dirichlet), MG-preconditioned CG (p=4, Dirichlet), CG otherwise
        Thomas,
        Multigrid,
        PcgMultigrid,
        Cg
    };

    std::unique_ptr<ImplicitSolver> make_implicit_solver(const DiscreteOperator& op, double dt, ImplicitSolverKind kind = ImplicitSolverKind::Auto,
                                                         double tol = 1e-12, int maxit = 1000);

    struct WaveState
    {
        GridField current;  ///< W^n
        GridField previous; ///< W^{n-1}
        GridField work;     ///< scratch for operator applications
        int step = 0;
        double time = 0.0;
    };

    /// W^0 = v with zero initial velocity
    WaveState make_wave_state(const GridField& v);

    /// @brief One step of the explicit scheme.
    ///
    /// W^{n+1} = 2W^n - W^{n-1} + dt^2 (L W^n - f cos(omega_tilde t^n)). The
    /// first step eliminates W^{-1} = W^1 (zero initial velocity):
    /// W^1 = W^0 + (dt^2/2)(L W^0 - f). `forcing` may be null.
    void step_explicit(WaveState& s, const DiscreteOperator& op, const GridField* forcing, const TimeCorrection& corr);

    enum class FirstStep
    {
        Implicit, ///< consistent elimination of W^{-1}
        Explicit  ///< explicit start formula (kept for regression comparisons)
    };

    /// @brief One step of the trapezoidal-in-time implicit scheme.
    ///
    /// (I - (dt^2/2) L) W^{n+1} = 2W^n - W^{n-1} + (dt^2/2) L W^{n-1} - dt^2 f cos(w t^n) cos(w dt).
    /// With W^{-1} = W^1 the first step becomes
    /// (I - (dt^2/2) L) W^1 = W^0 - (dt^2/2) f cos(w dt). Returns the inner solve report.
    SolveReport step_implicit(WaveState& s, const DiscreteOperator& op, const GridField* forcing, const TimeCorrection& corr, ImplicitSolver& solver,
                              FirstStep first = FirstStep::Implicit);

    /// @brief One application of the affine WaveHoltz map W(v, f).
    ///
    /// Runs N_p N_t steps from W^0 = v and streams the trapezoidal filter sum
    /// (2/T) sum_n sigma_n (cos(omega_tilde t^n) - alpha/2) W^n dt.
    class WaveHoltzMap
    {
    public:
        /// alpha defaults to alpha_d(omega_tilde dt). The implicit solver is created when not supplied.
        WaveHoltzMap(const DiscreteOperator& op, const TimeCorrection& corr, int periods, std::optional<double> alpha = std::nullopt,
                     std::shared_ptr<ImplicitSolver> solver = nullptr);

        /// forcing may be null (zero forcing)
        GridField apply(const GridField& v, const GridField* forcing);

        const DiscreteOperator& op() const { return op_; }
        const TimeCorrection& correction() const { return corr_; }
        int periods() const { return periods_; }
        int total_steps() const { return periods_ * corr_.steps_per_period; }
        double alpha() const { return alpha_; }

        /// inner implicit iterations accumulated over all applications
        long inner_iterations() const { return inner_iterations_; }
        long wave_solves() const { return wave_solves_; }

        FirstStep first_step = FirstStep::Implicit;

    private:
        DiscreteOperator op_;
        TimeCorrection corr_;
        int periods_;
        double alpha_;
        std::shared_ptr<ImplicitSolver> solver_;
        long inner_iterations_ = 0;
        long wave_solves_ = 0;
    };

    /// Convenience wrapper: builds the map from cfg (periods and alpha) and applies it once.
    GridField wave_solve_filtered(const GridField& v, const GridField* forcing, const FilterConfig& cfg, const TimeCorrection& corr,
                                  const DiscreteOperator& op);
}

#endif
