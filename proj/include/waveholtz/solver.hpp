#ifndef WAVEHOLTZ_SOLVER_HPP
#define WAVEHOLTZ_SOLVER_HPP

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waveholtz/filter.hpp"
#include "waveholtz/grid.hpp"
#include "waveholtz/linalg.hpp"
#include "waveholtz/timestep.hpp"

namespace wh
{
    /// @brief L u + omega^2 u = f with homogeneous boundary data.
    struct HelmholtzProblem
    {
        CartesianGrid grid;
        int order = 2;
        double wave_speed = 1.0;
        double omega = 1.0;
        GridField forcing;

        DiscreteOperator op() const { return DiscreteOperator(grid, order, wave_speed); }
    };

    /// a_g exp(-b_g |x - x0|^2) sampled at grid points, zero at Dirichlet boundary points
    GridField gaussian_source(const CartesianGrid& grid, double a_g, double b_g, std::array<double, 2> x0);

    /// @brief Discrete eigenpairs removed from the iteration.
    ///
    /// `spectrum_index` locates each pair in the ascending symbolic spectrum
    /// (used to exclude it from rate predictions).
    struct DeflationSet
    {
        std::vector<double> lambdas;
        std::vector<GridField> modes;
        std::vector<std::size_t> spectrum_index;

        std::size_t size() const { return lambdas.size(); }
        bool empty() const { return lambdas.empty(); }

        /// max |G - I| of the h-inner-product Gram matrix
        double gram_error() const;
    };

    /// Indices (into the ascending spectrum) of the `count` eigenvalues closest to omega.
    std::vector<std::size_t> nearest_modes(std::span<const double> eigenvalues, double omega, std::size_t count);

    /// @brief Indices of the `count` modes with the largest |beta| in a rate prediction.
    ///
    /// Modes sharing |beta| with a selected one (degenerate eigenvalues, e.g. (1,2)
    /// and (2,1) on a square) are added too, since deflating half of a pair leaves
    /// the rate unchanged. The result can therefore hold more than `count` indices.
    std::vector<std::size_t> slowest_modes(const RatePrediction& prediction, std::size_t count);

    /// Deflation pairs from discrete sine modes (all-Dirichlet grids).
    DeflationSet deflation_from_sines(const DiscreteOperator& op, std::span<const std::size_t> spectrum_indices);

    /// Deflation pairs from the dense eigensolver (any boundary conditions, oracle scale).
    DeflationSet deflation_from_dense(const DiscreteOperator& op, std::span<const std::size_t> spectrum_indices);

    struct WaveHoltzOptions
    {
        TimeMode mode = TimeMode::Implicit;
        int periods = 1;
        int steps_per_period = 10; ///< implicit N_t; lower bound of the explicit search
        std::optional<double> alpha;
        double tol = 1e-10; ///< on the 2h-norm of the residual
        int maxit = 1000;
        int restart = 50;
        ImplicitSolverKind inner = ImplicitSolverKind::Auto;
        double inner_tol = 1e-12;
    };

    struct WaveHoltzRun
    {
        std::string method;
        int iterations = 0;
        bool converged = false;
        std::vector<double> residuals; ///< ||r||_2h, index 0 is the first residual
        double cr = 0.0;               ///< NaN when the history is too short
        double ecr = 0.0;
        double seconds = 0.0;
        double seconds_per_iteration = 0.0;
        long wave_solves = 0;
        long inner_iterations = 0;
        TimeCorrection correction;
        double alpha = 0.0;
    };

    struct HelmholtzSolution
    {
        GridField u;
        WaveHoltzRun run;
    };

    struct RateMeasurement
    {
        double cr;
        double ecr;
    };

    /// @brief Geometric mean of the last `window` residual ratios, and CR^{1/N_p}.
    ///
    /// Throws std::invalid_argument with fewer than window + 1 residuals.
    RateMeasurement measure_rate(std::span<const double> residuals, int periods, int window = 5);

    TimeCorrection make_correction(const HelmholtzProblem& problem, const WaveHoltzOptions& options);

    /// @brief Throws std::domain_error when omega is within 1e-10 (relative) of a discrete eigenvalue.
    ///
    /// Only checked when the symbolic spectrum is available (all-Dirichlet or all-periodic grids).
    void check_frequency(const HelmholtzProblem& problem);

    /// @brief The affine WaveHoltz map and its linear part A v = v - P W(v, 0).
    ///
    /// P projects out the deflated modes (identity without deflation).
    class WaveHoltzOperator
    {
    public:
        WaveHoltzOperator(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet* deflation = nullptr);

        /// P W(v, f)
        GridField filter(const GridField& v, bool with_forcing);
        /// v - P W(v, 0)
        GridField apply_A(const GridField& v);
        /// P W(0, f)
        GridField rhs();

        void project(GridField& v) const;

        LinearOperator as_linear_operator();

        WaveHoltzMap& map() { return map_; }
        const CartesianGrid& grid() const { return problem_.grid; }

    private:
        HelmholtzProblem problem_;
        const DeflationSet* deflation_;
        WaveHoltzMap map_;
        GridField scratch_;
    };

    /// Fixed-point iteration from v = 0 until ||v^{k+1} - v^k||_2h <= tol.
    HelmholtzSolution fpi_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options);

    /// @brief Fixed-point iteration with deflation after every filter application.
    ///
    /// The converged iterate is completed with sum (f, Phi)_h / (omega^2 - lambda^2) Phi.
    /// Throws std::domain_error when a deflated eigenvalue equals omega.
    HelmholtzSolution deflated_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet& deflation);

    /// GMRES on (I - S) v = W(0, f), optional deflation; residuals in the 2h-norm.
    HelmholtzSolution krylov_solve(const HelmholtzProblem& problem, const WaveHoltzOptions& options, const DeflationSet* deflation = nullptr);

    struct DirectReport
    {
        double relative_residual = 0.0;
        std::string method;
    };

    /// @brief Direct solve of the assembled discrete Helmholtz system (L + omega^2 I) u = f.
    ///
    /// Banded LU on Dirichlet grids, dense LU on periodic grids up to 4096 unknowns.
    GridField direct_solve(const HelmholtzProblem& problem, DirectReport* report = nullptr);

    /// @brief Baseline: GMRES on the assembled Helmholtz matrix, optionally Jacobi preconditioned.
    SolveReport helmholtz_gmres_baseline(const HelmholtzProblem& problem, double tol, int restart, int maxit, bool jacobi);
}

#endif
