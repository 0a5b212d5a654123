#ifndef WAVEHOLTZ_MULTIGRID_HPP
#define WAVEHOLTZ_MULTIGRID_HPP

#include <span>
#include <vector>

#include "waveholtz/grid.hpp"
#include "waveholtz/linalg.hpp"

namespace wh
{
    struct MultigridOptions
    {
        int pre_smooth = 2;
        int post_smooth = 2;
        int max_coarse_cells = 8; ///< coarsening stops once an axis has at most this many cells
    };

    /// @brief Geometric multigrid for sigma I - theta Delta_2h on an all-Dirichlet grid.
    ///
    /// Delta_2h is the second-order (3-point / 5-point) Laplacian. Red-black
    /// Gauss-Seidel smoothing (post-smoothing in reverse color order so the
    /// V-cycle is a symmetric preconditioner), full-weighting restriction,
    /// bilinear prolongation, rediscretized coarse operators and a dense LU
    /// solve on the coarsest level. Vectors are unknowns in gather_unknowns order.
    class MultigridHierarchy
    {
    public:
        MultigridHierarchy(const CartesianGrid& grid, double identity_coeff, double laplacian_coeff, MultigridOptions options = {});

        std::size_t size() const;
        int levels() const { return static_cast<int>(levels_.size()); }
        const MultigridOptions& options() const { return options_; }

        /// y <- (sigma I - theta Delta_2h) x on the finest level
        void apply(std::span<const double> x, std::span<double> y) const;

        /// one V-cycle with nu1 pre- and nu2 post-smoothing sweeps; x is the initial guess on entry
        void vcycle(std::span<const double> b, std::span<double> x, int nu1, int nu2);
        void vcycle(std::span<const double> b, std::span<double> x) { vcycle(b, x, options_.pre_smooth, options_.post_smooth); }

        /// V-cycles until ||b - A x|| <= tol ||b||; work units counted in finest-level sweep equivalents
        SolveReport solve(std::span<const double> b, std::span<double> x, double tol, int max_cycles);

        /// red-black Gauss-Seidel sweeps alone, same stopping rule (baseline for comparisons)
        SolveReport smoother_solve(std::span<const double> b, std::span<double> x, double tol, int max_sweeps);

        /// finest-level sweep equivalents of one V-cycle
        double vcycle_work() const;

        LinearOperator as_operator() const;

    private:
        struct Level
        {
            int dim = 1;
            int nx = 0, ny = 0; ///< cells per axis (ny = 0 in 1D)
            double hx = 1.0, hy = 1.0;
            std::vector<double> u, f, r; ///< point-indexed, boundary entries stay zero
            int rows() const { return dim > 1 ? ny + 1 : 1; }
            int stride() const { return nx + 1; }
            std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * stride() + i; }
        };

        void smooth(Level& L, int sweeps, bool reverse) const;
        void residual(Level& L) const;
        double interior_norm(const std::vector<double>& v) const; ///< over the finest level's unknowns
        void restrict_residual(const Level& fine, Level& coarse) const;
        void prolong_add(const Level& coarse, Level& fine) const;
        void coarse_solve(Level& L) const;
        void cycle(std::size_t level, int nu1, int nu2);
        double level_weight(std::size_t level) const;

        void load(std::span<const double> v, std::vector<double>& dst) const;
        void store(const std::vector<double>& src, std::span<double> v) const;

        MultigridOptions options_;
        double sigma_, theta_;
        std::vector<Level> levels_;
        std::vector<double> coarse_lu_;
        std::vector<int> coarse_piv_;
        int coarse_n_ = 0;
    };

    /// free-function form of one V-cycle
    void mg_vcycle(MultigridHierarchy& hierarchy, std::span<const double> b, std::span<double> x, int nu1, int nu2);
}

#endif
