#ifndef WAVEHOLTZ_GRID_HPP
#define WAVEHOLTZ_GRID_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wh
{
    enum class Boundary
    {
        Dirichlet,
        Periodic
    };

    struct Interval
    {
        double lo;
        double hi;
    };

    /// @brief Axis-aligned Cartesian grid in one or two dimensions.
    ///
    /// Dirichlet axes store the boundary points explicitly (cells + 1 points, the
    /// first and last being boundary points). Periodic axes store cells points and
    /// the point at the upper bound is identified with the first one.
    class CartesianGrid
    {
    public:
        static constexpr int max_dim = 2;

        CartesianGrid() = default;

        /// @param bcs boundary condition per face, ordered (lo_x, hi_x, lo_y, hi_y).
        CartesianGrid(int dim, std::span<const Interval> bounds, std::span<const int> cells, std::span<const Boundary> bcs);

        static CartesianGrid interval(int cells, Boundary bc = Boundary::Dirichlet, Interval bounds = {0.0, 1.0});
        static CartesianGrid rectangle(int nx, int ny, Boundary bc = Boundary::Dirichlet, Interval xb = {0.0, 1.0}, Interval yb = {0.0, 1.0});

        int dim() const { return dim_; }
        int cells(int axis) const { return cells_[axis]; }
        double spacing(int axis) const { return spacing_[axis]; }
        double lower(int axis) const { return bounds_[axis].lo; }
        double upper(int axis) const { return bounds_[axis].hi; }
        double length(int axis) const { return bounds_[axis].hi - bounds_[axis].lo; }
        Boundary bc(int axis) const { return bc_[axis]; }

        bool all(Boundary b) const;

        /// number of stored points along an axis (boundary points included)
        int points(int axis) const;

        /// first stored index that is an unknown (1 for Dirichlet, 0 for periodic)
        int first_unknown(int axis) const { return bc_[axis] == Boundary::Dirichlet ? 1 : 0; }

        /// number of unknowns along an axis
        int unknowns(int axis) const;

        std::size_t num_points() const;
        std::size_t num_unknowns() const;

        double coord(int axis, int index) const { return bounds_[axis].lo + index * spacing_[axis]; }

        /// product of the spacings, the weight of the discrete inner product
        double cell_volume() const;

        bool operator==(const CartesianGrid& other) const;

    private:
        int dim_ = 0;
        std::array<Interval, max_dim> bounds_{};
        std::array<int, max_dim> cells_{};
        std::array<double, max_dim> spacing_{};
        std::array<Boundary, max_dim> bc_{};
    };

    CartesianGrid build_grid(int dim, std::span<const Interval> bounds, std::span<const int> cells, std::span<const Boundary> bcs);

    /// @brief Real-valued grid function with a ghost layer.
    ///
    /// Every mutable access bumps a generation counter. `refresh_ghosts` fills the
    /// ghost layer (odd reflection for Dirichlet axes, wrap-around for periodic ones)
    /// and records the generation it was done at, so consumers can detect stale ghosts.
    class GridField
    {
    public:
        static constexpr int default_ghost_width = 2;

        GridField() = default;
        explicit GridField(const CartesianGrid& grid, int ghost_width = default_ghost_width);

        const CartesianGrid& grid() const { return grid_; }
        int ghost_width() const { return ghost_; }

        /// padded row length (x-direction, ghosts included)
        std::ptrdiff_t stride() const { return stride_; }

        double operator()(int i, int j = 0) const { return data_[offset(i, j)]; }
        double& at(int i, int j = 0)
        {
            ++generation_;
            return data_[offset(i, j)];
        }

        /// linear offset of stored point (i, j) inside the padded storage
        std::ptrdiff_t offset(int i, int j = 0) const { return (j + ghost_y_) * stride_ + (i + ghost_); }

        std::span<const double> raw() const { return data_; }
        std::span<double> raw_mut()
        {
            ++generation_;
            return data_;
        }

        void fill(double value);
        void set_zero() { fill(0.0); }

        /// this <- this + a * x  (all storage, ghosts included)
        void axpy(double a, const GridField& x);
        /// this <- a * this
        void scale(double a);

        /// zero the values at Dirichlet boundary points
        void enforce_boundary();

        void refresh_ghosts();
        bool ghosts_fresh() const { return ghost_generation_ == generation_; }
        std::uint64_t generation() const { return generation_; }

        /// copy unknowns (x fastest) to/from a flat vector of length grid().num_unknowns()
        void gather_unknowns(std::span<double> out) const;
        void scatter_unknowns(std::span<const double> in);
        std::vector<double> unknowns() const;

        template <typename F>
        void for_each_unknown(F&& f) const
        {
            const int i0 = grid_.first_unknown(0), ni = grid_.unknowns(0);
            const int j0 = grid_.dim() > 1 ? grid_.first_unknown(1) : 0;
            const int nj = grid_.dim() > 1 ? grid_.unknowns(1) : 1;
            for (int j = j0; j < j0 + nj; ++j)
                for (int i = i0; i < i0 + ni; ++i)
                    f(i, j);
        }

    private:
        CartesianGrid grid_;
        int ghost_ = 0;
        int ghost_y_ = 0;
        std::ptrdiff_t stride_ = 0;
        std::vector<double> data_;
        std::uint64_t generation_ = 0;
        std::uint64_t ghost_generation_ = static_cast<std::uint64_t>(-1);
    };

    /// Euclidean inner product over unknowns times the cell volume.
    double dot_h(const GridField& u, const GridField& v);

    /// ||u||_2 / sqrt(#unknowns)
    double norm_2h(const GridField& u);

    double max_abs(const GridField& u);

    /// @brief 1D central stencil of the order-p second difference, scaled by 1/dx^2.
    ///
    /// Obtained from D+D- sum_{mu < p/2} b_mu (-dx^2 D+D-)^mu; returns p+1 weights
    /// ordered from offset -p/2 to +p/2.
    std::vector<double> stencil_coefficients(int order, double dx);

    /// @brief The order-p approximation of c^2 Laplacian on a Cartesian grid.
    ///
    /// Tensor sum of 1D stencils. Homogeneous Dirichlet closure by odd reflection.
    class DiscreteOperator
    {
    public:
        DiscreteOperator() = default;
        DiscreteOperator(const CartesianGrid& grid, int order, double wave_speed = 1.0);

        const CartesianGrid& grid() const { return grid_; }
        int order() const { return order_; }
        double wave_speed() const { return c_; }
        int half_width() const { return order_ / 2; }

        /// stencil including c^2, offsets -p/2..p/2
        std::span<const double> stencil(int axis) const { return stencil_[axis]; }

        /// out <- c^2 Delta_h u at unknowns; Dirichlet boundary points of out are set to 0.
        /// Requires fresh ghosts in u (throws std::logic_error otherwise).
        void apply(const GridField& u, GridField& out) const;

        /// refreshes the ghosts of u and applies
        GridField operator()(GridField& u) const;

        /// Spectral radius bound of the operator: c^2 sum_m max symbol / dx_m^2 scaled.
        double max_eigenvalue_squared() const;

        /// Symbol of the 1D stencil (without c^2), sigma(theta) = -sum_k s_k cos(k theta) >= 0.
        double symbol(int axis, double theta) const;

    private:
        CartesianGrid grid_;
        int order_ = 2;
        double c_ = 1.0;
        std::array<std::vector<double>, CartesianGrid::max_dim> stencil_;
    };

    /// out <- c^2 Delta_h u after refreshing the ghosts of u
    void apply_operator(const DiscreteOperator& op, GridField& u, GridField& out);

    struct Triplet
    {
        std::size_t row;
        std::size_t col;
        double value;
    };

    /// Sparse matrix of the operator on unknowns (same ordering as gather_unknowns).
    std::vector<Triplet> assemble_operator(const DiscreteOperator& op);

    struct SpectralMode
    {
        double lambda;             ///< discrete eigenvalue, L Phi = -lambda^2 Phi
        std::array<int, 2> index;  ///< mode number per axis
    };

    /// Eigenvalues of the tensor-product operator from the stencil symbol, ascending.
    /// Requires all-Dirichlet or all-periodic boundaries (std::invalid_argument otherwise).
    std::vector<SpectralMode> symbolic_spectrum(const DiscreteOperator& op);

    /// lambda_h,m sorted ascending
    std::vector<double> discrete_eigenvalues_symbolic(const DiscreteOperator& op);

    /// Discrete sine mode on an all-Dirichlet grid, normalized in the h-inner product.
    GridField sine_mode(const CartesianGrid& grid, std::array<int, 2> index);
}

#endif
