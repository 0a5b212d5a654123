#include "waveholtz/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wh
{
    CartesianGrid::CartesianGrid(int dim, std::span<const Interval> bounds, std::span<const int> cells, std::span<const Boundary> bcs)
        : dim_{dim}
    {
        if (dim < 1 || dim > max_dim)
            throw std::invalid_argument("grid dimension must be 1 or 2");
        if (bounds.size() != static_cast<std::size_t>(dim) || cells.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("need one interval and one cell count per axis");
        if (bcs.size() != static_cast<std::size_t>(2 * dim))
            throw std::invalid_argument("need one boundary condition per face");

        for (int m = 0; m < dim; ++m)
        {
            if (!(bounds[m].hi > bounds[m].lo))
                throw std::invalid_argument("grid bounds must be a nonempty interval (axis " + std::to_string(m) + ")");
            if (cells[m] < 4)
                throw std::invalid_argument("at least 4 cells per axis are required (axis " + std::to_string(m) + ")");
            if (bcs[2 * m] != bcs[2 * m + 1])
                throw std::invalid_argument("periodic faces must come in matched pairs (axis " + std::to_string(m) + ")");

            bounds_[m] = bounds[m];
            cells_[m] = cells[m];
            spacing_[m] = (bounds[m].hi - bounds[m].lo) / cells[m];
            bc_[m] = bcs[2 * m];
        }
    }

    CartesianGrid CartesianGrid::interval(int cells, Boundary bc, Interval bounds)
    {
        const std::array<Interval, 1> b{bounds};
        const std::array<int, 1> n{cells};
        const std::array<Boundary, 2> f{bc, bc};
        return CartesianGrid(1, b, n, f);
    }

    CartesianGrid CartesianGrid::rectangle(int nx, int ny, Boundary bc, Interval xb, Interval yb)
    {
        const std::array<Interval, 2> b{xb, yb};
        const std::array<int, 2> n{nx, ny};
        const std::array<Boundary, 4> f{bc, bc, bc, bc};
        return CartesianGrid(2, b, n, f);
    }

    CartesianGrid build_grid(int dim, std::span<const Interval> bounds, std::span<const int> cells, std::span<const Boundary> bcs)
    {
        return CartesianGrid(dim, bounds, cells, bcs);
    }

    bool CartesianGrid::all(Boundary b) const
    {
        for (int m = 0; m < dim_; ++m)
            if (bc_[m] != b)
                return false;
        return true;
    }

    int CartesianGrid::points(int axis) const
    {
        return bc_[axis] == Boundary::Dirichlet ? cells_[axis] + 1 : cells_[axis];
    }

    int CartesianGrid::unknowns(int axis) const
    {
        return bc_[axis] == Boundary::Dirichlet ? cells_[axis] - 1 : cells_[axis];
    }

    std::size_t CartesianGrid::num_points() const
    {
        std::size_t n = 1;
        for (int m = 0; m < dim_; ++m)
            n *= points(m);
        return n;
    }

    std::size_t CartesianGrid::num_unknowns() const
    {
        std::size_t n = 1;
        for (int m = 0; m < dim_; ++m)
            n *= unknowns(m);
        return n;
    }

    double CartesianGrid::cell_volume() const
    {
        double v = 1.0;
        for (int m = 0; m < dim_; ++m)
            v *= spacing_[m];
        return v;
    }

    bool CartesianGrid::operator==(const CartesianGrid& o) const
    {
        if (dim_ != o.dim_)
            return false;
        for (int m = 0; m < dim_; ++m)
            if (cells_[m] != o.cells_[m] || bc_[m] != o.bc_[m] || bounds_[m].lo != o.bounds_[m].lo || bounds_[m].hi != o.bounds_[m].hi)
                return false;
        return true;
    }

    // ---------------------------------------------------------------- GridField

    GridField::GridField(const CartesianGrid& grid, int ghost_width)
        : grid_{grid}, ghost_{ghost_width}, ghost_y_{grid.dim() > 1 ? ghost_width : 0}
    {
        if (ghost_width < 1)
            throw std::invalid_argument("ghost width must be positive");
        stride_ = grid.points(0) + 2 * ghost_;
        const std::ptrdiff_t rows = grid.dim() > 1 ? grid.points(1) + 2 * ghost_ : 1;
        data_.assign(static_cast<std::size_t>(stride_ * rows), 0.0);
    }

    void GridField::fill(double value)
    {
        ++generation_;
        std::fill(data_.begin(), data_.end(), value);
    }

    void GridField::axpy(double a, const GridField& x)
    {
        if (!(x.grid_ == grid_) || x.ghost_ != ghost_)
            throw std::invalid_argument("axpy: grid mismatch");
        ++generation_;
        const std::size_t n = data_.size();
        double* y = data_.data();
        const double* xv = x.data_.data();
        for (std::size_t k = 0; k < n; ++k)
            y[k] += a * xv[k];
    }

    void GridField::scale(double a)
    {
        ++generation_;
        for (double& v : data_)
            v *= a;
    }

    void GridField::enforce_boundary()
    {
        ++generation_;
        const int nx = grid_.points(0);
        const int ny = grid_.dim() > 1 ? grid_.points(1) : 1;
        if (grid_.bc(0) == Boundary::Dirichlet)
            for (int j = 0; j < ny; ++j)
            {
                data_[offset(0, j)] = 0.0;
                data_[offset(nx - 1, j)] = 0.0;
            }
        if (grid_.dim() > 1 && grid_.bc(1) == Boundary::Dirichlet)
            for (int i = 0; i < nx; ++i)
            {
                data_[offset(i, 0)] = 0.0;
                data_[offset(i, ny - 1)] = 0.0;
            }
    }

    void GridField::refresh_ghosts()
    {
        const int nx = grid_.points(0);
        const int ny = grid_.dim() > 1 ? grid_.points(1) : 1;
        const int g = ghost_;

        // x ghosts, every stored row
        for (int j = 0; j < ny; ++j)
        {
            double* row = data_.data() + offset(0, j);
            if (grid_.bc(0) == Boundary::Dirichlet)
            {
                // boundary points are indices 0 and nx-1; odd reflection about them
                for (int k = 1; k <= g; ++k)
                {
                    row[-k] = -row[k];
                    row[nx - 1 + k] = -row[nx - 1 - k];
                }
            }
            else
            {
                for (int k = 1; k <= g; ++k)
                {
                    row[-k] = row[nx - k];
                    row[nx - 1 + k] = row[k - 1];
                }
            }
        }

        if (grid_.dim() > 1)
        {
            for (int i = 0; i < nx; ++i)
            {
                auto v = [&](int j) -> double& { return data_[offset(i, j)]; };
                if (grid_.bc(1) == Boundary::Dirichlet)
                {
                    for (int k = 1; k <= g; ++k)
                    {
                        v(-k) = -v(k);
                        v(ny - 1 + k) = -v(ny - 1 - k);
                    }
                }
                else
                {
                    for (int k = 1; k <= g; ++k)
                    {
                        v(-k) = v(ny - k);
                        v(ny - 1 + k) = v(k - 1);
                    }
                }
            }
        }
        ghost_generation_ = generation_;
    }

    void GridField::gather_unknowns(std::span<double> out) const
    {
        if (out.size() != grid_.num_unknowns())
            throw std::invalid_argument("gather_unknowns: size mismatch");
        std::size_t k = 0;
        for_each_unknown([&](int i, int j) { out[k++] = data_[offset(i, j)]; });
    }

    void GridField::scatter_unknowns(std::span<const double> in)
    {
        if (in.size() != grid_.num_unknowns())
            throw std::invalid_argument("scatter_unknowns: size mismatch");
        ++generation_;
        std::size_t k = 0;
        for_each_unknown([&](int i, int j) { data_[offset(i, j)] = in[k++]; });
    }

    std::vector<double> GridField::unknowns() const
    {
        std::vector<double> v(grid_.num_unknowns());
        gather_unknowns(v);
        return v;
    }

    double dot_h(const GridField& u, const GridField& v)
    {
        if (!(u.grid() == v.grid()))
            throw std::invalid_argument("dot_h: grid mismatch");
        double s = 0.0;
        u.for_each_unknown([&](int i, int j) { s += u(i, j) * v(i, j); });
        return s * u.grid().cell_volume();
    }

    double norm_2h(const GridField& u)
    {
        double s = 0.0;
        u.for_each_unknown([&](int i, int j) { s += u(i, j) * u(i, j); });
        return std::sqrt(s / static_cast<double>(u.grid().num_unknowns()));
    }

    double max_abs(const GridField& u)
    {
        double m = 0.0;
        u.for_each_unknown([&](int i, int j) { m = std::max(m, std::abs(u(i, j))); });
        return m;
    }

    // ---------------------------------------------------------------- operator

    namespace
    {
        std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b)
        {
            std::vector<double> c(a.size() + b.size() - 1, 0.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                for (std::size_t j = 0; j < b.size(); ++j)
                    c[i + j] += a[i] * b[j];
            return c;
        }

        double factorial(int n)
        {
            double f = 1.0;
            for (int k = 2; k <= n; ++k)
                f *= k;
            return f;
        }
    }

    std::vector<double> stencil_coefficients(int order, double dx)
    {
        if (order != 2 && order != 4)
            throw std::invalid_argument("unsupported order of accuracy " + std::to_string(order) + " (expected 2 or 4)");
        if (!(dx > 0.0))
            throw std::invalid_argument("grid spacing must be positive");

        const int half = order / 2;
        const std::vector<double> second_difference{1.0, -2.0, 1.0};

        // sum_{mu < p/2} b_mu (-1)^mu (D+D-)^(mu+1), in units of 1/dx^2
        std::vector<double> result(2 * half + 1, 0.0);
        std::vector<double> power = second_difference;
        for (int mu = 0; mu < half; ++mu)
        {
            const double b = 2.0 * factorial(mu) * factorial(mu) / factorial(2 * mu + 2);
            const double sign = (mu % 2 == 0) ? 1.0 : -1.0;
            const int pad = half - (static_cast<int>(power.size()) / 2);
            for (std::size_t k = 0; k < power.size(); ++k)
                result[k + pad] += sign * b * power[k];
            power = convolve(power, second_difference);
        }
        for (double& w : result)
            w /= dx * dx;
        return result;
    }

    DiscreteOperator::DiscreteOperator(const CartesianGrid& grid, int order, double wave_speed)
        : grid_{grid}, order_{order}, c_{wave_speed}
    {
        if (!(wave_speed > 0.0))
            throw std::invalid_argument("wave speed must be positive");
        for (int m = 0; m < grid.dim(); ++m)
        {
            stencil_[m] = stencil_coefficients(order, grid.spacing(m));
            for (double& w : stencil_[m])
                w *= c_ * c_;
        }
    }

    void DiscreteOperator::apply(const GridField& u, GridField& out) const
    {
        if (!(u.grid() == grid_) || !(out.grid() == grid_))
            throw std::invalid_argument("operator applied to a field on a different grid");
        if (u.ghost_width() < half_width() || out.ghost_width() != u.ghost_width())
            throw std::invalid_argument("ghost layer too narrow for the stencil");
        if (!u.ghosts_fresh())
            throw std::logic_error("operator applied to a field with stale ghost values");

        const int h = half_width();
        const int dim = grid_.dim();
        const int i0 = grid_.first_unknown(0), ni = grid_.unknowns(0);
        const int j0 = dim > 1 ? grid_.first_unknown(1) : 0;
        const int nj = dim > 1 ? grid_.unknowns(1) : 1;
        const std::ptrdiff_t sy = u.stride();

        const double* sx_w = stencil_[0].data() + h;
        const double* sy_w = dim > 1 ? stencil_[1].data() + h : nullptr;
        const double center = sx_w[0] + (dim > 1 ? sy_w[0] : 0.0);

        const double* in = u.raw().data();
        out.set_zero();
        double* res = out.raw_mut().data();

        for (int j = j0; j < j0 + nj; ++j)
        {
            const double* row = in + u.offset(0, j);
            double* orow = res + out.offset(0, j);
            if (dim == 1)
            {
                if (h == 1)
                    for (int i = i0; i < i0 + ni; ++i)
                        orow[i] = center * row[i] + sx_w[1] * (row[i - 1] + row[i + 1]);
                else
                    for (int i = i0; i < i0 + ni; ++i)
                        orow[i] = center * row[i] + sx_w[1] * (row[i - 1] + row[i + 1]) + sx_w[2] * (row[i - 2] + row[i + 2]);
            }
            else
            {
                if (h == 1)
                    for (int i = i0; i < i0 + ni; ++i)
                        orow[i] = center * row[i] + sx_w[1] * (row[i - 1] + row[i + 1]) + sy_w[1] * (row[i - sy] + row[i + sy]);
                else
                    for (int i = i0; i < i0 + ni; ++i)
                        orow[i] = center * row[i] + sx_w[1] * (row[i - 1] + row[i + 1]) + sx_w[2] * (row[i - 2] + row[i + 2])
                                + sy_w[1] * (row[i - sy] + row[i + sy]) + sy_w[2] * (row[i - 2 * sy] + row[i + 2 * sy]);
            }
        }
    }

    GridField DiscreteOperator::operator()(GridField& u) const
    {
        GridField out(u.grid(), u.ghost_width());
        apply_operator(*this, u, out);
        return out;
    }

    void apply_operator(const DiscreteOperator& op, GridField& u, GridField& out)
    {
        u.refresh_ghosts();
        op.apply(u, out);
    }

    double DiscreteOperator::symbol(int axis, double theta) const
    {
        const auto s = stencil_coefficients(order_, grid_.spacing(axis));
        const int h = half_width();
        double v = s[h];
        for (int k = 1; k <= h; ++k)
            v += 2.0 * s[h + k] * std::cos(k * theta);
        return -v;
    }

    double DiscreteOperator::max_eigenvalue_squared() const
    {
        double s = 0.0;
        for (int m = 0; m < grid_.dim(); ++m)
            s += symbol(m, std::numbers::pi);
        return c_ * c_ * s;
    }

    std::vector<Triplet> assemble_operator(const DiscreteOperator& op)
    {
        const CartesianGrid& g = op.grid();
        const int dim = g.dim();
        const int h = op.half_width();

        // map a (possibly out-of-range) stored index on an axis to (unknown index, sign)
        auto resolve = [&](int axis, int idx, int& unknown, double& sign) -> bool {
            const int np = g.points(axis);
            sign = 1.0;
            if (g.bc(axis) == Boundary::Periodic)
            {
                idx = ((idx % np) + np) % np;
                unknown = idx;
                return true;
            }
            if (idx < 0)
            {
                idx = -idx;
                sign = -1.0;
            }
            else if (idx > np - 1)
            {
                idx = 2 * (np - 1) - idx;
                sign = -1.0;
            }
            if (idx == 0 || idx == np - 1)
                return false; // boundary point holds zero
            unknown = idx - 1;
            return true;
        };

        const int nx = g.unknowns(0);
        std::vector<Triplet> t;
        t.reserve(g.num_unknowns() * (2 * h * dim + 1));

        std::size_t row = 0;
        const int i0 = g.first_unknown(0);
        const int j0 = dim > 1 ? g.first_unknown(1) : 0;
        const int nj = dim > 1 ? g.unknowns(1) : 1;
        for (int j = j0; j < j0 + nj; ++j)
            for (int i = i0; i < i0 + nx; ++i, ++row)
            {
                for (int axis = 0; axis < dim; ++axis)
                {
                    const auto s = op.stencil(axis);
                    for (int k = -h; k <= h; ++k)
                    {
                        if (axis > 0 && k == 0)
                            continue; // the center weight is accumulated once per axis below
                        int ui = 0, uj = 0;
                        double si = 1.0, sj = 1.0;
                        const int ii = axis == 0 ? i + k : i;
                        const int jj = axis == 1 ? j + k : j;
                        if (!resolve(0, ii, ui, si))
                            continue;
                        if (dim > 1 && !resolve(1, jj, uj, sj))
                            continue;
                        double w = s[k + h];
                        if (axis == 0 && k == 0)
                            for (int a = 1; a < dim; ++a)
                                w += op.stencil(a)[h];
                        t.push_back({row, static_cast<std::size_t>(uj) * nx + ui, w * si * sj});
                    }
                }
            }
        return t;
    }

    std::vector<SpectralMode> symbolic_spectrum(const DiscreteOperator& op)
    {
        const CartesianGrid& g = op.grid();
        const bool dirichlet = g.all(Boundary::Dirichlet);
        if (!dirichlet && !g.all(Boundary::Periodic))
            throw std::invalid_argument("symbolic spectrum requires all-Dirichlet or all-periodic boundaries");

        const double c2 = op.wave_speed() * op.wave_speed();
        std::array<std::vector<std::pair<int, double>>, 2> axis_values;
        for (int m = 0; m < g.dim(); ++m)
        {
            const int n = g.cells(m);
            if (dirichlet)
                for (int k = 1; k < n; ++k)
                    axis_values[m].push_back({k, op.symbol(m, k * std::numbers::pi / n)});
            else
                for (int k = 0; k < n; ++k)
                    axis_values[m].push_back({k, op.symbol(m, 2.0 * k * std::numbers::pi / n)});
        }

        std::vector<SpectralMode> modes;
        if (g.dim() == 1)
        {
            for (auto [k, s] : axis_values[0])
                modes.push_back({std::sqrt(std::max(0.0, c2 * s)), {k, 0}});
        }
        else
        {
            for (auto [ky, sy] : axis_values[1])
                for (auto [kx, sx] : axis_values[0])
                    modes.push_back({std::sqrt(std::max(0.0, c2 * (sx + sy))), {kx, ky}});
        }
        std::stable_sort(modes.begin(), modes.end(), [](const SpectralMode& a, const SpectralMode& b) { return a.lambda < b.lambda; });
        return modes;
    }

    std::vector<double> discrete_eigenvalues_symbolic(const DiscreteOperator& op)
    {
        std::vector<double> l;
        for (const auto& m : symbolic_spectrum(op))
            l.push_back(m.lambda);
        return l;
    }

    GridField sine_mode(const CartesianGrid& grid, std::array<int, 2> index)
    {
        if (!grid.all(Boundary::Dirichlet))
            throw std::invalid_argument("sine modes require an all-Dirichlet grid");
        GridField phi(grid);
        double scale = 1.0;
        for (int m = 0; m < grid.dim(); ++m)
            scale *= std::sqrt(2.0 / grid.length(m));
        phi.for_each_unknown([&](int i, int j) {
            double v = scale * std::sin(index[0] * std::numbers::pi * i / grid.cells(0));
            if (grid.dim() > 1)
                v *= std::sin(index[1] * std::numbers::pi * j / grid.cells(1));
            phi.at(i, j) = v;
        });
        return phi;
    }
}
