#include "waveholtz/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <lapacke.h>

namespace wh
{
    MultigridHierarchy::MultigridHierarchy(const CartesianGrid& grid, double identity_coeff, double laplacian_coeff, MultigridOptions options)
        : options_{options}, sigma_{identity_coeff}, theta_{laplacian_coeff}
    {
        if (!grid.all(Boundary::Dirichlet))
            throw std::invalid_argument("multigrid requires an all-Dirichlet grid");
        if (sigma_ < 0.0 || !(theta_ > 0.0))
            throw std::invalid_argument("multigrid requires sigma >= 0 and theta > 0");

        Level L;
        L.dim = grid.dim();
        L.nx = grid.cells(0);
        L.ny = grid.dim() > 1 ? grid.cells(1) : 0;
        L.hx = grid.spacing(0);
        L.hy = grid.dim() > 1 ? grid.spacing(1) : 1.0;

        auto needs_coarsening = [&](const Level& l) {
            return l.nx > options_.max_coarse_cells && (l.dim == 1 || l.ny > options_.max_coarse_cells);
        };

        for (;;)
        {
            const std::size_t n = static_cast<std::size_t>(L.stride()) * L.rows();
            L.u.assign(n, 0.0);
            L.f.assign(n, 0.0);
            L.r.assign(n, 0.0);
            levels_.push_back(L);
            if (!needs_coarsening(L))
                break;
            if (L.nx % 2 != 0 || (L.dim > 1 && L.ny % 2 != 0))
                throw std::invalid_argument("multigrid needs nested grids: " + std::to_string(L.nx) + " cells cannot be halved");
            L.nx /= 2;
            L.hx *= 2.0;
            if (L.dim > 1)
            {
                L.ny /= 2;
                L.hy *= 2.0;
            }
        }

        // dense LU of the coarsest operator
        const Level& C = levels_.back();
        const int cx = C.nx - 1, cy = C.dim > 1 ? C.ny - 1 : 1;
        coarse_n_ = cx * cy;
        if (coarse_n_ > 4096)
            throw std::invalid_argument("multigrid coarsest level too large for the direct solve");
        coarse_lu_.assign(static_cast<std::size_t>(coarse_n_) * coarse_n_, 0.0);
        auto A = [&](int r, int c) -> double& { return coarse_lu_[static_cast<std::size_t>(c) * coarse_n_ + r]; };
        const double ax = theta_ / (C.hx * C.hx), ay = C.dim > 1 ? theta_ / (C.hy * C.hy) : 0.0;
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i)
            {
                const int k = j * cx + i;
                A(k, k) = sigma_ + 2.0 * ax + 2.0 * ay;
                if (i > 0)
                    A(k, k - 1) = -ax;
                if (i + 1 < cx)
                    A(k, k + 1) = -ax;
                if (C.dim > 1 && j > 0)
                    A(k, k - cx) = -ay;
                if (C.dim > 1 && j + 1 < cy)
                    A(k, k + cx) = -ay;
            }
        coarse_piv_.assign(coarse_n_, 0);
        const lapack_int info = LAPACKE_dgetrf(LAPACK_COL_MAJOR, coarse_n_, coarse_n_, coarse_lu_.data(), coarse_n_, coarse_piv_.data());
        if (info != 0)
            throw std::runtime_error("multigrid: singular coarse-level operator");
    }

    std::size_t MultigridHierarchy::size() const
    {
        const Level& L = levels_.front();
        return static_cast<std::size_t>(L.nx - 1) * (L.dim > 1 ? L.ny - 1 : 1);
    }

    void MultigridHierarchy::load(std::span<const double> v, std::vector<double>& dst) const
    {
        const Level& L = levels_.front();
        const int j0 = L.dim > 1 ? 1 : 0, j1 = L.dim > 1 ? L.ny : 1;
        std::size_t k = 0;
        for (int j = j0; j < j1; ++j)
            for (int i = 1; i < L.nx; ++i)
                dst[L.idx(i, j)] = v[k++];
    }

    void MultigridHierarchy::store(const std::vector<double>& src, std::span<double> v) const
    {
        const Level& L = levels_.front();
        const int j0 = L.dim > 1 ? 1 : 0, j1 = L.dim > 1 ? L.ny : 1;
        std::size_t k = 0;
        for (int j = j0; j < j1; ++j)
            for (int i = 1; i < L.nx; ++i)
                v[k++] = src[L.idx(i, j)];
    }

    void MultigridHierarchy::apply(std::span<const double> x, std::span<double> y) const
    {
        const Level& L = levels_.front();
        const double ax = theta_ / (L.hx * L.hx);
        const double ay = L.dim > 1 ? theta_ / (L.hy * L.hy) : 0.0;
        const double diag = sigma_ + 2.0 * ax + 2.0 * ay;
        std::vector<double> u(L.u.size(), 0.0);
        load(x, u);
        const int s = L.stride();
        const int j0 = L.dim > 1 ? 1 : 0, j1 = L.dim > 1 ? L.ny : 1;
        std::size_t k = 0;
        for (int j = j0; j < j1; ++j)
            for (int i = 1; i < L.nx; ++i)
            {
                const std::size_t c = L.idx(i, j);
                double v = diag * u[c] - ax * (u[c - 1] + u[c + 1]);
                if (L.dim > 1)
                    v -= ay * (u[c - s] + u[c + s]);
                y[k++] = v;
            }
    }

    void MultigridHierarchy::smooth(Level& L, int sweeps, bool reverse) const
    {
        const double ax = theta_ / (L.hx * L.hx);
        const double ay = L.dim > 1 ? theta_ / (L.hy * L.hy) : 0.0;
        const double inv_diag = 1.0 / (sigma_ + 2.0 * ax + 2.0 * ay);
        const int s = L.stride();
        double* u = L.u.data();
        const double* f = L.f.data();

        for (int sweep = 0; sweep < sweeps; ++sweep)
            for (int c = 0; c < 2; ++c)
            {
                const int color = reverse ? 1 - c : c;
                if (L.dim == 1)
                {
                    for (int i = 1 + ((1 + color) % 2); i < L.nx; i += 2)
                        u[i] = (f[i] + ax * (u[i - 1] + u[i + 1])) * inv_diag;
                }
                else
                {
                    for (int j = 1; j < L.ny; ++j)
                    {
                        const int i0 = 1 + ((1 + j + color) % 2);
                        const std::size_t row = static_cast<std::size_t>(j) * s;
                        for (int i = i0; i < L.nx; i += 2)
                        {
                            const std::size_t k = row + i;
                            u[k] = (f[k] + ax * (u[k - 1] + u[k + 1]) + ay * (u[k - s] + u[k + s])) * inv_diag;
                        }
                    }
                }
            }
    }

    void MultigridHierarchy::residual(Level& L) const
    {
        const double ax = theta_ / (L.hx * L.hx);
        const double ay = L.dim > 1 ? theta_ / (L.hy * L.hy) : 0.0;
        const double diag = sigma_ + 2.0 * ax + 2.0 * ay;
        const int s = L.stride();
        const double* u = L.u.data();
        const double* f = L.f.data();
        double* r = L.r.data();
        if (L.dim == 1)
        {
            for (int i = 1; i < L.nx; ++i)
                r[i] = f[i] - (diag * u[i] - ax * (u[i - 1] + u[i + 1]));
            return;
        }
        for (int j = 1; j < L.ny; ++j)
        {
            const std::size_t row = static_cast<std::size_t>(j) * s;
            for (int i = 1; i < L.nx; ++i)
            {
                const std::size_t k = row + i;
                r[k] = f[k] - (diag * u[k] - ax * (u[k - 1] + u[k + 1]) - ay * (u[k - s] + u[k + s]));
            }
        }
    }

    void MultigridHierarchy::restrict_residual(const Level& F, Level& C) const
    {
        const double* r = F.r.data();
        double* f = C.f.data();
        if (F.dim == 1)
        {
            for (int I = 1; I < C.nx; ++I)
                f[I] = 0.25 * (r[2 * I - 1] + 2.0 * r[2 * I] + r[2 * I + 1]);
            return;
        }
        const int s = F.stride();
        for (int J = 1; J < C.ny; ++J)
            for (int I = 1; I < C.nx; ++I)
            {
                const std::size_t k = static_cast<std::size_t>(2 * J) * s + 2 * I;
                const double centre = r[k];
                const double edges = r[k - 1] + r[k + 1] + r[k - s] + r[k + s];
                const double corners = r[k - s - 1] + r[k - s + 1] + r[k + s - 1] + r[k + s + 1];
                f[C.idx(I, J)] = (4.0 * centre + 2.0 * edges + corners) / 16.0;
            }
    }

    void MultigridHierarchy::prolong_add(const Level& C, Level& F) const
    {
        const double* e = C.u.data();
        double* u = F.u.data();
        if (F.dim == 1)
        {
            for (int i = 1; i < F.nx; ++i)
                u[i] += (i % 2 == 0) ? e[i / 2] : 0.5 * (e[(i - 1) / 2] + e[(i + 1) / 2]);
            return;
        }
        const int cs = C.stride();
        for (int j = 1; j < F.ny; ++j)
        {
            const int J0 = j / 2, J1 = (j + 1) / 2; // equal when j is even
            const double wy = (j % 2 == 0) ? 1.0 : 0.5;
            for (int i = 1; i < F.nx; ++i)
            {
                const int I0 = i / 2, I1 = (i + 1) / 2;
                const double wx = (i % 2 == 0) ? 1.0 : 0.5;
                double v;
                if (i % 2 == 0 && j % 2 == 0)
                    v = e[J0 * cs + I0];
                else if (j % 2 == 0)
                    v = wx * (e[J0 * cs + I0] + e[J0 * cs + I1]);
                else if (i % 2 == 0)
                    v = wy * (e[J0 * cs + I0] + e[J1 * cs + I0]);
                else
                    v = 0.25 * (e[J0 * cs + I0] + e[J0 * cs + I1] + e[J1 * cs + I0] + e[J1 * cs + I1]);
                u[F.idx(i, j)] += v;
            }
        }
    }

    void MultigridHierarchy::coarse_solve(Level& L) const
    {
        const int cx = L.nx - 1, cy = L.dim > 1 ? L.ny - 1 : 1;
        const int j0 = L.dim > 1 ? 1 : 0;
        std::vector<double> rhs(coarse_n_);
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i)
                rhs[j * cx + i] = L.f[L.idx(i + 1, j + j0)];
        LAPACKE_dgetrs(LAPACK_COL_MAJOR, 'N', coarse_n_, 1, coarse_lu_.data(), coarse_n_, coarse_piv_.data(), rhs.data(), coarse_n_);
        for (int j = 0; j < cy; ++j)
            for (int i = 0; i < cx; ++i)
                L.u[L.idx(i + 1, j + j0)] = rhs[j * cx + i];
    }

    void MultigridHierarchy::cycle(std::size_t l, int nu1, int nu2)
    {
        Level& L = levels_[l];
        if (l + 1 == levels_.size())
        {
            coarse_solve(L);
            return;
        }
        smooth(L, nu1, false);
        residual(L);
        Level& C = levels_[l + 1];
        restrict_residual(L, C);
        std::fill(C.u.begin(), C.u.end(), 0.0);
        cycle(l + 1, nu1, nu2);
        prolong_add(C, L);
        smooth(L, nu2, true);
    }

    void MultigridHierarchy::vcycle(std::span<const double> b, std::span<double> x, int nu1, int nu2)
    {
        if (b.size() != size() || x.size() != size())
            throw std::invalid_argument("vcycle: size mismatch");
        Level& L = levels_.front();
        load(b, L.f);
        load(x, L.u);
        cycle(0, nu1, nu2);
        store(L.u, x);
    }

    void mg_vcycle(MultigridHierarchy& hierarchy, std::span<const double> b, std::span<double> x, int nu1, int nu2)
    {
        hierarchy.vcycle(b, x, nu1, nu2);
    }

    double MultigridHierarchy::level_weight(std::size_t l) const
    {
        const Level& F = levels_.front();
        const Level& L = levels_[l];
        double w = static_cast<double>(L.nx) / F.nx;
        if (L.dim > 1)
            w *= static_cast<double>(L.ny) / F.ny;
        return w;
    }

    double MultigridHierarchy::vcycle_work() const
    {
        // smoothing sweeps plus one residual evaluation per non-coarsest level
        double w = 0.0;
        for (std::size_t l = 0; l + 1 < levels_.size(); ++l)
            w += level_weight(l) * (options_.pre_smooth + options_.post_smooth + 1);
        return w;
    }

    double MultigridHierarchy::interior_norm(const std::vector<double>& v) const
    {
        const Level& L = levels_.front();
        const int j0 = L.dim > 1 ? 1 : 0, j1 = L.dim > 1 ? L.ny : 1;
        double s = 0.0;
        for (int j = j0; j < j1; ++j)
            for (int i = 1; i < L.nx; ++i)
            {
                const double a = v[L.idx(i, j)];
                s += a * a;
            }
        return std::sqrt(s);
    }

    SolveReport MultigridHierarchy::solve(std::span<const double> b, std::span<double> x, double tol, int max_cycles)
    {
        if (b.size() != size() || x.size() != size())
            throw std::invalid_argument("multigrid solve: size mismatch");
        SolveReport rep;
        const double bnorm = norm2(b);
        if (bnorm == 0.0)
        {
            std::fill(x.begin(), x.end(), 0.0);
            rep.converged = true;
            rep.residual_history.push_back(0.0);
            return rep;
        }
        // iterate and right-hand side stay in the finest level between cycles
        Level& L = levels_.front();
        load(b, L.f);
        load(x, L.u);
        auto resid = [&] {
            residual(L);
            return interior_norm(L.r);
        };
        double rn = resid();
        rep.residual_history.push_back(rn);
        rep.relative_residual = rn / bnorm;
        double work = 1.0;
        while (rep.relative_residual > tol && rep.iterations < max_cycles)
        {
            cycle(0, options_.pre_smooth, options_.post_smooth);
            rn = resid();
            work += vcycle_work() + 1.0;
            ++rep.iterations;
            rep.residual_history.push_back(rn);
            rep.relative_residual = rn / bnorm;
        }
        store(L.u, x);
        rep.converged = rep.relative_residual <= tol;
        rep.work_units = static_cast<long>(std::ceil(work));
        if (!rep.converged)
            rep.message = "multigrid: maximum number of cycles reached";
        return rep;
    }

    SolveReport MultigridHierarchy::smoother_solve(std::span<const double> b, std::span<double> x, double tol, int max_sweeps)
    {
        SolveReport rep;
        const std::size_t n = size();
        const double bnorm = norm2(b);
        Level& L = levels_.front();
        load(b, L.f);
        load(x, L.u);
        std::vector<double> r(n);
        auto resid = [&] {
            residual(L);
            store(L.r, r);
            return norm2(r);
        };
        double rn = resid();
        rep.residual_history.push_back(rn);
        rep.relative_residual = bnorm > 0.0 ? rn / bnorm : 0.0;
        double work = 1.0;
        // residual checked every 10 sweeps
        while (rep.relative_residual > tol && rep.iterations < max_sweeps)
        {
            const int k = std::min(10, max_sweeps - rep.iterations);
            smooth(L, k, false);
            rep.iterations += k;
            rn = resid();
            work += k + 1.0;
            rep.residual_history.push_back(rn);
            rep.relative_residual = rn / bnorm;
        }
        store(L.u, x);
        rep.converged = rep.relative_residual <= tol;
        rep.work_units = static_cast<long>(std::ceil(work));
        return rep;
    }

    LinearOperator MultigridHierarchy::as_operator() const
    {
        return LinearOperator{[this](std::span<const double> x, std::span<double> y) { apply(x, y); }, size(), true};
    }
}
