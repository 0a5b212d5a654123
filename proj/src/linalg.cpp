#include "waveholtz/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <lapacke.h>

namespace wh
{
    double dot(std::span<const double> a, std::span<const double> b)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            s += a[i] * b[i];
        return s;
    }

    double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

    SolveReport cg_solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, double tol, int maxit,
                         const ApplyFn& preconditioner)
    {
        const std::size_t n = A.size;
        if (b.size() != n || x.size() != n)
            throw std::invalid_argument("cg_solve: size mismatch");

        SolveReport rep;
        const double bnorm = norm2(b);
        if (bnorm == 0.0)
        {
            std::fill(x.begin(), x.end(), 0.0);
            rep.converged = true;
            rep.residual_history.push_back(0.0);
            return rep;
        }

        Vector r(n), z(n), p(n), q(n);
        A.apply(x, q);
        ++rep.work_units;
        for (std::size_t i = 0; i < n; ++i)
            r[i] = b[i] - q[i];

        double rnorm = norm2(r);
        rep.residual_history.push_back(rnorm);
        rep.relative_residual = rnorm / bnorm;
        if (rep.relative_residual <= tol)
        {
            rep.converged = true;
            return rep;
        }

        double rho_old = 0.0;
        for (int it = 1; it <= maxit; ++it)
        {
            if (preconditioner)
                preconditioner(r, z);
            else
                std::copy(r.begin(), r.end(), z.begin());

            const double rho = dot(r, z);
            if (it == 1)
                p = z;
            else
            {
                const double beta = rho / rho_old;
                for (std::size_t i = 0; i < n; ++i)
                    p[i] = z[i] + beta * p[i];
            }
            rho_old = rho;

            A.apply(p, q);
            ++rep.work_units;
            const double pq = dot(p, q);
            if (!(pq > 0.0))
            {
                rep.iterations = it;
                rep.message = "breakdown: p^T A p is not positive";
                return rep;
            }
            const double alpha = rho / pq;
            for (std::size_t i = 0; i < n; ++i)
            {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }

            rnorm = norm2(r);
            rep.residual_history.push_back(rnorm);
            rep.iterations = it;
            rep.relative_residual = rnorm / bnorm;
            if (rep.relative_residual <= tol)
            {
                rep.converged = true;
                return rep;
            }
        }
        rep.message = "maximum number of iterations reached";
        return rep;
    }

    namespace
    {
        void givens(double a, double b, double& c, double& s)
        {
            if (b == 0.0)
            {
                c = 1.0;
                s = 0.0;
            }
            else if (std::abs(b) > std::abs(a))
            {
                const double t = a / b;
                s = 1.0 / std::sqrt(1.0 + t * t);
                c = t * s;
            }
            else
            {
                const double t = b / a;
                c = 1.0 / std::sqrt(1.0 + t * t);
                s = t * c;
            }
        }
    }

    SolveReport gmres_solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, double tol, int restart, int maxit,
                            const ApplyFn& preconditioner)
    {
        const std::size_t n = A.size;
        if (b.size() != n || x.size() != n)
            throw std::invalid_argument("gmres_solve: size mismatch");
        if (restart < 1)
            throw std::invalid_argument("gmres_solve: restart length must be positive");

        SolveReport rep;
        const double bnorm = norm2(b);
        if (bnorm == 0.0)
        {
            std::fill(x.begin(), x.end(), 0.0);
            rep.converged = true;
            rep.residual_history.push_back(0.0);
            return rep;
        }

        const int m = restart;
        std::vector<Vector> V(m + 1, Vector(n));
        std::vector<Vector> Z; // preconditioned directions
        if (preconditioner)
            Z.assign(m, Vector(n));
        std::vector<Vector> H(m + 1, Vector(m, 0.0)); // H[i][j]
        Vector cs(m), sn(m), g(m + 1), w(n), tmp(n);

        auto residual = [&](Vector& r) {
            A.apply(x, tmp);
            ++rep.work_units;
            for (std::size_t i = 0; i < n; ++i)
                r[i] = b[i] - tmp[i];
            return norm2(r);
        };

        double beta = residual(V[0]);
        rep.residual_history.push_back(beta);
        rep.relative_residual = beta / bnorm;
        if (rep.relative_residual <= tol)
        {
            rep.converged = true;
            return rep;
        }

        int total = 0;
        while (total < maxit)
        {
            for (double& v : V[0])
                v /= beta;
            std::fill(g.begin(), g.end(), 0.0);
            g[0] = beta;

            int j = 0;
            for (; j < m && total < maxit; ++j)
            {
                const Vector* dir = &V[j];
                if (preconditioner)
                {
                    preconditioner(V[j], Z[j]);
                    dir = &Z[j];
                }
                A.apply(*dir, w);
                ++rep.work_units;

                for (int i = 0; i <= j; ++i)
                {
                    H[i][j] = dot(w, V[i]);
                    for (std::size_t k = 0; k < n; ++k)
                        w[k] -= H[i][j] * V[i][k];
                }
                H[j + 1][j] = norm2(w);
                if (H[j + 1][j] != 0.0)
                    for (std::size_t k = 0; k < n; ++k)
                        V[j + 1][k] = w[k] / H[j + 1][j];

                for (int i = 0; i < j; ++i)
                {
                    const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
                    H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
                    H[i][j] = t;
                }
                givens(H[j][j], H[j + 1][j], cs[j], sn[j]);
                H[j][j] = cs[j] * H[j][j] + sn[j] * H[j + 1][j];
                H[j + 1][j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] = cs[j] * g[j];

                ++total;
                const double est = std::abs(g[j + 1]);
                rep.residual_history.push_back(est);
                rep.iterations = total;
                rep.relative_residual = est / bnorm;
                if (rep.relative_residual <= tol || est == 0.0)
                {
                    ++j;
                    break;
                }
            }

            // x <- x + M^{-1} V y, with H y = g (upper triangular, size j)
            Vector y(j);
            for (int i = j - 1; i >= 0; --i)
            {
                double s = g[i];
                for (int k = i + 1; k < j; ++k)
                    s -= H[i][k] * y[k];
                y[i] = s / H[i][i];
            }
            for (int i = 0; i < j; ++i)
            {
                const Vector& d = preconditioner ? Z[i] : V[i];
                for (std::size_t k = 0; k < n; ++k)
                    x[k] += y[i] * d[k];
            }

            beta = residual(V[0]);
            rep.relative_residual = beta / bnorm;
            if (rep.relative_residual <= tol || beta == 0.0)
            {
                rep.converged = true;
                return rep;
            }
            // estimate below tol with the true residual above it: restart from x
        }
        rep.message = "stagnation: maximum number of iterations reached";
        return rep;
    }

    Vector thomas_solve(const Tridiagonal& T, std::span<const double> b)
    {
        const std::size_t n = T.diag.size();
        if (b.size() != n || T.sub.size() != n || T.sup.size() != n)
            throw std::invalid_argument("thomas_solve: size mismatch");
        Vector c(n), d(n), x(n);
        double piv = T.diag[0];
        if (piv == 0.0)
            throw std::runtime_error("thomas_solve: zero pivot in row 0");
        c[0] = T.sup[0] / piv;
        d[0] = b[0] / piv;
        for (std::size_t i = 1; i < n; ++i)
        {
            piv = T.diag[i] - T.sub[i] * c[i - 1];
            if (piv == 0.0)
                throw std::runtime_error("thomas_solve: zero pivot in row " + std::to_string(i));
            c[i] = T.sup[i] / piv;
            d[i] = (b[i] - T.sub[i] * d[i - 1]) / piv;
        }
        x[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            x[i] = d[i] - c[i] * x[i + 1];
        return x;
    }

    DenseMatrix to_dense(const std::vector<Triplet>& t, std::size_t n)
    {
        DenseMatrix A(n, n);
        for (const auto& e : t)
            A(e.row, e.col) += e.value;
        return A;
    }

    DenseMatrix assemble_dense(const LinearOperator& A)
    {
        const std::size_t n = A.size;
        DenseMatrix M(n, n);
        Vector e(n, 0.0), col(n);
        for (std::size_t j = 0; j < n; ++j)
        {
            e[j] = 1.0;
            A.apply(e, col);
            e[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                M(i, j) = col[i];
        }
        return M;
    }

    Vector dense_solve(DenseMatrix A, std::span<const double> b)
    {
        const auto n = static_cast<lapack_int>(A.rows);
        if (A.rows != A.cols || b.size() != A.rows)
            throw std::invalid_argument("dense_solve: size mismatch");
        Vector x(b.begin(), b.end());
        std::vector<lapack_int> ipiv(n);
        const lapack_int info = LAPACKE_dgesv(LAPACK_COL_MAJOR, n, 1, A.data.data(), n, ipiv.data(), x.data(), n);
        if (info != 0)
            throw std::runtime_error("dense_solve: singular matrix (LAPACK info " + std::to_string(info) + ")");
        return x;
    }

    Vector banded_solve(const std::vector<Triplet>& t, std::size_t n, std::span<const double> b)
    {
        if (b.size() != n)
            throw std::invalid_argument("banded_solve: size mismatch");
        long kl = 0, ku = 0;
        for (const auto& e : t)
        {
            const long d = static_cast<long>(e.row) - static_cast<long>(e.col);
            kl = std::max(kl, d);
            ku = std::max(ku, -d);
        }
        const long ldab = 2 * kl + ku + 1;
        if (static_cast<double>(ldab) * static_cast<double>(n) > 4e8)
            throw std::length_error("banded_solve: band storage too large");

        Vector ab(static_cast<std::size_t>(ldab) * n, 0.0);
        for (const auto& e : t)
        {
            const long i = static_cast<long>(e.row), j = static_cast<long>(e.col);
            ab[static_cast<std::size_t>(j * ldab + kl + ku + i - j)] += e.value;
        }
        Vector x(b.begin(), b.end());
        std::vector<lapack_int> ipiv(n);
        const lapack_int info = LAPACKE_dgbsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n), static_cast<lapack_int>(kl),
                                              static_cast<lapack_int>(ku), 1, ab.data(), static_cast<lapack_int>(ldab), ipiv.data(),
                                              x.data(), static_cast<lapack_int>(n));
        if (info != 0)
            throw std::runtime_error("banded_solve: singular matrix (LAPACK info " + std::to_string(info) + ")");
        return x;
    }

    EigenDecomposition dense_symmetric_eig(const DenseMatrix& M)
    {
        const std::size_t n = M.rows;
        if (M.cols != n)
            throw std::invalid_argument("dense_symmetric_eig: matrix must be square");
        if (n > 4096)
            throw std::invalid_argument("dense_symmetric_eig: dimension exceeds the oracle cap of 4096");

        double scale = 0.0;
        for (double v : M.data)
            scale = std::max(scale, std::abs(v));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = j + 1; i < n; ++i)
                if (std::abs(M(i, j) - M(j, i)) > 1e-12 * std::max(scale, 1e-300))
                    throw std::invalid_argument("dense_symmetric_eig: matrix is not symmetric");

        // row-major working copies for cache-friendly row rotations
        std::vector<double> a(n * n), v(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = 0; j < n; ++j)
                a[i * n + j] = M(i, j);
            v[i * n + i] = 1.0;
        }

        auto off_norm = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    s += a[i * n + j] * a[i * n + j];
            return std::sqrt(2.0 * s);
        };

        double fro = 0.0;
        for (double x : a)
            fro += x * x;
        fro = std::sqrt(fro);

        for (int sweep = 0; sweep < 100 && n > 1; ++sweep)
        {
            if (off_norm() <= 1e-15 * fro)
                break;
            for (std::size_t p = 0; p + 1 < n; ++p)
                for (std::size_t q = p + 1; q < n; ++q)
                {
                    const double apq = a[p * n + q];
                    if (std::abs(apq) <= 1e-300)
                        continue;
                    const double app = a[p * n + p], aqq = a[q * n + q];
                    const double theta = (aqq - app) / (2.0 * apq);
                    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;

                    // A <- J^T A J, rows then columns
                    double* rp = &a[p * n];
                    double* rq = &a[q * n];
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        const double x = rp[k], y = rq[k];
                        rp[k] = c * x - s * y;
                        rq[k] = s * x + c * y;
                    }
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        double* row = &a[k * n];
                        const double x = row[p], y = row[q];
                        row[p] = c * x - s * y;
                        row[q] = s * x + c * y;
                    }
                    a[p * n + q] = a[q * n + p] = 0.0;

                    // eigenvectors stored as rows of v
                    double* vp = &v[p * n];
                    double* vq = &v[q * n];
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        const double x = vp[k], y = vq[k];
                        vp[k] = c * x - s * y;
                        vq[k] = s * x + c * y;
                    }
                }
        }

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });

        EigenDecomposition out;
        out.values.resize(n);
        out.vectors = DenseMatrix(n, n);
        for (std::size_t k = 0; k < n; ++k)
        {
            const std::size_t src = order[k];
            out.values[k] = a[src * n + src];
            for (std::size_t i = 0; i < n; ++i)
                out.vectors(i, k) = v[src * n + i];
        }
        return out;
    }
}
