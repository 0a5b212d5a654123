#ifndef WAVEHOLTZ_LINALG_HPP
#define WAVEHOLTZ_LINALG_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "waveholtz/grid.hpp"

namespace wh
{
    using Vector = std::vector<double>;

    /// y <- A x
    using ApplyFn = std::function<void(std::span<const double> x, std::span<double> y)>;

    struct LinearOperator
    {
        ApplyFn apply;
        std::size_t size = 0;
        bool symmetric = false;
    };

    struct SolveReport
    {
        int iterations = 0;
        double relative_residual = 0.0;
        bool converged = false;
        long work_units = 0; ///< operator applications
        std::vector<double> residual_history; ///< ||r|| after each iteration (index 0: initial)
        std::string message;
    };

    double dot(std::span<const double> a, std::span<const double> b);
    double norm2(std::span<const double> a);

    /// @brief (Preconditioned) conjugate gradients for SPD systems.
    ///
    /// x holds the initial guess on entry. Stops when ||b - A x|| <= tol ||b||.
    /// A breakdown (p^T A p <= 0) is reported through `message`, not thrown.
    SolveReport cg_solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, double tol, int maxit,
                         const ApplyFn& preconditioner = nullptr);

    /// @brief Restarted GMRES with modified Gram-Schmidt Arnoldi and Givens rotations.
    ///
    /// x holds the initial guess on entry. Stops when ||b - A x|| <= tol ||b||.
    /// Optional right preconditioner. residual_history holds the (estimated)
    /// residual norm after every inner iteration.
    SolveReport gmres_solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, double tol, int restart, int maxit,
                            const ApplyFn& preconditioner = nullptr);

    /// Tridiagonal system: sub[i] couples x[i-1] into row i (sub[0] unused), sup[i] couples x[i+1].
    struct Tridiagonal
    {
        Vector sub, diag, sup;
    };

    /// Thomas algorithm; throws std::runtime_error on a zero pivot.
    Vector thomas_solve(const Tridiagonal& T, std::span<const double> b);

    /// Column-major dense matrix.
    struct DenseMatrix
    {
        std::size_t rows = 0, cols = 0;
        Vector data;

        DenseMatrix() = default;
        DenseMatrix(std::size_t r, std::size_t c) : rows{r}, cols{c}, data(r * c, 0.0) {}
        double& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
        double operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
    };

    DenseMatrix to_dense(const std::vector<Triplet>& t, std::size_t n);

    /// Dense matrix of a linear operator, assembled column by column.
    DenseMatrix assemble_dense(const LinearOperator& A);

    /// LU with partial pivoting (LAPACK); throws std::runtime_error when singular.
    Vector dense_solve(DenseMatrix A, std::span<const double> b);

    /// Banded LU with partial pivoting (LAPACK) of a sparse matrix given by triplets.
    Vector banded_solve(const std::vector<Triplet>& t, std::size_t n, std::span<const double> b);

    struct EigenDecomposition
    {
        Vector values;       ///< ascending
        DenseMatrix vectors; ///< column k is the unit eigenvector of values[k]
    };

    /// @brief Symmetric eigensolver by cyclic Jacobi rotations.
    ///
    /// Limited to n <= 4096; throws std::invalid_argument beyond that or for a
    /// nonsymmetric input.
    EigenDecomposition dense_symmetric_eig(const DenseMatrix& A);
}

#endif
