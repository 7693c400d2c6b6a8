#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wemsfem/sparse.hpp"

namespace wemsfem {

class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, double achieved_residual = -1.0, int iterations = 0)
        : std::runtime_error(what), residual_(achieved_residual), iterations_(iterations)
    {
    }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Sparse LU factorization of a square matrix (UMFPACK). The factorization is
/// immutable once computed; solve() may be called concurrently.
class DirectSolver {
public:
    /// Relative pivot guard: min |u_kk| / max |u_kk| below this is reported singular.
    static constexpr double pivot_guard = 1e-14;

    explicit DirectSolver(const SparseMatrix& a);
    ~DirectSolver();
    DirectSolver(DirectSolver&&) noexcept;
    DirectSolver& operator=(DirectSolver&&) noexcept;
    DirectSolver(const DirectSolver&) = delete;
    DirectSolver& operator=(const DirectSolver&) = delete;

    int size() const;
    std::vector<double> solve(std::span<const double> rhs) const;
    /// Reciprocal pivot ratio reported by the factorization.
    double rcond() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> direct_solve(const SparseMatrix& a, std::span<const double> rhs);

struct KrylovOptions {
    double tol = 1e-10;
    int max_iter = 5000;
    int restart = 50;
};

struct KrylovResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Restarted GMRES with right ILU(0) preconditioning. Throws SolverError carrying
/// the achieved residual when the iteration limit is hit.
KrylovResult krylov_solve(const SparseMatrix& a, std::span<const double> rhs, const KrylovOptions& opts = {});

/// Zero-fill incomplete LU factorization on the sparsity pattern of A.
class Ilu0 {
public:
    explicit Ilu0(const SparseMatrix& a);
    /// x = (LU)^{-1} b
    void apply(std::span<const double> b, std::span<double> x) const;

private:
    SparseMatrix lu_;
    std::vector<std::size_t> diag_pos_;
};

struct SolverRouting {
    /// Systems up to this many unknowns go to the direct solver.
    int direct_limit = 1'200'000;
    KrylovOptions krylov;
};

/// Direct or Krylov solve depending on system size.
std::vector<double> solve(const SparseMatrix& a, std::span<const double> rhs, const SolverRouting& routing = {});

double norm2(std::span<const double> v);
/// ‖A x − b‖₂ / ‖b‖₂ (or the absolute residual when b = 0).
double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b);

}  // namespace wemsfem
