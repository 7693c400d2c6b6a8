#include "wemsfem/solvers.hpp"

#include <umfpack.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace wemsfem {

double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b)
{
    auto r = a.matvec(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const double nb = norm2(b);
    return nb > 0.0 ? norm2(r) / nb : norm2(r);
}

// ---------------------------------------------------------------------------
// Direct solver

struct DirectSolver::Impl {
    int n = 0;
    // CSR arrays of A read by UMFPACK as the CSC arrays of Aᵀ.
    std::vector<int> ptr;
    std::vector<int> idx;
    std::vector<double> val;
    void* numeric = nullptr;
    double rcond = 0.0;

    ~Impl()
    {
        if (numeric != nullptr) umfpack_di_free_numeric(&numeric);
    }
};

DirectSolver::DirectSolver(const SparseMatrix& a) : impl_(std::make_unique<Impl>())
{
    if (a.rows() != a.cols()) {
        throw DimensionError("DirectSolver: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (a.nnz() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
        throw SolverError("DirectSolver: too many nonzeros for 32-bit indices");
    }
    auto& im = *impl_;
    im.n = a.rows();
    if (im.n == 0) return;
    im.ptr.assign(a.offsets().begin(), a.offsets().end());
    im.idx = a.columns();
    im.val = a.values();

    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    void* symbolic = nullptr;
    int status = umfpack_di_symbolic(im.n, im.n, im.ptr.data(), im.idx.data(), im.val.data(), &symbolic, control, info);
    if (status != UMFPACK_OK) {
        if (symbolic != nullptr) umfpack_di_free_symbolic(&symbolic);
        throw SolverError("DirectSolver: symbolic analysis failed (UMFPACK status " + std::to_string(status) + ")");
    }
    status = umfpack_di_numeric(im.ptr.data(), im.idx.data(), im.val.data(), symbolic, &im.numeric, control, info);
    umfpack_di_free_symbolic(&symbolic);
    if (status == UMFPACK_WARNING_singular_matrix) {
        throw SolverError("DirectSolver: matrix is singular (zero pivot)");
    }
    if (status != UMFPACK_OK) {
        throw SolverError("DirectSolver: numeric factorization failed (UMFPACK status " + std::to_string(status) + ")");
    }
    im.rcond = info[UMFPACK_RCOND];
    if (!(im.rcond >= pivot_guard)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", im.rcond);
        throw SolverError(std::string("DirectSolver: pivot ratio ") + buf + " below guard; matrix singular to working precision");
    }
}

DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

int DirectSolver::size() const { return impl_->n; }
double DirectSolver::rcond() const { return impl_->rcond; }

std::vector<double> DirectSolver::solve(std::span<const double> rhs) const
{
    const auto& im = *impl_;
    if (rhs.size() != static_cast<std::size_t>(im.n)) {
        throw DimensionError("DirectSolver::solve: rhs has " + std::to_string(rhs.size()) + " entries, expected " +
                             std::to_string(im.n));
    }
    std::vector<double> x(rhs.size(), 0.0);
    if (im.n == 0) return x;
    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    control[UMFPACK_IRSTEP] = 2;
    const int status = umfpack_di_solve(UMFPACK_Aat, im.ptr.data(), im.idx.data(), im.val.data(), x.data(),
                                        rhs.data(), im.numeric, control, info);
    if (status != UMFPACK_OK) throw SolverError("DirectSolver::solve: UMFPACK status " + std::to_string(status));
    return x;
}

std::vector<double> direct_solve(const SparseMatrix& a, std::span<const double> rhs)
{
    return DirectSolver(a).solve(rhs);
}

// ---------------------------------------------------------------------------
// ILU(0)

Ilu0::Ilu0(const SparseMatrix& a) : lu_(a)
{
    if (a.rows() != a.cols()) throw DimensionError("Ilu0: matrix must be square");
    const int n = a.rows();
    const auto& off = lu_.offsets();
    const auto& col = lu_.columns();
    auto& val = lu_.values();
    diag_pos_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto k = lu_.find(i, i);
        if (k < 0) throw SolverError("Ilu0: missing diagonal entry in row " + std::to_string(i));
        diag_pos_[i] = static_cast<std::size_t>(k);
    }
    std::vector<std::ptrdiff_t> pos(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = static_cast<std::ptrdiff_t>(k);
        for (std::size_t k = off[i]; k < diag_pos_[i]; ++k) {
            const int j = col[k];
            const double piv = val[diag_pos_[j]];
            if (piv == 0.0) throw SolverError("Ilu0: zero pivot in row " + std::to_string(j));
            val[k] /= piv;
            const double lik = val[k];
            for (std::size_t m = diag_pos_[j] + 1; m < off[j + 1]; ++m) {
                const auto p = pos[col[m]];
                if (p >= 0) val[static_cast<std::size_t>(p)] -= lik * val[m];
            }
        }
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = -1;
        if (val[diag_pos_[i]] == 0.0) throw SolverError("Ilu0: zero pivot in row " + std::to_string(i));
    }
}

void Ilu0::apply(std::span<const double> b, std::span<double> x) const
{
    const int n = lu_.rows();
    const auto& off = lu_.offsets();
    const auto& col = lu_.columns();
    const auto& val = lu_.values();
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = off[i]; k < diag_pos_[i]; ++k) s -= val[k] * x[col[k]];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (std::size_t k = diag_pos_[i] + 1; k < off[i + 1]; ++k) s -= val[k] * x[col[k]];
        x[i] = s / val[diag_pos_[i]];
    }
}

// ---------------------------------------------------------------------------
// GMRES(m) with right preconditioning

KrylovResult krylov_solve(const SparseMatrix& a, std::span<const double> rhs, const KrylovOptions& opts)
{
    if (a.rows() != a.cols()) throw DimensionError("krylov_solve: matrix must be square");
    if (rhs.size() != static_cast<std::size_t>(a.rows())) throw DimensionError("krylov_solve: rhs size mismatch");
    const auto n = rhs.size();
    KrylovResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) return res;

    const Ilu0 prec(a);
    const int m = std::max(1, opts.restart);
    std::vector<std::vector<double>> v(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
    std::vector<double> h(static_cast<std::size_t>(m + 1) * m);
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m) + 1);
    std::vector<double> w(n), z(n), r(rhs.begin(), rhs.end());
    auto H = [&](int i, int j) -> double& { return h[static_cast<std::size_t>(i) * m + j]; };

    double rnorm = bnorm;
    int iters = 0;
    while (iters < opts.max_iter) {
        // r = b - A x
        std::copy(rhs.begin(), rhs.end(), r.begin());
        a.multiply_add(res.x, r, -1.0);
        rnorm = norm2(r);
        if (rnorm <= opts.tol * bnorm) break;
        for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / rnorm;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = rnorm;
        int k = 0;
        for (; k < m && iters < opts.max_iter; ++k, ++iters) {
            prec.apply(v[k], z);
            std::fill(w.begin(), w.end(), 0.0);
            a.multiply_add(z, w);
            for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
                double d = 0.0;
                for (std::size_t t = 0; t < n; ++t) d += w[t] * v[i][t];
                H(i, k) = d;
                for (std::size_t t = 0; t < n; ++t) w[t] -= d * v[i][t];
            }
            const double wn = norm2(w);
            H(k + 1, k) = wn;
            if (wn > 0.0) {
                for (std::size_t t = 0; t < n; ++t) v[k + 1][t] = w[t] / wn;
            }
            for (int i = 0; i < k; ++i) {
                const double t0 = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t0;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            if (denom == 0.0) throw SolverError("krylov_solve: breakdown", std::abs(g[k]) / bnorm, iters);
            cs[k] = H(k, k) / denom;
            sn[k] = H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (std::abs(g[k + 1]) <= opts.tol * bnorm) {
                ++k;
                ++iters;
                break;
            }
            if (wn == 0.0) {  // lucky breakdown: exact solution in the subspace
                ++k;
                ++iters;
                break;
            }
        }
        // Back substitution and update x += M^{-1} V y.
        std::vector<double> y(static_cast<std::size_t>(k));
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
            y[i] = s / H(i, i);
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < k; ++j) {
            for (std::size_t t = 0; t < n; ++t) w[t] += y[j] * v[j][t];
        }
        prec.apply(w, z);
        for (std::size_t t = 0; t < n; ++t) res.x[t] += z[t];
    }
    std::copy(rhs.begin(), rhs.end(), r.begin());
    a.multiply_add(res.x, r, -1.0);
    rnorm = norm2(r);
    res.iterations = iters;
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual > opts.tol) {
        throw SolverError("krylov_solve: no convergence after " + std::to_string(iters) + " iterations (relative residual " +
                              std::to_string(res.relative_residual) + ")",
                          res.relative_residual, iters);
    }
    return res;
}

std::vector<double> solve(const SparseMatrix& a, std::span<const double> rhs, const SolverRouting& routing)
{
    if (a.rows() <= routing.direct_limit) return direct_solve(a, rhs);
    return krylov_solve(a, rhs, routing.krylov).x;
}

}  // namespace wemsfem
