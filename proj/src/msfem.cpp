#include "wemsfem/msfem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "wemsfem/parallel.hpp"

namespace wemsfem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> supg_load(const StructuredGrid& grid, const ProblemCoefficients& coeffs, int quad_order)
{
    const ElementIntegrator integ(coeffs, grid, quad_order, {true, true, true});
    std::vector<double> load(static_cast<std::size_t>(grid.num_nodes()), 0.0);
    ElementIntegrator::Matrix4 e{};
    ElementIntegrator::Vector4 f{};
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            integ.integrate(ci, cj, e, f);
            const auto nodes = cell_nodes(grid, ci, cj);
            for (int a = 0; a < 4; ++a) load[static_cast<std::size_t>(nodes[a])] += f[a];
        }
    }
    return load;
}

struct PatchResult {
    std::vector<BasisColumn> columns;
    std::vector<double> bubble;
};

/// Local multiscale space of one patch (and optionally its bubble), sharing one factorization.
PatchResult build_patch(const GridHierarchy& g, const CoarsePatch& patch, std::span<const double> chi, int level,
                        EdgeBasisKind kind, const ProblemCoefficients& coeffs, int quad_order, bool with_bubble)
{
    PatchResult out;
    const LocalProblem local(patch, coeffs, quad_order);
    const auto space = edge_space(patch, level, g, kind);
    for (int t = 0; t < space.dimension(); ++t) {
        const auto& fn = space.traces[static_cast<std::size_t>(t)];
        auto values = local.extend(fn.values);
        bool nonzero = false;
        for (std::size_t k = 0; k < values.size(); ++k) {
            values[k] *= chi[k];
            nonzero = nonzero || values[k] != 0.0;
        }
        if (!nonzero) continue;
        out.columns.push_back(BasisColumn{patch.node, t, fn.level, fn.node_position, std::move(values)});
    }
    if (with_bubble) out.bubble = local.bubble();
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// LocalProblem

LocalProblem::LocalProblem(const CoarsePatch& patch, const ProblemCoefficients& coeffs, int quad_order)
    : patch_node_(patch.node), subgrid_(patch.subgrid), coeffs_(coeffs), quad_order_(quad_order)
{
    if (subgrid_.nx < 2 || subgrid_.ny < 2) {
        throw MultiscaleError("patch " + std::to_string(patch.node) + ": subgrid needs at least 2 fine cells per side");
    }
    auto sys = assemble_supg(coeffs, subgrid_, quad_order);
    load_ = std::move(sys.F);
    part_ = partition_dirichlet(sys.A, subgrid_.boundary_nodes());
    try {
        solver_ = std::make_unique<DirectSolver>(part_.interior);
    } catch (const SolverError& e) {
        throw MultiscaleError("patch " + std::to_string(patch.node) + ": local solve failed: " + e.what());
    }
    std::vector<int> bnd_index(static_cast<std::size_t>(subgrid_.num_nodes()), -1);
    for (std::size_t k = 0; k < part_.boundary_dofs.size(); ++k) bnd_index[static_cast<std::size_t>(part_.boundary_dofs[k])] = static_cast<int>(k);
    loop_to_boundary_.reserve(patch.boundary_loop.size());
    for (int local : patch.boundary_loop) loop_to_boundary_.push_back(bnd_index[static_cast<std::size_t>(local)]);
}

std::vector<double> LocalProblem::solve_interior(std::vector<double> rhs, std::span<const double> boundary_values) const
{
    if (!boundary_values.empty()) part_.coupling.multiply_add(boundary_values, rhs, -1.0);
    const auto x = solver_->solve(rhs);
    std::vector<double> full(static_cast<std::size_t>(subgrid_.num_nodes()), 0.0);
    for (std::size_t k = 0; k < part_.free_dofs.size(); ++k) full[static_cast<std::size_t>(part_.free_dofs[k])] = x[k];
    for (std::size_t k = 0; k < boundary_values.size(); ++k) {
        full[static_cast<std::size_t>(part_.boundary_dofs[k])] = boundary_values[k];
    }
    return full;
}

std::vector<double> LocalProblem::bubble() const
{
    std::vector<double> rhs(part_.free_dofs.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = load_[static_cast<std::size_t>(part_.free_dofs[k])];
    return solve_interior(std::move(rhs), {});
}

std::vector<double> LocalProblem::bubble(const ScalarField& force) const
{
    ProblemCoefficients c = coeffs_;
    c.force = force;
    const auto load = supg_load(subgrid_, c, quad_order_);
    std::vector<double> rhs(part_.free_dofs.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = load[static_cast<std::size_t>(part_.free_dofs[k])];
    return solve_interior(std::move(rhs), {});
}

std::vector<double> LocalProblem::extend(std::span<const double> loop_trace) const
{
    if (loop_trace.size() != loop_to_boundary_.size()) {
        throw DimensionError("LocalProblem::extend: trace has " + std::to_string(loop_trace.size()) +
                             " values, boundary has " + std::to_string(loop_to_boundary_.size()));
    }
    std::vector<double> g(part_.boundary_dofs.size(), 0.0);
    for (std::size_t k = 0; k < loop_trace.size(); ++k) g[static_cast<std::size_t>(loop_to_boundary_[k])] = loop_trace[k];
    // Zero source: the SUPG load vanishes and only the lift contributes.
    return solve_interior(std::vector<double>(part_.free_dofs.size(), 0.0), g);
}

std::vector<double> local_bubble(const CoarsePatch& patch, const ProblemCoefficients& coeffs, int quad_order)
{
    return LocalProblem(patch, coeffs, quad_order).bubble();
}

std::vector<double> harmonic_extension(const CoarsePatch& patch, const EdgeFunction& trace,
                                       const ProblemCoefficients& coeffs, int quad_order)
{
    return LocalProblem(patch, coeffs, quad_order).extend(trace.values);
}

// ---------------------------------------------------------------------------
// BasisMap

BasisMap::BasisMap(const GridHierarchy& g, std::vector<CoarsePatch> patches, std::vector<BasisColumn> columns)
    : rows_(g.num_fine_nodes()), patches_(std::move(patches)), columns_(std::move(columns))
{
    registry_.resize(patches_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        auto& reg = registry_[static_cast<std::size_t>(columns_[j].patch)];
        const int t = columns_[j].trace;
        if (static_cast<int>(reg.size()) <= t) reg.resize(static_cast<std::size_t>(t) + 1, -1);
        reg[static_cast<std::size_t>(t)] = static_cast<int>(j);
    }
}

int BasisMap::find(int patch, int trace) const
{
    if (patch < 0 || patch >= static_cast<int>(registry_.size())) return -1;
    const auto& reg = registry_[static_cast<std::size_t>(patch)];
    if (trace < 0 || trace >= static_cast<int>(reg.size())) return -1;
    return reg[static_cast<std::size_t>(trace)];
}

std::vector<int> BasisMap::columns_up_to_level(int level) const
{
    std::vector<int> out;
    for (int j = 0; j < cols(); ++j) {
        if (columns_[static_cast<std::size_t>(j)].level <= level) out.push_back(j);
    }
    return out;
}

SparseMatrix BasisMap::to_sparse() const
{
    std::vector<Triplet> trip;
    for (int j = 0; j < cols(); ++j) {
        const auto& col = column(j);
        const auto& nodes = patches_[static_cast<std::size_t>(col.patch)].fine_nodes;
        for (std::size_t k = 0; k < col.values.size(); ++k) {
            if (col.values[k] != 0.0) trip.push_back({nodes[k], j, col.values[k]});
        }
    }
    return SparseMatrix::from_triplets(rows_, cols(), trip);
}

std::vector<double> BasisMap::apply(std::span<const double> coefficients, std::span<const int> selection) const
{
    std::vector<int> all;
    if (selection.empty()) {
        all.resize(static_cast<std::size_t>(cols()));
        std::iota(all.begin(), all.end(), 0);
        selection = all;
    }
    if (coefficients.size() != selection.size()) throw DimensionError("BasisMap::apply: coefficient count mismatch");
    std::vector<double> out(static_cast<std::size_t>(rows_), 0.0);
    for (std::size_t s = 0; s < selection.size(); ++s) {
        const auto& col = column(selection[s]);
        const auto& nodes = patches_[static_cast<std::size_t>(col.patch)].fine_nodes;
        for (std::size_t k = 0; k < col.values.size(); ++k) out[static_cast<std::size_t>(nodes[k])] += coefficients[s] * col.values[k];
    }
    return out;
}

BasisMap build_basis(const GridHierarchy& g, const std::vector<CoarsePatch>& patches, const PartitionField& pu,
                     int level, const ProblemCoefficients& coeffs, int quad_order, EdgeBasisKind kind, int workers)
{
    std::vector<PatchResult> results(patches.size());
    parallel_for(static_cast<int>(patches.size()), workers, [&](int p) {
        results[static_cast<std::size_t>(p)] =
            build_patch(g, patches[static_cast<std::size_t>(p)], pu.values[static_cast<std::size_t>(p)], level, kind, coeffs,
                        quad_order, false);
    });
    std::vector<BasisColumn> columns;
    for (auto& r : results) {
        for (auto& c : r.columns) columns.push_back(std::move(c));
    }
    return BasisMap(g, patches, std::move(columns));
}

long long number_of_basis_functions(int nc, int level)
{
    if (nc < 4 || level < 0) throw std::invalid_argument("number_of_basis_functions: invalid arguments");
    const long long s = 1LL << level;  // intervals per side
    // Along each axis, coarse indices 0, 1, nc - 1, nc put a patch side on ∂D.
    const long long mid = nc - 3;
    // A side on ∂D removes its s + 1 nodes; two adjacent ∂D sides remove 2s + 1.
    return mid * mid * 4 * s + 8 * mid * (3 * s - 1) + 16 * (2 * s - 1);
}

long long number_of_local_solves(int nc, int level)
{
    const long long patches = static_cast<long long>(nc + 1) * (nc + 1);
    return patches + number_of_basis_functions(nc, level);
}

// ---------------------------------------------------------------------------
// MultiscaleSolver

namespace {

/// Dense restriction of the columns of the four patches around coarse cell T.
struct CellBlock {
    std::vector<int> cols;       ///< global column ids
    std::vector<double> values;  ///< column-major: values[c * n + node]
    int n = 0;                   ///< (r+1)² nodes of T
};

CellBlock gather_cell(const BasisMap& basis, const std::vector<std::vector<int>>& patch_columns, int nc, int r, int tx,
                      int ty)
{
    CellBlock blk;
    blk.n = (r + 1) * (r + 1);
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            const int node = (ty + dy) * (nc + 1) + (tx + dx);
            for (int c : patch_columns[static_cast<std::size_t>(node)]) blk.cols.push_back(c);
        }
    }
    std::sort(blk.cols.begin(), blk.cols.end());
    blk.values.assign(blk.cols.size() * static_cast<std::size_t>(blk.n), 0.0);
    for (std::size_t c = 0; c < blk.cols.size(); ++c) {
        const auto& col = basis.column(blk.cols[c]);
        const auto& patch = basis.patches()[static_cast<std::size_t>(col.patch)];
        const int pnx = patch.subgrid.nodes_x();
        const int ox = tx * r - patch.fine_x0;
        const int oy = ty * r - patch.fine_y0;
        double* dst = blk.values.data() + c * static_cast<std::size_t>(blk.n);
        for (int b = 0; b <= r; ++b) {
            const double* src = col.values.data() + static_cast<std::size_t>((oy + b) * pnx + ox);
            std::copy(src, src + r + 1, dst + static_cast<std::size_t>(b) * (r + 1));
        }
    }
    return blk;
}

/// Largest coarse system handed to the dense rank-revealing fallback.
constexpr int dense_fallback_limit = 6000;

/// Deep levels make the glued columns linearly dependent. Bᵀ A B then has the
/// null space of B and a consistent right-hand side, so every solution yields the
/// same B c; a complete orthogonal decomposition picks the minimum-norm one.
std::vector<double> rank_revealing_solve(const SparseMatrix& a, std::span<const double> rhs)
{
    const auto n = static_cast<Eigen::Index>(a.rows());
    const auto values = a.to_dense();
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dense(values.data(), n, n);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-11);
    cod.compute(dense);
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    const Eigen::VectorXd x = cod.solve(b);
    return {x.data(), x.data() + n};
}

}  // namespace

MultiscaleSolver::MultiscaleSolver(const GridHierarchy& g, const ProblemCoefficients& coeffs, MsOptions opts)
    : grid_(g), coeffs_(coeffs), opts_(opts)
{
    const auto t0 = Clock::now();
    patches_ = all_patches(g);
    pu_ = partition_of_unity(g, patches_);

    // Per patch: edge space, extensions times χ_i, and the local bubble.
    std::vector<PatchResult> results(patches_.size());
    parallel_for(static_cast<int>(patches_.size()), opts_.workers, [&](int p) {
        results[static_cast<std::size_t>(p)] = build_patch(g, patches_[static_cast<std::size_t>(p)],
                                                           pu_.values[static_cast<std::size_t>(p)], opts_.level,
                                                           opts_.basis, coeffs_, opts_.quad_order, true);
    });
    std::vector<BasisColumn> columns;
    std::vector<std::vector<double>> bubbles(patches_.size());
    for (std::size_t p = 0; p < results.size(); ++p) {
        for (auto& c : results[p].columns) columns.push_back(std::move(c));
        bubbles[p] = std::move(results[p].bubble);
    }
    results.clear();
    basis_ = BasisMap(g, patches_, std::move(columns));

    // Global bubble Σ χ_i u^{i,I}.
    bubble_ = compose_bubble(bubbles);
    bubbles.clear();

    // Coarse operator Bᵀ A_h B, accumulated coarse cell by coarse cell: A_h is the
    // sum of fine element matrices, and on cell T only the four surrounding patches
    // carry nonzero columns.
    const int nc = g.nc();
    const int r = g.ratio();
    std::vector<std::vector<int>> patch_columns(patches_.size());
    for (int j = 0; j < basis_.cols(); ++j) patch_columns[static_cast<std::size_t>(basis_.column(j).patch)].push_back(j);

    const ElementIntegrator integ(coeffs_, g.fine(), opts_.quad_order, {true, true, false});
    std::vector<std::vector<Triplet>> cell_triplets(static_cast<std::size_t>(nc) * nc);
    parallel_for(nc * nc, opts_.workers, [&](int cell) {
        const int tx = cell % nc;
        const int ty = cell / nc;
        const auto blk = gather_cell(basis_, patch_columns, nc, r, tx, ty);
        const std::size_t m = blk.cols.size();
        const auto n = static_cast<std::size_t>(blk.n);
        std::vector<double> y(blk.values.size(), 0.0);
        ElementIntegrator::Matrix4 e{};
        for (int b = 0; b < r; ++b) {
            for (int a = 0; a < r; ++a) {
                integ.integrate_matrix(tx * r + a, ty * r + b, e);
                const std::size_t l0 = static_cast<std::size_t>(b) * (r + 1) + a;
                const std::array<std::size_t, 4> ln{l0, l0 + 1, l0 + r + 1, l0 + r + 2};
                for (std::size_t c = 0; c < m; ++c) {
                    const double* bc = blk.values.data() + c * n;
                    double* yc = y.data() + c * n;
                    const double v0 = bc[ln[0]], v1 = bc[ln[1]], v2 = bc[ln[2]], v3 = bc[ln[3]];
                    for (int i = 0; i < 4; ++i) {
                        yc[ln[i]] += e[i * 4] * v0 + e[i * 4 + 1] * v1 + e[i * 4 + 2] * v2 + e[i * 4 + 3] * v3;
                    }
                }
            }
        }
        auto& trip = cell_triplets[static_cast<std::size_t>(cell)];
        trip.reserve(m * m);
        for (std::size_t p = 0; p < m; ++p) {
            const double* bp = blk.values.data() + p * n;
            for (std::size_t q = 0; q < m; ++q) {
                const double* yq = y.data() + q * n;
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += bp[k] * yq[k];
                trip.push_back({blk.cols[p], blk.cols[q], s});
            }
        }
    });
    std::vector<Triplet> all;
    for (auto& t : cell_triplets) {
        all.insert(all.end(), t.begin(), t.end());
        std::vector<Triplet>().swap(t);
    }
    coarse_ = SparseMatrix::from_triplets(basis_.cols(), basis_.cols(), all);
    build_seconds_ = seconds_since(t0);
}

std::vector<double> MultiscaleSolver::compose_bubble(const std::vector<std::vector<double>>& locals) const
{
    std::vector<double> u(static_cast<std::size_t>(grid_.num_fine_nodes()), 0.0);
    for (std::size_t p = 0; p < patches_.size(); ++p) {
        const auto& nodes = patches_[p].fine_nodes;
        const auto& chi = pu_.values[p];
        const auto& loc = locals[p];
        for (std::size_t k = 0; k < nodes.size(); ++k) u[static_cast<std::size_t>(nodes[k])] += chi[k] * loc[k];
    }
    return u;
}

std::vector<double> MultiscaleSolver::coarse_rhs(std::span<const double> u_bubble, const ScalarField& force) const
{
    // Bᵀ (F − A_h u^I), accumulated per coarse cell like the coarse operator.
    const int nc = grid_.nc();
    const int r = grid_.ratio();
    ProblemCoefficients c = coeffs_;
    c.force = force;
    const ElementIntegrator integ(c, grid_.fine(), opts_.quad_order, {true, true, false});
    std::vector<std::vector<int>> patch_columns(patches_.size());
    for (int j = 0; j < basis_.cols(); ++j) patch_columns[static_cast<std::size_t>(basis_.column(j).patch)].push_back(j);

    std::vector<std::vector<std::pair<int, double>>> contributions(static_cast<std::size_t>(nc) * nc);
    const auto& fine = grid_.fine();
    parallel_for(nc * nc, opts_.workers, [&](int cell) {
        const int tx = cell % nc;
        const int ty = cell / nc;
        const auto blk = gather_cell(basis_, patch_columns, nc, r, tx, ty);
        const auto n = static_cast<std::size_t>(blk.n);
        std::vector<double> gvec(n, 0.0);
        ElementIntegrator::Matrix4 e{};
        ElementIntegrator::Vector4 f{};
        for (int b = 0; b < r; ++b) {
            for (int a = 0; a < r; ++a) {
                const int ci = tx * r + a;
                const int cj = ty * r + b;
                integ.integrate(ci, cj, e, f);
                const auto gn = cell_nodes(fine, ci, cj);
                const std::size_t l0 = static_cast<std::size_t>(b) * (r + 1) + a;
                const std::array<std::size_t, 4> ln{l0, l0 + 1, l0 + r + 1, l0 + r + 2};
                for (int i = 0; i < 4; ++i) {
                    double s = f[i];
                    for (int k = 0; k < 4; ++k) s -= e[i * 4 + k] * u_bubble[static_cast<std::size_t>(gn[k])];
                    gvec[ln[i]] += s;
                }
            }
        }
        auto& out = contributions[static_cast<std::size_t>(cell)];
        for (std::size_t p = 0; p < blk.cols.size(); ++p) {
            const double* bp = blk.values.data() + p * n;
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += bp[k] * gvec[k];
            out.emplace_back(blk.cols[p], s);
        }
    });
    std::vector<double> rhs(static_cast<std::size_t>(basis_.cols()), 0.0);
    for (const auto& cell : contributions) {
        for (const auto& [j, v] : cell) rhs[static_cast<std::size_t>(j)] += v;
    }
    return rhs;
}

MsSolution MultiscaleSolver::finish(std::vector<double> u_bubble, const ScalarField& force, int level,
                                    double seconds) const
{
    const auto t0 = Clock::now();
    if (level < 0 || level > opts_.level) {
        throw MultiscaleError("solve: level " + std::to_string(level) + " not available (built up to " +
                              std::to_string(opts_.level) + ")");
    }
    if (opts_.basis == EdgeBasisKind::nodal && level != opts_.level) {
        throw MultiscaleError("solve: nodal edge bases are not nested; rebuild for level " + std::to_string(level));
    }
    MsSolution sol;
    sol.level = level;
    sol.nc = grid_.nc();
    sol.columns = basis_.columns_up_to_level(level);
    const auto full_rhs = coarse_rhs(u_bubble, force);
    std::vector<double> rhs(sol.columns.size());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = full_rhs[static_cast<std::size_t>(sol.columns[k])];
    const auto a = coarse_.submatrix(sol.columns, sol.columns);
    try {
        sol.harmonic_coeffs = DirectSolver(a).solve(rhs);
    } catch (const SolverError& e) {
        if (a.rows() > dense_fallback_limit) {
            throw MultiscaleError("coarse system singular at level " + std::to_string(level) + ", nc = " +
                                  std::to_string(grid_.nc()) + ": " + e.what());
        }
        sol.harmonic_coeffs = rank_revealing_solve(a, rhs);
    }
    sol.u_ms = basis_.apply(sol.harmonic_coeffs, sol.columns);
    for (std::size_t k = 0; k < sol.u_ms.size(); ++k) sol.u_ms[k] += u_bubble[k];
    sol.u_bubble = std::move(u_bubble);
    sol.seconds = seconds + seconds_since(t0);
    return sol;
}

MsSolution MultiscaleSolver::solve(int level) const { return finish(bubble_, coeffs_.force, level, build_seconds_); }

MsSolution MultiscaleSolver::solve(const ScalarField& force, int level) const
{
    const auto t0 = Clock::now();
    ProblemCoefficients c = coeffs_;
    c.force = force;
    std::vector<std::vector<double>> bubbles(patches_.size());
    parallel_for(static_cast<int>(patches_.size()), opts_.workers, [&](int p) {
        bubbles[static_cast<std::size_t>(p)] = local_bubble(patches_[static_cast<std::size_t>(p)], c, opts_.quad_order);
    });
    return finish(compose_bubble(bubbles), force, level, seconds_since(t0));
}

MsSolution solve_multiscale(const GridHierarchy& g, const ProblemCoefficients& coeffs, int level, int quad_order,
                            int workers)
{
    MsOptions opts;
    opts.level = level;
    opts.quad_order = quad_order;
    opts.workers = workers;
    return MultiscaleSolver(g, coeffs, opts).solve(level);
}

}  // namespace wemsfem
