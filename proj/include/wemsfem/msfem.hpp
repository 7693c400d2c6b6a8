#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wemsfem/fem.hpp"
#include "wemsfem/grid.hpp"
#include "wemsfem/hierarchical.hpp"
#include "wemsfem/solvers.hpp"
#include "wemsfem/sparse.hpp"

namespace wemsfem {

class MultiscaleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SUPG discretization of L_i on the fine subgrid of one coarse neighborhood,
/// factorized once and shared by the bubble and all harmonic extensions.
class LocalProblem {
public:
    LocalProblem(const CoarsePatch& patch, const ProblemCoefficients& coeffs, int quad_order);

    /// L_i v = f in ω_i, v = 0 on ∂ω_i. Patch-local values including the zero boundary.
    std::vector<double> bubble() const;
    /// Same with a different source term.
    std::vector<double> bubble(const ScalarField& force) const;
    /// L_i v = 0 in ω_i, v = trace on ∂ω_i (trace indexed by boundary-loop position).
    std::vector<double> extend(std::span<const double> loop_trace) const;

    int patch_node() const { return patch_node_; }

private:
    std::vector<double> solve_interior(std::vector<double> rhs, std::span<const double> boundary_values) const;

    int patch_node_ = 0;
    StructuredGrid subgrid_;
    ProblemCoefficients coeffs_;
    int quad_order_ = 4;
    DirichletPartition part_;
    std::unique_ptr<DirectSolver> solver_;
    std::vector<double> load_;               ///< SUPG load for coeffs.force, full patch length
    std::vector<int> loop_to_boundary_;      ///< loop position → index in part_.boundary_dofs
};

/// u^{i,I}: patch-local bubble solve.
std::vector<double> local_bubble(const CoarsePatch& patch, const ProblemCoefficients& coeffs, int quad_order = 4);

/// L_i^{-1}ψ: patch-local harmonic extension of one edge function.
std::vector<double> harmonic_extension(const CoarsePatch& patch, const EdgeFunction& trace,
                                       const ProblemCoefficients& coeffs, int quad_order = 4);

/// One multiscale basis function χ_i · L_i^{-1}ψ_{i}^j, stored on its patch.
struct BasisColumn {
    int patch = 0;          ///< index into the patch list (= coarse node id)
    int trace = 0;          ///< index of the edge function within the patch's edge space
    int level = 0;          ///< hierarchical level of the edge function's node
    int node_position = 0;  ///< loop position of the edge function's node
    std::vector<double> values;  ///< patch-local nodal values
};

/// The global multiscale space as a fine-node × basis column map.
class BasisMap {
public:
    BasisMap() = default;
    BasisMap(const GridHierarchy& g, std::vector<CoarsePatch> patches, std::vector<BasisColumn> columns);

    int rows() const { return rows_; }
    int cols() const { return static_cast<int>(columns_.size()); }
    const BasisColumn& column(int j) const { return columns_[static_cast<std::size_t>(j)]; }
    const std::vector<BasisColumn>& columns() const { return columns_; }
    const CoarsePatch& patch_of(int j) const { return patches_[static_cast<std::size_t>(column(j).patch)]; }
    const std::vector<CoarsePatch>& patches() const { return patches_; }

    /// Column index of (patch, trace), or -1 if the trace was dropped.
    int find(int patch, int trace) const;
    /// Columns whose edge function belongs to a level ≤ `level`, ascending.
    std::vector<int> columns_up_to_level(int level) const;

    /// Explicit CSR form B (rows = fine nodes).
    SparseMatrix to_sparse() const;
    /// B c for coefficients over `selection` (all columns when empty).
    std::vector<double> apply(std::span<const double> coefficients, std::span<const int> selection = {}) const;

private:
    int rows_ = 0;
    std::vector<CoarsePatch> patches_;
    std::vector<BasisColumn> columns_;
    std::vector<std::vector<int>> registry_;  ///< [patch][trace] → column
};

/// Columns χ_i ⊙ L_i^{-1}ψ for all patches; identically zero columns are dropped.
BasisMap build_basis(const GridHierarchy& g, const std::vector<CoarsePatch>& patches, const PartitionField& pu,
                     int level, const ProblemCoefficients& coeffs, int quad_order = 4,
                     EdgeBasisKind kind = EdgeBasisKind::nodal, int workers = 0);

/// Σ over patches of (1 bubble + surviving edge functions), assuming every patch
/// side has at least 2^ℓ fine intervals.
long long number_of_local_solves(int nc, int level);
/// Σ over patches of surviving edge functions (= multiscale basis dimension).
long long number_of_basis_functions(int nc, int level);

struct MsOptions {
    int level = 0;
    int quad_order = 4;
    /// Hierarchical generators are nested across levels, so one build serves every ℓ ≤ level.
    EdgeBasisKind basis = EdgeBasisKind::hierarchical;
    int workers = 0;
};

struct MsSolution {
    std::vector<double> u_bubble;           ///< global bubble u^I
    std::vector<double> harmonic_coeffs;    ///< coefficients over the selected columns
    std::vector<int> columns;               ///< selected basis columns
    std::vector<double> u_ms;               ///< u^I + B c
    int level = 0;
    int nc = 0;
    double seconds = 0.0;
};

/// Full pipeline: edge spaces, local multiscale space, global space by the partition
/// of unity, local bubbles, global bubble, coarse Galerkin solve, composition.
class MultiscaleSolver {
public:
    MultiscaleSolver(const GridHierarchy& g, const ProblemCoefficients& coeffs, MsOptions opts);

    /// Solve with the source term of the coefficient set, using columns of level ≤ `level`.
    MsSolution solve(int level) const;
    MsSolution solve() const { return solve(opts_.level); }
    /// Solve for another source term with the same (source-independent) space.
    MsSolution solve(const ScalarField& force, int level) const;

    const BasisMap& basis() const { return basis_; }
    /// Bᵀ A_h B over all built columns (A_h: unstabilized fine Galerkin operator).
    const SparseMatrix& coarse_matrix() const { return coarse_; }
    const std::vector<double>& global_bubble() const { return bubble_; }
    const GridHierarchy& grid() const { return grid_; }
    double build_seconds() const { return build_seconds_; }

private:
    std::vector<double> coarse_rhs(std::span<const double> u_bubble, const ScalarField& force) const;
    MsSolution finish(std::vector<double> u_bubble, const ScalarField& force, int level, double seconds) const;
    std::vector<double> compose_bubble(const std::vector<std::vector<double>>& locals) const;

    GridHierarchy grid_;
    ProblemCoefficients coeffs_;
    MsOptions opts_;
    std::vector<CoarsePatch> patches_;
    PartitionField pu_;
    BasisMap basis_;
    SparseMatrix coarse_;
    std::vector<double> bubble_;
    double build_seconds_ = 0.0;
};

/// One-shot convenience wrapper.
MsSolution solve_multiscale(const GridHierarchy& g, const ProblemCoefficients& coeffs, int level, int quad_order = 4,
                            int workers = 0);

}  // namespace wemsfem
