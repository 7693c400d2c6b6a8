#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "wemsfem/grid.hpp"
#include "wemsfem/quadrature.hpp"
#include "wemsfem/sparse.hpp"

namespace wemsfem {

using ScalarField = std::function<double(double x, double y)>;
using VectorField = std::function<std::array<double, 2>(double x, double y)>;

/// −∇·(a∇u) + b·∇u = f. `epsilon` is the scalar perturbation parameter used by
/// the SUPG parameter and Péclet reporting, independent of a(x).
struct ProblemCoefficients {
    ScalarField diffusion;
    VectorField velocity;
    ScalarField force;
    double epsilon = 1.0;
};

/// Global matrix and load, optionally reduced by Dirichlet elimination.
struct AssembledSystem {
    SparseMatrix A;
    SparseMatrix M;  ///< mass matrix; empty unless requested
    std::vector<double> F;
    /// Free dofs of the reduced system; empty for an unreduced system.
    std::vector<int> free_dofs;
    /// Full-length vector carrying the Dirichlet values (zero on free dofs).
    std::vector<double> lift;
    int full_size = 0;

    bool reduced() const { return !lift.empty(); }
    /// Full-length solution from reduced values; boundary entries come from the lift.
    std::vector<double> reconstruct(std::span<const double> reduced_solution) const;
};

/// δ = H² / (2√2 ε max(12/√2, H‖b‖/ε))
double supg_delta(double H_elem, double b_inf_elem, double epsilon);

/// Q1 element integrals on one cell. Local node order: (i,j), (i+1,j), (i,j+1), (i+1,j+1).
class ElementIntegrator {
public:
    using Matrix4 = std::array<double, 16>;  ///< row-major, row = test function
    using Vector4 = std::array<double, 4>;

    struct Terms {
        bool diffusion = true;
        bool convection = true;
        bool supg = false;
    };

    ElementIntegrator(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order, Terms terms);

    /// Element matrix and load for cell (ci, cj).
    void integrate(int ci, int cj, Matrix4& a, Vector4& f) const;
    /// Element matrix only (skips the force evaluation).
    void integrate_matrix(int ci, int cj, Matrix4& a) const;
    /// SUPG parameter of cell (ci, cj); zero when stabilization is off.
    double delta(int ci, int cj) const;
    /// Max over quadrature points of max(|b₁|, |b₂|).
    double velocity_sup(int ci, int cj) const;

    const StructuredGrid& grid() const { return grid_; }

private:
    void integrate_impl(int ci, int cj, Matrix4& a, Vector4* f) const;

    ProblemCoefficients coeffs_;
    StructuredGrid grid_;
    Terms terms_;
    GaussRule rule_;
    int nq_ = 0;
    // Reference shape data at tensor quadrature points: [q][a].
    std::vector<std::array<double, 4>> phi_;
    std::vector<std::array<double, 4>> dphi_dx_;
    std::vector<std::array<double, 4>> dphi_dy_;
    std::vector<double> weight_;
    std::vector<double> xi_;
    std::vector<double> eta_;
};

/// Global node ids of cell (ci, cj) in local order.
std::array<int, 4> cell_nodes(const StructuredGrid& grid, int ci, int cj);

/// Zero-valued CSR matrix with the Q1 9-point pattern of a structured grid.
SparseMatrix q1_pattern(const StructuredGrid& grid);

/// Stiffness (diffusion), convection, mass matrices and load assembled separately.
struct ConvectionDiffusionParts {
    SparseMatrix K;
    SparseMatrix C;
    SparseMatrix M;
    std::vector<double> F;
};
ConvectionDiffusionParts assemble_parts(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order = 4);

/// A = K + C; F = (f, v).
AssembledSystem assemble_galerkin(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order = 4,
                                  bool with_mass = false);

/// Galerkin plus δ Σ_T (b·∇u, b·∇v)_T and δ Σ_T (f, b·∇v)_T, δ per element from supg_delta with
/// H the grid's cell diameter.
AssembledSystem assemble_supg(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order = 4,
                              bool with_mass = false);

/// Unit-coefficient mass and stiffness matrices (for norms).
SparseMatrix mass_matrix(const StructuredGrid& grid);
SparseMatrix stiffness_matrix(const StructuredGrid& grid);

/// Split of A into interior and interior-boundary blocks for repeated lifts.
struct DirichletPartition {
    SparseMatrix interior;  ///< A_II
    SparseMatrix coupling;  ///< A_IB
    std::vector<int> free_dofs;
    std::vector<int> boundary_dofs;
};
DirichletPartition partition_dirichlet(const SparseMatrix& a, std::span<const int> boundary_nodes);

/// Symmetric elimination: reduced A_II, rhs F_I − A_IB g.
AssembledSystem apply_dirichlet(const AssembledSystem& system, std::span<const int> boundary_nodes,
                                std::span<const double> values);

}  // namespace wemsfem
