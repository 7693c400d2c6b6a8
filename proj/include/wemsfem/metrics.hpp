#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wemsfem/catalog.hpp"
#include "wemsfem/grid.hpp"
#include "wemsfem/solvers.hpp"

namespace wemsfem {

class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative errors of one run. Percentages are stored as fractions.
struct ErrorReport {
    std::string example;
    int nc = 0;
    int nf = 0;
    std::optional<int> level;  ///< unset for the fem / supg baselines
    std::string method;        ///< wemsfem | fem | supg
    double pe = 0.0;
    double e_l2 = 0.0;
    double e_h1 = 0.0;
    std::optional<double> e_h1_in;
    std::optional<double> e_h1_out;
    double seconds = 0.0;
    std::string status = "ok";
};

/// Pe_{H,b,ε} = H ‖b‖/ε with H = √2/nc and ‖b‖ = √2 × max-component sup.
double mesh_peclet(const ProblemSpec& spec, int nc);

/// ‖b‖/ε with the same ‖b‖ convention; the Péclet number that sets the layer width.
double problem_peclet(const ProblemSpec& spec);

/// Unstabilized Q1 Galerkin solution on the nf × nf grid, zero on ∂D.
std::vector<double> reference_solution(const ProblemSpec& spec, int nf, const SolverRouting& routing = {},
                                       int quad_order = 4);

/// Relative L² and H¹-seminorm errors on a structured grid (element-wise exact Q1 norms).
ErrorReport error_report(std::span<const double> u, std::span<const double> u_ref, const StructuredGrid& grid);

struct LayerSplit {
    double e_h1_in = 0.0;
    double e_h1_out = 0.0;
    double width = 0.0;  ///< δ_layer
};

/// δ_layer = (2/Pe) log(Pe/2)
double layer_width(double pe);

/// Splits the H¹-seminorm error into the outflow strip {y > 1 − δ} ∪ {x > 1 − δ}
/// and its complement by element centers; both parts are relative to ‖u_ref‖.
LayerSplit layer_split(std::span<const double> u, std::span<const double> u_ref, const StructuredGrid& grid, double pe);

/// Bilinear interpolation of nodal values on the nc grid to the nf grid.
std::vector<double> bilinear_prolongation(std::span<const double> coarse, int nc, int nf);

/// Coarse Galerkin / SUPG solutions on the nc grid (nodal values, zero on ∂D).
std::vector<double> fem_coarse_solution(const ProblemSpec& spec, int nc, int quad_order = 4);
std::vector<double> supg_coarse_solution(const ProblemSpec& spec, int nc, int quad_order = 4);

/// Baselines prolonged to the reference grid and measured against u_ref.
ErrorReport fem_baseline(const ProblemSpec& spec, int nc, std::span<const double> u_ref, int nf, int quad_order = 4);
ErrorReport supg_baseline(const ProblemSpec& spec, int nc, std::span<const double> u_ref, int nf, int quad_order = 4);

}  // namespace wemsfem
