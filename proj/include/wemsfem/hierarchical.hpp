#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "wemsfem/grid.hpp"

namespace wemsfem {

class LevelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// ψ_{m,j}(x) = max(0, 1 − |x·2^m − j|) on [0, 1].
double eval_psi(int level, int j, double x);

/// B_0 = {0, 1}; B_m = odd j in (0, 2^m) for m ≥ 1.
std::vector<int> level_index_set(int m);

/// Hierarchical hat basis of V_ℓ on [0, 1], generators ordered by level then index.
struct HierarchicalBasis1D {
    struct Generator {
        int level = 0;
        int index = 0;
        double node() const;
    };

    int level = 0;
    std::vector<Generator> generators;

    explicit HierarchicalBasis1D(int max_level);
    int dimension() const { return static_cast<int>(generators.size()); }
    /// (2^ℓ + 1) × dim matrix (row-major) of generator values at the level-ℓ nodes.
    /// Entries are exact dyadic rationals.
    std::vector<double> nodal_matrix() const;
};

/// Nodal values at level-ℓ nodes → hierarchical coefficients (generator order).
std::vector<double> hierarchize(std::span<const double> nodal_values, int level);
/// Hierarchical coefficients → nodal values at level-ℓ nodes.
std::vector<double> dehierarchize(std::span<const double> coefficients, int level);

struct Projection1D {
    int level = 0;
    std::vector<double> hierarchical;  ///< coefficients in generator order
    std::vector<double> nodal;         ///< values at the 2^ℓ + 1 level nodes
};

/// L²(0,1) projection onto V_ℓ of the piecewise-linear interpolant of `samples`
/// (uniform grid on [0,1], samples.size() − 1 intervals, divisible by 2^ℓ).
Projection1D l2_project_1d(std::span<const double> samples, int level);

/// Piecewise-linear function given by level-ℓ nodal values, sampled on n uniform intervals.
std::vector<double> sample_nodal(std::span<const double> nodal, int n_intervals);

enum class EdgeBasisKind { nodal, hierarchical };

/// A trace on the fine boundary nodes of ∂ω_i, indexed by boundary-loop position.
struct EdgeFunction {
    int node_position = 0;  ///< loop position of the function's peak
    int level = 0;          ///< hierarchical level that introduced the node
    std::vector<double> values;
};

/// Local edge space V_{i,ℓ} on ∂ω_i.
struct EdgeSpace {
    int patch = 0;
    int level = 0;
    EdgeBasisKind kind = EdgeBasisKind::nodal;
    std::vector<EdgeFunction> traces;

    int dimension() const { return static_cast<int>(traces.size()); }
};

/// Deepest level the hierarchy resolves: 2^ℓ equals the fine intervals of an interior patch side.
int max_edge_level(const GridHierarchy& g);

/// Sorted loop positions of the dyadic boundary nodes of level ℓ (before ∂D removal).
/// A side with n fine intervals is split into min(2^ℓ, n) parts.
std::vector<int> edge_node_positions(const CoarsePatch& patch, int level);

/// Continuous piecewise-linear traces on the boundary loop, one per dyadic node
/// off ∂D; values on ∂ω_i ∩ ∂D are zero.
EdgeSpace edge_space(const CoarsePatch& patch, int level, const GridHierarchy& g,
                     EdgeBasisKind kind = EdgeBasisKind::nodal);

}  // namespace wemsfem
