#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wemsfem {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform rectangular grid of nx × ny cells with lexicographic node numbering
/// (x fastest). Used for the global fine grid, the coarse grid and patch subgrids.
struct StructuredGrid {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double hx = 0.0;
    double hy = 0.0;

    int nodes_x() const { return nx + 1; }
    int nodes_y() const { return ny + 1; }
    int num_nodes() const { return nodes_x() * nodes_y(); }
    int num_cells() const { return nx * ny; }
    int node(int i, int j) const { return j * nodes_x() + i; }
    double x(int i) const { return x0 + hx * i; }
    double y(int j) const { return y0 + hy * j; }
    /// Diameter of a cell (the length of its diagonal).
    double diameter() const;
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx || j == ny; }
    std::vector<int> boundary_nodes() const;
};

/// Square grid on the unit square with n cells per axis.
StructuredGrid unit_square_grid(int n);

/// Nested coarse/fine grids on [0,1]².
class GridHierarchy {
public:
    int nc() const { return nc_; }
    int nf() const { return nf_; }
    int ratio() const { return nf_ / nc_; }
    /// Coarse element diameter √2/nc.
    double H() const;
    /// Fine element diameter √2/nf.
    double h() const;

    const StructuredGrid& coarse() const { return coarse_; }
    const StructuredGrid& fine() const { return fine_; }

    int num_coarse_nodes() const { return coarse_.num_nodes(); }
    int num_fine_nodes() const { return fine_.num_nodes(); }
    int coarse_node(int cx, int cy) const { return coarse_.node(cx, cy); }
    int fine_node(int ix, int iy) const { return fine_.node(ix, iy); }
    /// Fine node index coinciding with a coarse node.
    int coarse_to_fine(int coarse_id) const;

    friend GridHierarchy build_hierarchy(int nc, int nf);

private:
    int nc_ = 0;
    int nf_ = 0;
    StructuredGrid coarse_;
    StructuredGrid fine_;
};

/// Validates the nesting (nf divisible by nc, power-of-two ratio ≥ 2, nc ≥ 4).
GridHierarchy build_hierarchy(int nc, int nf);

bool is_power_of_two(int v);

enum class Side { bottom = 0, right = 1, top = 2, left = 3 };

/// One side Γ_i^k of the rectangle ∂ω_i. Positions index the patch boundary loop.
struct EdgeSegment {
    Side side = Side::bottom;
    int first = 0;          ///< loop position of the starting corner (owned by this segment)
    int length = 0;        ///< number of fine intervals along the side
    bool on_domain_boundary = false;
};

/// Coarse neighborhood ω_i: the closed coarse cells sharing coarse node O_i.
struct CoarsePatch {
    int node = 0;
    int cx = 0;
    int cy = 0;
    /// Coarse cells [cell_x0, cell_x1) × [cell_y0, cell_y1).
    int cell_x0 = 0, cell_x1 = 0, cell_y0 = 0, cell_y1 = 0;
    /// Fine-index offset of the patch's lower-left corner.
    int fine_x0 = 0, fine_y0 = 0;
    StructuredGrid subgrid;
    /// Global fine-node ids, in patch-local lexicographic order.
    std::vector<int> fine_nodes;
    /// Counter-clockwise boundary loop from the lower-left corner; patch-local node ids.
    std::vector<int> boundary_loop;
    /// Parallel to boundary_loop: 1 where the node lies on ∂ω_i ∩ ∂D.
    std::vector<char> dirichlet_mask;
    std::array<EdgeSegment, 4> segments;

    int cells_x() const { return cell_x1 - cell_x0; }
    int cells_y() const { return cell_y1 - cell_y0; }
    bool contains_cell(int tx, int ty) const
    {
        return tx >= cell_x0 && tx < cell_x1 && ty >= cell_y0 && ty < cell_y1;
    }
    /// Loop position of each corner: SW, SE, NE, NW.
    std::array<int, 4> corner_positions() const;
    int loop_length() const { return static_cast<int>(boundary_loop.size()); }
    /// Segment owning a loop position.
    const EdgeSegment& segment_of(int loop_position) const;
};

CoarsePatch coarse_patch(const GridHierarchy& g, int coarse_node_id);
std::vector<CoarsePatch> all_patches(const GridHierarchy& g);

/// Coarse bilinear hats χ_i sampled on each patch's fine nodes.
struct PartitionField {
    /// values[i][k]: χ_i at patch i's k-th local node.
    std::vector<std::vector<double>> values;
};

/// χ_i evaluated at a point.
double coarse_hat(const GridHierarchy& g, int coarse_node_id, double x, double y);
PartitionField partition_of_unity(const GridHierarchy& g, const std::vector<CoarsePatch>& patches);

/// Number of patches containing a given coarse cell (the overlap count).
int patches_containing_cell(const std::vector<CoarsePatch>& patches, int tx, int ty);

}  // namespace wemsfem
