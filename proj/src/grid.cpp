#include "wemsfem/grid.hpp"

#include <algorithm>
#include <cmath>

namespace wemsfem {

double StructuredGrid::diameter() const { return std::hypot(hx, hy); }

std::vector<int> StructuredGrid::boundary_nodes() const
{
    std::vector<int> out;
    out.reserve(2 * (nx + ny));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            if (on_boundary(i, j)) out.push_back(node(i, j));
        }
    }
    return out;
}

StructuredGrid unit_square_grid(int n)
{
    if (n < 1) throw GridError("unit_square_grid: need at least one cell per axis");
    return StructuredGrid{n, n, 0.0, 0.0, 1.0 / n, 1.0 / n};
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

double GridHierarchy::H() const { return std::sqrt(2.0) / nc_; }
double GridHierarchy::h() const { return std::sqrt(2.0) / nf_; }

int GridHierarchy::coarse_to_fine(int coarse_id) const
{
    const int cx = coarse_id % coarse_.nodes_x();
    const int cy = coarse_id / coarse_.nodes_x();
    return fine_.node(cx * ratio(), cy * ratio());
}

GridHierarchy build_hierarchy(int nc, int nf)
{
    if (nc < 4) throw GridError("build_hierarchy: nc must be at least 4, got " + std::to_string(nc));
    if (nf <= 0 || nf % nc != 0) {
        throw GridError("build_hierarchy: fine grid (" + std::to_string(nf) +
                        ") is not nested in coarse grid (" + std::to_string(nc) + ")");
    }
    const int r = nf / nc;
    if (r < 2 || !is_power_of_two(r)) {
        throw GridError("build_hierarchy: refinement ratio " + std::to_string(r) +
                        " must be a power of two >= 2");
    }
    GridHierarchy g;
    g.nc_ = nc;
    g.nf_ = nf;
    g.coarse_ = unit_square_grid(nc);
    g.fine_ = unit_square_grid(nf);
    return g;
}

std::array<int, 4> CoarsePatch::corner_positions() const
{
    const int nx = subgrid.nx;
    const int ny = subgrid.ny;
    return {0, nx, nx + ny, 2 * nx + ny};
}

const EdgeSegment& CoarsePatch::segment_of(int loop_position) const
{
    for (const auto& s : segments) {
        if (loop_position >= s.first && loop_position < s.first + s.length) return s;
    }
    throw GridError("segment_of: loop position out of range");
}

CoarsePatch coarse_patch(const GridHierarchy& g, int coarse_node_id)
{
    const int nc = g.nc();
    const int r = g.ratio();
    if (coarse_node_id < 0 || coarse_node_id >= g.num_coarse_nodes()) {
        throw GridError("coarse_patch: node id " + std::to_string(coarse_node_id) + " out of range");
    }
    CoarsePatch p;
    p.node = coarse_node_id;
    p.cx = coarse_node_id % (nc + 1);
    p.cy = coarse_node_id / (nc + 1);
    p.cell_x0 = std::max(p.cx - 1, 0);
    p.cell_x1 = std::min(p.cx + 1, nc);
    p.cell_y0 = std::max(p.cy - 1, 0);
    p.cell_y1 = std::min(p.cy + 1, nc);
    p.fine_x0 = p.cell_x0 * r;
    p.fine_y0 = p.cell_y0 * r;

    const auto& fine = g.fine();
    p.subgrid = StructuredGrid{p.cells_x() * r, p.cells_y() * r, fine.x(p.fine_x0), fine.y(p.fine_y0), fine.hx,
                               fine.hy};
    const auto& sg = p.subgrid;

    p.fine_nodes.reserve(static_cast<std::size_t>(sg.num_nodes()));
    for (int j = 0; j <= sg.ny; ++j) {
        for (int i = 0; i <= sg.nx; ++i) p.fine_nodes.push_back(g.fine_node(p.fine_x0 + i, p.fine_y0 + j));
    }

    // Counter-clockwise from the lower-left corner; each segment owns its starting corner.
    const int nx = sg.nx;
    const int ny = sg.ny;
    p.boundary_loop.reserve(static_cast<std::size_t>(2 * (nx + ny)));
    for (int i = 0; i < nx; ++i) p.boundary_loop.push_back(sg.node(i, 0));
    for (int j = 0; j < ny; ++j) p.boundary_loop.push_back(sg.node(nx, j));
    for (int i = nx; i > 0; --i) p.boundary_loop.push_back(sg.node(i, ny));
    for (int j = ny; j > 0; --j) p.boundary_loop.push_back(sg.node(0, j));

    p.segments[0] = EdgeSegment{Side::bottom, 0, nx, p.cell_y0 == 0};
    p.segments[1] = EdgeSegment{Side::right, nx, ny, p.cell_x1 == nc};
    p.segments[2] = EdgeSegment{Side::top, nx + ny, nx, p.cell_y1 == nc};
    p.segments[3] = EdgeSegment{Side::left, 2 * nx + ny, ny, p.cell_x0 == 0};

    const int nf = g.nf();
    p.dirichlet_mask.resize(p.boundary_loop.size());
    for (std::size_t k = 0; k < p.boundary_loop.size(); ++k) {
        const int local = p.boundary_loop[k];
        const int gi = p.fine_x0 + local % sg.nodes_x();
        const int gj = p.fine_y0 + local / sg.nodes_x();
        p.dirichlet_mask[k] = (gi == 0 || gj == 0 || gi == nf || gj == nf) ? 1 : 0;
    }
    return p;
}

std::vector<CoarsePatch> all_patches(const GridHierarchy& g)
{
    std::vector<CoarsePatch> out;
    out.reserve(static_cast<std::size_t>(g.num_coarse_nodes()));
    for (int i = 0; i < g.num_coarse_nodes(); ++i) out.push_back(coarse_patch(g, i));
    return out;
}

double coarse_hat(const GridHierarchy& g, int coarse_node_id, double x, double y)
{
    const int nc = g.nc();
    const double cx = static_cast<double>(coarse_node_id % (nc + 1)) / nc;
    const double cy = static_cast<double>(coarse_node_id / (nc + 1)) / nc;
    const double wx = std::max(0.0, 1.0 - std::abs(x - cx) * nc);
    const double wy = std::max(0.0, 1.0 - std::abs(y - cy) * nc);
    return wx * wy;
}

PartitionField partition_of_unity(const GridHierarchy& g, const std::vector<CoarsePatch>& patches)
{
    const int r = g.ratio();
    PartitionField pu;
    pu.values.resize(patches.size());
    for (std::size_t p = 0; p < patches.size(); ++p) {
        const auto& patch = patches[p];
        const auto& sg = patch.subgrid;
        auto& vals = pu.values[p];
        vals.resize(static_cast<std::size_t>(sg.num_nodes()));
        // Exact integer arithmetic on fine indices keeps nodal values exact.
        const int ox = patch.cx * r - patch.fine_x0;
        const int oy = patch.cy * r - patch.fine_y0;
        for (int j = 0; j <= sg.ny; ++j) {
            const double wy = 1.0 - static_cast<double>(std::abs(j - oy)) / r;
            for (int i = 0; i <= sg.nx; ++i) {
                const double wx = 1.0 - static_cast<double>(std::abs(i - ox)) / r;
                vals[static_cast<std::size_t>(sg.node(i, j))] = std::max(0.0, wx) * std::max(0.0, wy);
            }
        }
    }
    return pu;
}

int patches_containing_cell(const std::vector<CoarsePatch>& patches, int tx, int ty)
{
    return static_cast<int>(
        std::count_if(patches.begin(), patches.end(), [&](const CoarsePatch& p) { return p.contains_cell(tx, ty); }));
}

}  // namespace wemsfem
