#include "wemsfem/metrics.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

#include "wemsfem/fem.hpp"

namespace wemsfem {

namespace {

using Matrix4 = std::array<double, 16>;

/// Exact Q1 mass and unit stiffness element matrices, local order (0,0), (1,0), (0,1), (1,1).
struct ElementNorms {
    Matrix4 mass{};
    Matrix4 stiff{};

    explicit ElementNorms(const StructuredGrid& g)
    {
        const std::array<double, 16> m{4, 2, 2, 1, 2, 4, 1, 2, 2, 1, 4, 2, 1, 2, 2, 4};
        const std::array<double, 16> kx{2, -2, 1, -1, -2, 2, -1, 1, 1, -1, 2, -2, -1, 1, -2, 2};
        const std::array<double, 16> ky{2, 1, -2, -1, 1, 2, -1, -2, -2, -1, 2, 1, -1, -2, 1, 2};
        for (int k = 0; k < 16; ++k) {
            mass[k] = g.hx * g.hy / 36.0 * m[k];
            stiff[k] = (g.hy / g.hx * kx[k] + g.hx / g.hy * ky[k]) / 6.0;
        }
    }
};

double quadratic_form(const Matrix4& a, const std::array<double, 4>& v)
{
    double s = 0.0;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) s += v[r] * a[r * 4 + c] * v[c];
    }
    return s;
}

void check_sizes(std::span<const double> u, std::span<const double> u_ref, const StructuredGrid& grid)
{
    const auto n = static_cast<std::size_t>(grid.num_nodes());
    if (u.size() != n || u_ref.size() != n) {
        throw DimensionError("error metrics: vectors of length " + std::to_string(u.size()) + " and " +
                             std::to_string(u_ref.size()) + " on a grid with " + std::to_string(n) + " nodes");
    }
}

std::array<double, 4> gather(std::span<const double> v, const std::array<int, 4>& nodes)
{
    return {v[nodes[0]], v[nodes[1]], v[nodes[2]], v[nodes[3]]};
}

std::vector<double> coarse_solve(AssembledSystem sys, const StructuredGrid& grid)
{
    const auto bnd = grid.boundary_nodes();
    const std::vector<double> zeros(bnd.size(), 0.0);
    const auto red = apply_dirichlet(sys, bnd, zeros);
    return red.reconstruct(direct_solve(red.A, red.F));
}

ErrorReport baseline(const ProblemSpec& spec, int nc, std::span<const double> u_ref, int nf, int quad_order,
                     bool stabilized)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto coarse = stabilized ? supg_coarse_solution(spec, nc, quad_order) : fem_coarse_solution(spec, nc, quad_order);
    const auto u = bilinear_prolongation(coarse, nc, nf);
    const auto fine = unit_square_grid(nf);
    auto rep = error_report(u, u_ref, fine);
    const double pe = problem_peclet(spec);
    if (pe > 2.0 && layer_width(pe) < 1.0) {
        const auto split = layer_split(u, u_ref, fine, pe);
        rep.e_h1_in = split.e_h1_in;
        rep.e_h1_out = split.e_h1_out;
    }
    rep.example = spec.id;
    rep.nc = nc;
    rep.nf = nf;
    rep.method = stabilized ? "supg" : "fem";
    rep.pe = mesh_peclet(spec, nc);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace

double mesh_peclet(const ProblemSpec& spec, int nc)
{
    if (nc < 1) throw MetricError("mesh_peclet: nc must be positive");
    const double H = std::numbers::sqrt2 / nc;
    return H * std::numbers::sqrt2 * velocity_max_component(spec) / spec.epsilon;
}

double problem_peclet(const ProblemSpec& spec)
{
    return std::numbers::sqrt2 * velocity_max_component(spec) / spec.epsilon;
}

std::vector<double> reference_solution(const ProblemSpec& spec, int nf, const SolverRouting& routing, int quad_order)
{
    const auto grid = unit_square_grid(nf);
    const auto sys = assemble_galerkin(spec.coeffs, grid, quad_order);
    const auto bnd = grid.boundary_nodes();
    const std::vector<double> zeros(bnd.size(), 0.0);
    auto red = apply_dirichlet(sys, bnd, zeros);
    try {
        return red.reconstruct(solve(red.A, red.F, routing));
    } catch (const SolverError& e) {
        throw SolverError("reference solve for example " + spec.id + " at nf = " + std::to_string(nf) + " failed (direct_limit " +
                              std::to_string(routing.direct_limit) + ", tol " + std::to_string(routing.krylov.tol) + "): " +
                              e.what(),
                          e.residual(), e.iterations());
    }
}

ErrorReport error_report(std::span<const double> u, std::span<const double> u_ref, const StructuredGrid& grid)
{
    check_sizes(u, u_ref, grid);
    const ElementNorms en(grid);
    double dm = 0.0, dk = 0.0, rm = 0.0, rk = 0.0;
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            const auto nodes = cell_nodes(grid, ci, cj);
            const auto r = gather(u_ref, nodes);
            const auto v = gather(u, nodes);
            const std::array<double, 4> d{v[0] - r[0], v[1] - r[1], v[2] - r[2], v[3] - r[3]};
            dm += quadratic_form(en.mass, d);
            dk += quadratic_form(en.stiff, d);
            rm += quadratic_form(en.mass, r);
            rk += quadratic_form(en.stiff, r);
        }
    }
    if (!(rm > 0.0) || !(rk > 0.0)) throw MetricError("error_report: reference solution has zero norm");
    ErrorReport rep;
    rep.e_l2 = std::sqrt(std::max(dm, 0.0) / rm);
    rep.e_h1 = std::sqrt(std::max(dk, 0.0) / rk);
    return rep;
}

double layer_width(double pe)
{
    if (!(pe > 2.0)) throw MetricError("layer_width: Pe must exceed 2, got " + std::to_string(pe));
    return 2.0 / pe * std::log(pe / 2.0);
}

LayerSplit layer_split(std::span<const double> u, std::span<const double> u_ref, const StructuredGrid& grid, double pe)
{
    check_sizes(u, u_ref, grid);
    LayerSplit out;
    out.width = layer_width(pe);
    if (out.width >= 1.0) throw MetricError("layer_split: layer width " + std::to_string(out.width) + " covers the domain");
    const double edge = 1.0 - out.width;
    const ElementNorms en(grid);
    double in = 0.0, rest = 0.0, rk = 0.0;
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            const auto nodes = cell_nodes(grid, ci, cj);
            const auto r = gather(u_ref, nodes);
            const auto v = gather(u, nodes);
            const std::array<double, 4> d{v[0] - r[0], v[1] - r[1], v[2] - r[2], v[3] - r[3]};
            const double e = quadratic_form(en.stiff, d);
            const double xc = grid.x(ci) + 0.5 * grid.hx;
            const double yc = grid.y(cj) + 0.5 * grid.hy;
            (xc > edge || yc > edge ? in : rest) += e;
            rk += quadratic_form(en.stiff, r);
        }
    }
    if (!(rk > 0.0)) throw MetricError("layer_split: reference solution has zero norm");
    out.e_h1_in = std::sqrt(std::max(in, 0.0) / rk);
    out.e_h1_out = std::sqrt(std::max(rest, 0.0) / rk);
    return out;
}

std::vector<double> bilinear_prolongation(std::span<const double> coarse, int nc, int nf)
{
    if (nc < 1 || nf % nc != 0) throw GridError("bilinear_prolongation: nf must be a multiple of nc");
    if (coarse.size() != static_cast<std::size_t>(nc + 1) * (nc + 1)) {
        throw DimensionError("bilinear_prolongation: expected " + std::to_string((nc + 1) * (nc + 1)) + " coarse values");
    }
    const int r = nf / nc;
    std::vector<double> out(static_cast<std::size_t>(nf + 1) * (nf + 1));
    for (int j = 0; j <= nf; ++j) {
        const int cj = std::min(j / r, nc - 1);
        const double t = static_cast<double>(j - cj * r) / r;
        for (int i = 0; i <= nf; ++i) {
            const int ci = std::min(i / r, nc - 1);
            const double s = static_cast<double>(i - ci * r) / r;
            const auto at = [&](int a, int b) { return coarse[static_cast<std::size_t>(b) * (nc + 1) + a]; };
            out[static_cast<std::size_t>(j) * (nf + 1) + i] = (1 - s) * (1 - t) * at(ci, cj) + s * (1 - t) * at(ci + 1, cj) +
                                                              (1 - s) * t * at(ci, cj + 1) + s * t * at(ci + 1, cj + 1);
        }
    }
    return out;
}

std::vector<double> fem_coarse_solution(const ProblemSpec& spec, int nc, int quad_order)
{
    const auto grid = unit_square_grid(nc);
    return coarse_solve(assemble_galerkin(spec.coeffs, grid, quad_order), grid);
}

std::vector<double> supg_coarse_solution(const ProblemSpec& spec, int nc, int quad_order)
{
    const auto grid = unit_square_grid(nc);
    return coarse_solve(assemble_supg(spec.coeffs, grid, quad_order), grid);
}

ErrorReport fem_baseline(const ProblemSpec& spec, int nc, std::span<const double> u_ref, int nf, int quad_order)
{
    return baseline(spec, nc, u_ref, nf, quad_order, false);
}

ErrorReport supg_baseline(const ProblemSpec& spec, int nc, std::span<const double> u_ref, int nf, int quad_order)
{
    return baseline(spec, nc, u_ref, nf, quad_order, true);
}

}  // namespace wemsfem
