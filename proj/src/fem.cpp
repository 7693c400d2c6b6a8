#include "wemsfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wemsfem {

namespace {

constexpr int max_quad_order = 12;
constexpr int max_quad_points = max_quad_order * max_quad_order;

void scatter(SparseMatrix& m, const StructuredGrid& grid, int ci, int cj, const ElementIntegrator::Matrix4& e)
{
    const auto nodes = cell_nodes(grid, ci, cj);
    auto& vals = m.values();
    for (int a = 0; a < 4; ++a) {
        for (int c = 0; c < 4; ++c) {
            const auto k = m.find(nodes[a], nodes[c]);
            vals[static_cast<std::size_t>(k)] += e[static_cast<std::size_t>(a * 4 + c)];
        }
    }
}

AssembledSystem assemble_with(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order,
                              ElementIntegrator::Terms terms, bool with_mass)
{
    const ElementIntegrator integ(coeffs, grid, quad_order, terms);
    AssembledSystem sys;
    sys.full_size = grid.num_nodes();
    sys.A = q1_pattern(grid);
    sys.F.assign(static_cast<std::size_t>(grid.num_nodes()), 0.0);
    ElementIntegrator::Matrix4 e{};
    ElementIntegrator::Vector4 f{};
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            integ.integrate(ci, cj, e, f);
            scatter(sys.A, grid, ci, cj, e);
            const auto nodes = cell_nodes(grid, ci, cj);
            for (int a = 0; a < 4; ++a) sys.F[static_cast<std::size_t>(nodes[a])] += f[a];
        }
    }
    if (with_mass) sys.M = mass_matrix(grid);
    return sys;
}

}  // namespace

double supg_delta(double H_elem, double b_inf_elem, double epsilon)
{
    const double s2 = std::sqrt(2.0);
    return H_elem * H_elem / (2.0 * s2 * epsilon * std::max(12.0 / s2, H_elem * b_inf_elem / epsilon));
}

std::array<int, 4> cell_nodes(const StructuredGrid& grid, int ci, int cj)
{
    const int n0 = grid.node(ci, cj);
    const int nx = grid.nodes_x();
    return {n0, n0 + 1, n0 + nx, n0 + nx + 1};
}

ElementIntegrator::ElementIntegrator(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order,
                                     Terms terms)
    : coeffs_(coeffs), grid_(grid), terms_(terms)
{
    if (quad_order < 2 || quad_order > max_quad_order) {
        throw AssemblyError("ElementIntegrator: quadrature order must be in [2, " + std::to_string(max_quad_order) +
                            "], got " + std::to_string(quad_order));
    }
    rule_ = gauss_legendre(quad_order);
    nq_ = quad_order * quad_order;
    for (int qj = 0; qj < quad_order; ++qj) {
        for (int qi = 0; qi < quad_order; ++qi) {
            const double xi = rule_.points[qi];
            const double eta = rule_.points[qj];
            xi_.push_back(xi);
            eta_.push_back(eta);
            weight_.push_back(rule_.weights[qi] * rule_.weights[qj] * grid.hx * grid.hy);
            phi_.push_back({(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta});
            dphi_dx_.push_back({-(1 - eta) / grid.hx, (1 - eta) / grid.hx, -eta / grid.hx, eta / grid.hx});
            dphi_dy_.push_back({-(1 - xi) / grid.hy, -xi / grid.hy, (1 - xi) / grid.hy, xi / grid.hy});
        }
    }
}

double ElementIntegrator::velocity_sup(int ci, int cj) const
{
    double bmax = 0.0;
    for (int q = 0; q < nq_; ++q) {
        const auto b = coeffs_.velocity(grid_.x0 + (ci + xi_[q]) * grid_.hx, grid_.y0 + (cj + eta_[q]) * grid_.hy);
        bmax = std::max({bmax, std::abs(b[0]), std::abs(b[1])});
    }
    return bmax;
}

double ElementIntegrator::delta(int ci, int cj) const
{
    if (!terms_.supg) return 0.0;
    return supg_delta(grid_.diameter(), velocity_sup(ci, cj), coeffs_.epsilon);
}

void ElementIntegrator::integrate(int ci, int cj, Matrix4& a, Vector4& f) const { integrate_impl(ci, cj, a, &f); }

void ElementIntegrator::integrate_matrix(int ci, int cj, Matrix4& a) const { integrate_impl(ci, cj, a, nullptr); }

void ElementIntegrator::integrate_impl(int ci, int cj, Matrix4& a, Vector4* f) const
{
    std::array<std::array<double, 2>, max_quad_points> bq{};
    double bmax = 0.0;
    const bool need_b = terms_.convection || terms_.supg;
    if (need_b) {
        for (int q = 0; q < nq_; ++q) {
            bq[q] = coeffs_.velocity(grid_.x0 + (ci + xi_[q]) * grid_.hx, grid_.y0 + (cj + eta_[q]) * grid_.hy);
            bmax = std::max({bmax, std::abs(bq[q][0]), std::abs(bq[q][1])});
        }
    }
    const double delta = terms_.supg ? supg_delta(grid_.diameter(), bmax, coeffs_.epsilon) : 0.0;

    a.fill(0.0);
    if (f != nullptr) f->fill(0.0);
    for (int q = 0; q < nq_; ++q) {
        const double x = grid_.x0 + (ci + xi_[q]) * grid_.hx;
        const double y = grid_.y0 + (cj + eta_[q]) * grid_.hy;
        const double w = weight_[q];
        const auto& phi = phi_[q];
        const auto& gx = dphi_dx_[q];
        const auto& gy = dphi_dy_[q];
        double kappa = 0.0;
        if (terms_.diffusion) {
            kappa = coeffs_.diffusion(x, y);
            if (!(kappa > 0.0)) {
                throw AssemblyError("assembly: nonpositive diffusion " + std::to_string(kappa) + " at (" +
                                    std::to_string(x) + ", " + std::to_string(y) + ")");
            }
        }
        std::array<double, 4> bgrad{};
        if (need_b) {
            for (int c = 0; c < 4; ++c) bgrad[c] = bq[q][0] * gx[c] + bq[q][1] * gy[c];
        }
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                double v = 0.0;
                if (terms_.diffusion) v += kappa * (gx[c] * gx[r] + gy[c] * gy[r]);
                if (terms_.convection) v += bgrad[c] * phi[r];
                if (terms_.supg) v += delta * bgrad[c] * bgrad[r];
                a[static_cast<std::size_t>(r * 4 + c)] += w * v;
            }
        }
        if (f != nullptr) {
            const double fv = coeffs_.force(x, y);
            for (int r = 0; r < 4; ++r) (*f)[r] += w * fv * (phi[r] + delta * bgrad[r]);
        }
    }
}

SparseMatrix q1_pattern(const StructuredGrid& grid)
{
    const int n = grid.num_nodes();
    std::vector<std::size_t> offsets(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> columns;
    columns.reserve(static_cast<std::size_t>(n) * 9);
    for (int j = 0; j <= grid.ny; ++j) {
        for (int i = 0; i <= grid.nx; ++i) {
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    const int ii = i + di;
                    const int jj = j + dj;
                    if (ii < 0 || jj < 0 || ii > grid.nx || jj > grid.ny) continue;
                    columns.push_back(grid.node(ii, jj));
                }
            }
            offsets[static_cast<std::size_t>(grid.node(i, j)) + 1] = columns.size();
        }
    }
    std::vector<double> values(columns.size(), 0.0);
    return SparseMatrix(n, n, std::move(offsets), std::move(columns), std::move(values));
}

ConvectionDiffusionParts assemble_parts(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order)
{
    ConvectionDiffusionParts parts;
    const ElementIntegrator kint(coeffs, grid, quad_order, {true, false, false});
    const ElementIntegrator cint(coeffs, grid, quad_order, {false, true, false});
    parts.K = q1_pattern(grid);
    parts.C = q1_pattern(grid);
    parts.F.assign(static_cast<std::size_t>(grid.num_nodes()), 0.0);
    ElementIntegrator::Matrix4 e{};
    ElementIntegrator::Vector4 f{};
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) {
            kint.integrate(ci, cj, e, f);
            scatter(parts.K, grid, ci, cj, e);
            const auto nodes = cell_nodes(grid, ci, cj);
            for (int a = 0; a < 4; ++a) parts.F[static_cast<std::size_t>(nodes[a])] += f[a];
            cint.integrate_matrix(ci, cj, e);
            scatter(parts.C, grid, ci, cj, e);
        }
    }
    parts.M = mass_matrix(grid);
    return parts;
}

AssembledSystem assemble_galerkin(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order,
                                  bool with_mass)
{
    return assemble_with(coeffs, grid, quad_order, {true, true, false}, with_mass);
}

AssembledSystem assemble_supg(const ProblemCoefficients& coeffs, const StructuredGrid& grid, int quad_order,
                              bool with_mass)
{
    return assemble_with(coeffs, grid, quad_order, {true, true, true}, with_mass);
}

SparseMatrix mass_matrix(const StructuredGrid& grid)
{
    // Exact Q1 element mass: hx·hy/36 · [4 2 2 1; 2 4 1 2; 2 1 4 2; 1 2 2 4].
    const double s = grid.hx * grid.hy / 36.0;
    const ElementIntegrator::Matrix4 e{4 * s, 2 * s, 2 * s, 1 * s, 2 * s, 4 * s, 1 * s, 2 * s,
                                       2 * s, 1 * s, 4 * s, 2 * s, 1 * s, 2 * s, 2 * s, 4 * s};
    SparseMatrix m = q1_pattern(grid);
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) scatter(m, grid, ci, cj, e);
    }
    return m;
}

SparseMatrix stiffness_matrix(const StructuredGrid& grid)
{
    ProblemCoefficients unit{[](double, double) { return 1.0; },
                             [](double, double) { return std::array<double, 2>{0.0, 0.0}; },
                             [](double, double) { return 0.0; }, 1.0};
    const ElementIntegrator integ(unit, grid, 2, {true, false, false});
    ElementIntegrator::Matrix4 e{};
    integ.integrate_matrix(0, 0, e);
    SparseMatrix k = q1_pattern(grid);
    for (int cj = 0; cj < grid.ny; ++cj) {
        for (int ci = 0; ci < grid.nx; ++ci) scatter(k, grid, ci, cj, e);
    }
    return k;
}

std::vector<double> AssembledSystem::reconstruct(std::span<const double> reduced_solution) const
{
    if (!reduced()) return {reduced_solution.begin(), reduced_solution.end()};
    if (reduced_solution.size() != free_dofs.size()) {
        throw DimensionError("reconstruct: expected " + std::to_string(free_dofs.size()) + " values, got " +
                             std::to_string(reduced_solution.size()));
    }
    std::vector<double> full = lift;
    for (std::size_t k = 0; k < free_dofs.size(); ++k) full[static_cast<std::size_t>(free_dofs[k])] = reduced_solution[k];
    return full;
}

DirichletPartition partition_dirichlet(const SparseMatrix& a, std::span<const int> boundary_nodes)
{
    const int n = a.rows();
    std::vector<char> is_bnd(static_cast<std::size_t>(n), 0);
    for (int b : boundary_nodes) {
        if (b < 0 || b >= n) throw DimensionError("partition_dirichlet: boundary node out of range");
        is_bnd[static_cast<std::size_t>(b)] = 1;
    }
    DirichletPartition part;
    for (int i = 0; i < n; ++i) (is_bnd[i] ? part.boundary_dofs : part.free_dofs).push_back(i);
    part.interior = a.submatrix(part.free_dofs, part.free_dofs);
    part.coupling = a.submatrix(part.free_dofs, part.boundary_dofs);
    return part;
}

AssembledSystem apply_dirichlet(const AssembledSystem& system, std::span<const int> boundary_nodes,
                                std::span<const double> values)
{
    if (values.size() != boundary_nodes.size()) {
        throw DimensionError("apply_dirichlet: " + std::to_string(values.size()) + " values for " +
                             std::to_string(boundary_nodes.size()) + " boundary nodes");
    }
    const int n = system.A.rows();
    AssembledSystem out;
    out.full_size = n;
    out.lift.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < boundary_nodes.size(); ++k) {
        if (boundary_nodes[k] < 0 || boundary_nodes[k] >= n) throw DimensionError("apply_dirichlet: node out of range");
        out.lift[static_cast<std::size_t>(boundary_nodes[k])] = values[k];
    }
    auto part = partition_dirichlet(system.A, boundary_nodes);
    std::vector<double> g(part.boundary_dofs.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = out.lift[static_cast<std::size_t>(part.boundary_dofs[k])];
    out.F.resize(part.free_dofs.size());
    for (std::size_t k = 0; k < part.free_dofs.size(); ++k) out.F[k] = system.F[static_cast<std::size_t>(part.free_dofs[k])];
    part.coupling.multiply_add(g, out.F, -1.0);
    out.A = std::move(part.interior);
    if (system.M.rows() == n) out.M = system.M.submatrix(part.free_dofs, part.free_dofs);
    out.free_dofs = std::move(part.free_dofs);
    return out;
}

}  // namespace wemsfem
