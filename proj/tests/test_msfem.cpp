#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "wemsfem/catalog.hpp"
#include "wemsfem/metrics.hpp"
#include "wemsfem/msfem.hpp"

using namespace wemsfem;

namespace {

ProblemCoefficients poisson(double f = 1.0)
{
    ProblemCoefficients c;
    c.diffusion = [](double, double) { return 1.0; };
    c.velocity = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    c.force = [f](double, double) { return f; };
    return c;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<char> domain_boundary_mask(const StructuredGrid& g)
{
    std::vector<char> mask(static_cast<std::size_t>(g.num_nodes()), 0);
    for (int n : g.boundary_nodes()) mask[static_cast<std::size_t>(n)] = 1;
    return mask;
}

}  // namespace

TEST_CASE("zero source gives zero bubble and zero solution")
{
    const auto g = build_hierarchy(4, 32);
    auto c = make_problem("2").coeffs;
    c.force = [](double, double) { return 0.0; };
    const MultiscaleSolver ms(g, c, {1, 4, EdgeBasisKind::hierarchical, 1});
    CHECK(max_abs(ms.global_bubble()) == 0.0);
    CHECK(max_abs(ms.solve(1).u_ms) == 0.0);
}

TEST_CASE("Poisson patch bubble matches a Galerkin solve on the subgrid")
{
    const auto g = build_hierarchy(4, 32);
    const auto patch = coarse_patch(g, g.coarse_node(2, 2));
    const auto c = poisson();
    const auto bubble = local_bubble(patch, c);

    const auto sys = assemble_galerkin(c, patch.subgrid);
    const auto bnd = patch.subgrid.boundary_nodes();
    const auto red = apply_dirichlet(sys, bnd, std::vector<double>(bnd.size(), 0.0));
    const auto oracle = red.reconstruct(direct_solve(red.A, red.F));
    REQUIRE(bubble.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) CHECK(std::abs(bubble[k] - oracle[k]) <= 1e-13);
    for (int n : bnd) CHECK(bubble[n] == 0.0);
}

TEST_CASE("Poisson bubble scales like H squared")
{
    const auto c = poisson();
    const auto g4 = build_hierarchy(4, 64);
    const auto g8 = build_hierarchy(8, 64);
    const double b4 = max_abs(local_bubble(coarse_patch(g4, g4.coarse_node(2, 2)), c));
    const double b8 = max_abs(local_bubble(coarse_patch(g8, g8.coarse_node(4, 4)), c));
    CHECK(b4 / b8 >= 3.5);
    CHECK(b4 / b8 <= 4.5);
}

TEST_CASE("harmonic extension of a linear trace reproduces it")
{
    const auto g = build_hierarchy(4, 32);
    const auto patch = coarse_patch(g, g.coarse_node(1, 2));
    const LocalProblem lp(patch, poisson(0.0), 4);
    const auto& sg = patch.subgrid;
    auto lin = [&](int local) {
        const int i = local % sg.nodes_x(), j = local / sg.nodes_x();
        return 0.3 + sg.x(i) - 2.0 * sg.y(j);
    };
    std::vector<double> trace;
    for (int local : patch.boundary_loop) trace.push_back(lin(local));
    const auto e = lp.extend(trace);
    for (int k = 0; k < sg.num_nodes(); ++k) CHECK(std::abs(e[k] - lin(k)) <= 1e-12);
    CHECK_THROWS_AS(lp.extend(std::vector<double>(3, 0.0)), DimensionError);
}

TEST_CASE("harmonic extension is linear in the trace")
{
    const auto g = build_hierarchy(4, 32);
    const auto patch = coarse_patch(g, g.coarse_node(2, 1));
    const LocalProblem lp(patch, make_problem("2").coeffs, 4);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> t1(patch.loop_length()), t2(patch.loop_length()), mix(patch.loop_length());
    for (int k = 0; k < patch.loop_length(); ++k) {
        t1[k] = d(rng);
        t2[k] = d(rng);
        mix[k] = 2.0 * t1[k] - 0.5 * t2[k];
    }
    const auto e1 = lp.extend(t1), e2 = lp.extend(t2), em = lp.extend(mix);
    for (std::size_t k = 0; k < em.size(); ++k) CHECK(std::abs(em[k] - (2.0 * e1[k] - 0.5 * e2[k])) <= 1e-10);
    // The extension matches its trace on the patch boundary exactly.
    for (int k = 0; k < patch.loop_length(); ++k) CHECK(e1[patch.boundary_loop[k]] == t1[k]);
}

TEST_CASE("basis and local solve counts")
{
    // nc = 4: only the center patch avoids ∂D; 8 patches touch it along one side, 16 along two.
    CHECK(number_of_basis_functions(4, 0) == 1 * 4 + 8 * 2 + 16 * 1);
    CHECK(number_of_local_solves(4, 0) == 25 + 36);
    CHECK(number_of_basis_functions(4, 1) == 1 * 8 + 8 * 5 + 16 * 3);
    CHECK(number_of_local_solves(4, 1) == 25 + 96);
    // nc = 16, ℓ = 0: 169 patches clear of ∂D with 1 + 4 solves, 104 with 1 + 2, 16 with 1 + 1.
    CHECK(number_of_local_solves(16, 0) == 169 * 5 + 104 * 3 + 16 * 2);
    CHECK_THROWS(number_of_basis_functions(3, 0));

    const auto g = build_hierarchy(4, 32);
    const auto patches = all_patches(g);
    const auto pu = partition_of_unity(g, patches);
    const auto c = make_problem("2").coeffs;
    for (int l = 0; l <= 2; ++l) {
        for (auto kind : {EdgeBasisKind::nodal, EdgeBasisKind::hierarchical}) {
            const auto b = build_basis(g, patches, pu, l, c, 4, kind, 1);
            CHECK(b.cols() == number_of_basis_functions(4, l));
            CHECK(b.cols() + g.num_coarse_nodes() == number_of_local_solves(4, l));
        }
    }
}

TEST_CASE("basis columns live on their patch and vanish on the domain boundary")
{
    const auto g = build_hierarchy(4, 32);
    const auto patches = all_patches(g);
    const auto pu = partition_of_unity(g, patches);
    const auto b = build_basis(g, patches, pu, 1, make_problem("3").coeffs, 4, EdgeBasisKind::hierarchical, 1);
    const auto mask = domain_boundary_mask(g.fine());
    const auto B = b.to_sparse();
    const auto Bt = B.transpose();
    REQUIRE(Bt.rows() == b.cols());
    for (int j = 0; j < b.cols(); ++j) {
        const auto& nodes = b.patch_of(j).fine_nodes;
        const std::vector<int> sorted = [&] {
            auto s = nodes;
            std::sort(s.begin(), s.end());
            return s;
        }();
        bool nonzero = false;
        for (std::size_t k = Bt.row_begin(j); k < Bt.row_end(j); ++k) {
            const int row = Bt.columns()[k];
            const double v = Bt.values()[k];
            if (v == 0.0) continue;
            nonzero = true;
            CHECK(std::binary_search(sorted.begin(), sorted.end(), row));
            CHECK(!mask[row]);
        }
        CHECK(nonzero);
        CHECK(b.find(b.column(j).patch, b.column(j).trace) == j);
    }
    // apply() agrees with the explicit matrix.
    std::vector<double> coef(b.cols());
    for (int j = 0; j < b.cols(); ++j) coef[j] = std::sin(1.0 + j);
    const auto y1 = b.apply(coef);
    const auto y2 = B.matvec(coef);
    for (std::size_t k = 0; k < y1.size(); ++k) CHECK(std::abs(y1[k] - y2[k]) <= 1e-13);
}

TEST_CASE("multiscale solution is linear in the source and vanishes on the boundary")
{
    const auto g = build_hierarchy(4, 32);
    const auto spec = make_problem("3");
    const MultiscaleSolver ms(g, spec.coeffs, {1, 4, EdgeBasisKind::hierarchical, 0});
    const ScalarField f1 = [](double x, double y) { return 1.0 + x * y; };
    const ScalarField f2 = [](double x, double y) { return std::cos(3 * x) - y; };
    const ScalarField fm = [&](double x, double y) { return 3.0 * f1(x, y) - 2.0 * f2(x, y); };
    const auto u1 = ms.solve(f1, 1).u_ms, u2 = ms.solve(f2, 1).u_ms, um = ms.solve(fm, 1).u_ms;
    const double scale = max_abs(um);
    for (std::size_t k = 0; k < um.size(); ++k) CHECK(std::abs(um[k] - (3.0 * u1[k] - 2.0 * u2[k])) <= 1e-10 * scale);

    const auto sol = ms.solve(0);
    for (int n : g.fine().boundary_nodes()) CHECK(std::abs(sol.u_ms[n]) <= 1e-12);
    CHECK(sol.columns.size() < ms.solve(1).columns.size());
    CHECK_THROWS_AS(ms.solve(2), MultiscaleError);
}

TEST_CASE("hierarchical and nodal edge bases give the same solution")
{
    const auto g = build_hierarchy(4, 32);
    const auto c = make_problem("4a").coeffs;
    const auto h = MultiscaleSolver(g, c, {1, 4, EdgeBasisKind::hierarchical, 0}).solve(1).u_ms;
    const auto n = MultiscaleSolver(g, c, {1, 4, EdgeBasisKind::nodal, 0}).solve(1).u_ms;
    const double scale = max_abs(h);
    for (std::size_t k = 0; k < h.size(); ++k) CHECK(std::abs(h[k] - n[k]) <= 1e-9 * scale);
    // Nodal spaces are not nested, so a nodal build only serves its own level.
    CHECK_THROWS_AS(MultiscaleSolver(g, c, {1, 4, EdgeBasisKind::nodal, 0}).solve(0), MultiscaleError);
}

TEST_CASE("enrichment to the deepest level approaches the fine solution")
{
    const auto g = build_hierarchy(4, 32);
    const auto spec = make_problem("2");
    const auto ref = reference_solution(spec, 32);
    const int top = max_edge_level(g);
    const MultiscaleSolver ms(g, spec.coeffs, {top, 4, EdgeBasisKind::hierarchical, 0});
    double prev = 1e300;
    for (int l = 0; l <= top; ++l) {
        const double e = error_report(ms.solve(l).u_ms, ref, g.fine()).e_h1;
        MESSAGE("level " << l << " e_H1 " << e);
        if (l <= 2) CHECK(e < prev);
        prev = e;
    }
    const double e0 = error_report(ms.solve(0).u_ms, ref, g.fine()).e_h1;
    const double etop = error_report(ms.solve(top).u_ms, ref, g.fine()).e_h1;
    CHECK(etop < e0);
    CHECK(etop < 0.05);
}
