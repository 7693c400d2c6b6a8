#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <set>

#include "wemsfem/hierarchical.hpp"
#include "wemsfem/quadrature.hpp"

using namespace wemsfem;

namespace {

Eigen::MatrixXd trace_matrix(const EdgeSpace& s, int loop_len)
{
    Eigen::MatrixXd m(loop_len, s.dimension());
    for (int j = 0; j < s.dimension(); ++j) {
        for (int t = 0; t < loop_len; ++t) m(t, j) = s.traces[j].values[t];
    }
    return m;
}

int rank_of(const Eigen::MatrixXd& m)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
}

/// Max residual of projecting the columns of `b` onto the column span of `a`.
double span_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const Eigen::MatrixXd x = a.colPivHouseholderQr().solve(b);
    return (a * x - b).cwiseAbs().maxCoeff();
}

/// ‖sin(πx) − I_ℓ sin(πx)‖_{L²(0,1)} with exact evaluation of the smooth function.
double projection_error(int level, int nfine)
{
    std::vector<double> samples(static_cast<std::size_t>(nfine) + 1);
    for (int t = 0; t <= nfine; ++t) samples[t] = std::sin(std::numbers::pi * t / nfine);
    const auto p = l2_project_1d(samples, level);
    const auto rule = gauss_legendre(6);
    const int n = 1 << level;
    double e = 0.0;
    for (int k = 0; k < n; ++k) {
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double s = rule.points[q];
            const double x = (k + s) / n;
            const double ph = (1 - s) * p.nodal[k] + s * p.nodal[k + 1];
            const double d = ph - std::sin(std::numbers::pi * x);
            e += rule.weights[q] / n * d * d;
        }
    }
    return std::sqrt(e);
}

}  // namespace

TEST_CASE("psi values")
{
    CHECK(eval_psi(0, 0, 0.0) == 1.0);
    CHECK(eval_psi(0, 0, 0.25) == 0.75);
    CHECK(eval_psi(0, 1, 0.25) == 0.25);
    CHECK(eval_psi(1, 1, 0.5) == 1.0);
    CHECK(eval_psi(1, 1, 0.25) == 0.5);
    CHECK(eval_psi(2, 1, 0.125) == 0.5);
    CHECK(eval_psi(2, 3, 0.25) == 0.0);
    CHECK(eval_psi(2, 3, 1.5) == 0.0);
    CHECK_THROWS_AS(eval_psi(-1, 0, 0.5), LevelError);

    CHECK(level_index_set(0) == std::vector<int>{0, 1});
    CHECK(level_index_set(1) == std::vector<int>{1});
    CHECK(level_index_set(3) == std::vector<int>{1, 3, 5, 7});
}

TEST_CASE("hierarchical basis dimension and change of basis")
{
    for (int l = 0; l <= 6; ++l) {
        const HierarchicalBasis1D b(l);
        const int n = (1 << l) + 1;
        CHECK(b.dimension() == n);
        const auto t = b.nodal_matrix();
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                m(i, j) = t[i * n + j];
                // Dyadic rationals: scaling by 2^ℓ leaves an integer.
                const double s = std::ldexp(m(i, j), l);
                CHECK(s == std::round(s));
            }
        }
        CHECK(rank_of(m) == n);
    }
}

TEST_CASE("hierarchize round trip")
{
    const std::vector<double> v{0.0, 1.0, 4.0, 9.0, 16.0, 9.0, 4.0, 1.0, 0.0};
    const auto c = hierarchize(v, 3);
    const auto back = dehierarchize(c, 3);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(back[k] == doctest::Approx(v[k]).epsilon(1e-15));
    // The level-1 surplus at x = 1/2 is v(1/2) − (v(0) + v(1))/2.
    CHECK(c[2] == 16.0);
    CHECK_THROWS_AS(hierarchize(v, 2), LevelError);
}

TEST_CASE("L2 projection is idempotent and reproduces V_l")
{
    const int nfine = 256;
    for (int l = 0; l <= 5; ++l) {
        std::vector<double> samples(nfine + 1);
        for (int t = 0; t <= nfine; ++t) samples[t] = std::exp(std::sin(7.0 * t / nfine));
        const auto p = l2_project_1d(samples, l);
        const auto q = l2_project_1d(sample_nodal(p.nodal, nfine), l);
        for (std::size_t k = 0; k < p.nodal.size(); ++k) CHECK(std::abs(q.nodal[k] - p.nodal[k]) <= 1e-12);
        CHECK(dehierarchize(p.hierarchical, l).size() == p.nodal.size());
    }
    std::vector<double> nodes{0.0, 1.0, -2.0, 0.5, 3.0};
    const auto p = l2_project_1d(sample_nodal(nodes, 64), 2);
    for (std::size_t k = 0; k < nodes.size(); ++k) CHECK(std::abs(p.nodal[k] - nodes[k]) <= 1e-12);
    CHECK_THROWS_AS(l2_project_1d(std::vector<double>(11, 0.0), 2), LevelError);
}

TEST_CASE("smooth projection error decays by four per level")
{
    for (int l = 2; l <= 6; ++l) {
        const double factor = projection_error(l, 1 << 14) / projection_error(l + 1, 1 << 14);
        INFO("level " << l << " factor " << factor);
        CHECK(factor >= 3.5);
        CHECK(factor <= 4.5);
    }
}

TEST_CASE("edge space counts")
{
    const auto g = build_hierarchy(4, 32);
    const auto interior = coarse_patch(g, g.coarse_node(2, 2));
    const auto corner = coarse_patch(g, g.coarse_node(0, 0));
    const auto edge = coarse_patch(g, g.coarse_node(2, 0));
    for (auto kind : {EdgeBasisKind::nodal, EdgeBasisKind::hierarchical}) {
        CHECK(edge_space(interior, 0, g, kind).dimension() == 4);
        CHECK(edge_space(interior, 1, g, kind).dimension() == 8);
        CHECK(edge_space(interior, 2, g, kind).dimension() == 16);
        CHECK(edge_space(corner, 0, g, kind).dimension() == 1);
        // Edge patch: the two corners on ∂D are removed.
        CHECK(edge_space(edge, 0, g, kind).dimension() == 2);
    }
    CHECK(max_edge_level(g) == 4);
    CHECK_THROWS_AS(edge_space(interior, 5, g), LevelError);

    const auto sp = edge_space(corner, 0, g);
    const auto c = corner.corner_positions();
    CHECK(sp.traces[0].node_position == c[2]);  // NE corner, opposite ∂D
}

TEST_CASE("edge traces are continuous hats vanishing on the domain boundary")
{
    const auto g = build_hierarchy(4, 32);
    for (const auto& patch : all_patches(g)) {
        const int L = patch.loop_length();
        for (int l = 0; l <= max_edge_level(g); ++l) {
            const auto nodes = edge_node_positions(patch, l);
            const std::set<int> breaks(nodes.begin(), nodes.end());
            for (auto kind : {EdgeBasisKind::nodal, EdgeBasisKind::hierarchical}) {
                for (const auto& tr : edge_space(patch, l, g, kind).traces) {
                    REQUIRE(tr.values.size() == static_cast<std::size_t>(L));
                    CHECK(tr.values[tr.node_position] == 1.0);
                    for (int t = 0; t < L; ++t) {
                        const double v = tr.values[t];
                        CHECK(v >= 0.0);
                        CHECK(v <= 1.0);
                        if (patch.dirichlet_mask[t]) CHECK(v == 0.0);
                        // Linear between dyadic nodes on the loop.
                        if (!breaks.count(t)) {
                            const double mid = 0.5 * (tr.values[(t + L - 1) % L] + tr.values[(t + 1) % L]);
                            CHECK(std::abs(v - mid) <= 1e-14);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("nodal and hierarchical edge spaces share a span")
{
    const auto g = build_hierarchy(4, 32);
    for (int node : {g.coarse_node(2, 2), g.coarse_node(0, 0), g.coarse_node(1, 0), g.coarse_node(4, 3)}) {
        const auto patch = coarse_patch(g, node);
        const int L = patch.loop_length();
        for (int l = 0; l <= max_edge_level(g); ++l) {
            const auto n = trace_matrix(edge_space(patch, l, g, EdgeBasisKind::nodal), L);
            const auto h = trace_matrix(edge_space(patch, l, g, EdgeBasisKind::hierarchical), L);
            CHECK(rank_of(n) == n.cols());
            CHECK(rank_of(h) == h.cols());
            CHECK(n.cols() == h.cols());
            CHECK(span_residual(n, h) <= 1e-10);
            CHECK(span_residual(h, n) <= 1e-10);
        }
        // At the deepest level the traces span every fine-node trace off ∂D.
        int free_positions = 0;
        for (char m : patch.dirichlet_mask) free_positions += m ? 0 : 1;
        const auto top = trace_matrix(edge_space(patch, max_edge_level(g), g), L);
        CHECK(rank_of(top) == free_positions);
    }
}
