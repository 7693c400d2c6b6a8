#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "wemsfem/grid.hpp"

using namespace wemsfem;

TEST_CASE("hierarchy sizes and diameters")
{
    const auto g = build_hierarchy(16, 1024);
    CHECK(g.ratio() == 64);
    CHECK(g.H() == doctest::Approx(std::sqrt(2.0) / 16).epsilon(1e-15));
    CHECK(g.h() == doctest::Approx(std::sqrt(2.0) / 1024).epsilon(1e-15));
    CHECK(g.fine().diameter() == doctest::Approx(g.h()).epsilon(1e-15));

    const auto small = build_hierarchy(4, 8);
    CHECK(small.ratio() == 2);
    CHECK(small.num_fine_nodes() == 81);
}

TEST_CASE("hierarchy preconditions")
{
    CHECK_THROWS_AS(build_hierarchy(16, 1000), GridError);
    CHECK_THROWS_AS(build_hierarchy(3, 12), GridError);
    CHECK_THROWS_AS(build_hierarchy(4, 24), GridError);  // r = 6
    CHECK_THROWS_AS(build_hierarchy(8, 8), GridError);   // r = 1
}

TEST_CASE("coarse to fine map is injective and lands on coincident nodes")
{
    const auto g = build_hierarchy(4, 16);
    std::set<int> seen;
    for (int c = 0; c < g.num_coarse_nodes(); ++c) {
        const int f = g.coarse_to_fine(c);
        REQUIRE(f >= 0);
        REQUIRE(f < g.num_fine_nodes());
        CHECK(seen.insert(f).second);
        const int cx = c % 5, cy = c / 5;
        CHECK(g.fine().x(f % 17) == doctest::Approx(g.coarse().x(cx)));
        CHECK(g.fine().y(f / 17) == doctest::Approx(g.coarse().y(cy)));
    }
}

TEST_CASE("patch geometry")
{
    const auto g = build_hierarchy(16, 128);
    const int r = g.ratio();

    SUBCASE("interior patch")
    {
        const auto p = coarse_patch(g, g.coarse_node(5, 7));
        CHECK(p.cells_x() == 2);
        CHECK(p.cells_y() == 2);
        CHECK(p.fine_nodes.size() == static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
        CHECK(p.loop_length() == 8 * r);
        for (char m : p.dirichlet_mask) CHECK(m == 0);
    }
    SUBCASE("corner of D")
    {
        const auto p = coarse_patch(g, g.coarse_node(0, 0));
        CHECK(p.cells_x() == 1);
        CHECK(p.cells_y() == 1);
        CHECK(p.segments[0].on_domain_boundary);
        CHECK(p.segments[3].on_domain_boundary);
        CHECK_FALSE(p.segments[1].on_domain_boundary);
        CHECK_FALSE(p.segments[2].on_domain_boundary);
        // Bottom and left sides (including their end corners) are all Dirichlet.
        int flagged = 0;
        for (char m : p.dirichlet_mask) flagged += m;
        CHECK(flagged == 2 * r + 1);
        for (int t = 0; t <= r; ++t) CHECK(p.dirichlet_mask[t] == 1);
    }
    SUBCASE("edge of D")
    {
        const auto p = coarse_patch(g, g.coarse_node(16, 3));
        CHECK(p.cells_x() == 1);
        CHECK(p.cells_y() == 2);
        CHECK(p.segments[1].on_domain_boundary);
    }
    CHECK(all_patches(g).size() == 289u);
    CHECK_THROWS_AS(coarse_patch(g, 289), GridError);
}

TEST_CASE("segments partition the boundary loop")
{
    const auto g = build_hierarchy(8, 64);
    for (const auto& p : all_patches(g)) {
        std::set<int> covered;
        int total = 0;
        for (const auto& s : p.segments) {
            for (int t = s.first; t < s.first + s.length; ++t) {
                CHECK(covered.insert(t).second);
                CHECK(&p.segment_of(t) == &s);
            }
            total += s.length;
        }
        CHECK(total == p.loop_length());
        // Loop nodes are exactly the subgrid boundary nodes.
        const auto bnd = p.subgrid.boundary_nodes();
        const std::set<int> loop(p.boundary_loop.begin(), p.boundary_loop.end());
        CHECK(loop == std::set<int>(bnd.begin(), bnd.end()));
        CHECK(loop.size() == p.boundary_loop.size());
    }
}

TEST_CASE("overlap constant is 4 for interior cells")
{
    const auto g = build_hierarchy(8, 16);
    const auto patches = all_patches(g);
    for (int ty = 0; ty < 8; ++ty) {
        for (int tx = 0; tx < 8; ++tx) CHECK(patches_containing_cell(patches, tx, ty) == 4);
    }
}

TEST_CASE("partition of unity")
{
    const auto g = build_hierarchy(8, 64);
    const auto patches = all_patches(g);
    const auto pu = partition_of_unity(g, patches);
    std::vector<double> sum(static_cast<std::size_t>(g.num_fine_nodes()), 0.0);
    for (std::size_t p = 0; p < patches.size(); ++p) {
        const auto& patch = patches[p];
        for (std::size_t k = 0; k < patch.fine_nodes.size(); ++k) {
            const double v = pu.values[p][k];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum[static_cast<std::size_t>(patch.fine_nodes[k])] += v;
            const int n = patch.fine_nodes[k];
            CHECK(v == doctest::Approx(coarse_hat(g, patch.node, g.fine().x(n % 65), g.fine().y(n / 65))).epsilon(1e-14));
        }
        // Gradient bound: neighbouring fine nodes differ by at most h / (cell side) = 1 / r.
        const auto& sg = patch.subgrid;
        for (int j = 0; j <= sg.ny; ++j) {
            for (int i = 0; i < sg.nx; ++i) {
                const double d = std::abs(pu.values[p][sg.node(i + 1, j)] - pu.values[p][sg.node(i, j)]);
                CHECK(d <= 1.0 / g.ratio() + 1e-15);
            }
        }
    }
    for (double s : sum) CHECK(std::abs(s - 1.0) <= 1e-12);

    // Nodal property.
    for (int i = 0; i < g.num_coarse_nodes(); ++i) {
        for (int j = 0; j < g.num_coarse_nodes(); ++j) {
            const int f = g.coarse_to_fine(j);
            const double v = coarse_hat(g, i, g.fine().x(f % 65), g.fine().y(f / 65));
            CHECK(v == (i == j ? 1.0 : 0.0));
        }
    }

    // A coarse-cell centre sees four hats of 1/4.
    const double xc = 2.5 / 8, yc = 3.5 / 8;
    int count = 0;
    for (int i = 0; i < g.num_coarse_nodes(); ++i) {
        const double v = coarse_hat(g, i, xc, yc);
        if (v > 0.0) {
            ++count;
            CHECK(v == 0.25);
        }
    }
    CHECK(count == 4);
}
