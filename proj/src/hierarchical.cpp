#include "wemsfem/hierarchical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace wemsfem {

namespace {

void check_level(int level)
{
    if (level < 0 || level > 30) throw LevelError("hierarchical level " + std::to_string(level) + " out of range");
}

/// Hat on a closed loop of `loop_len` positions peaking at `peak`.
std::vector<double> loop_hat(int loop_len, int peak, int back_len, int fwd_len)
{
    std::vector<double> v(static_cast<std::size_t>(loop_len), 0.0);
    for (int t = 0; t < loop_len; ++t) {
        const int db = ((peak - t) % loop_len + loop_len) % loop_len;
        const int df = ((t - peak) % loop_len + loop_len) % loop_len;
        double val = 0.0;
        if (db <= back_len) val = std::max(val, 1.0 - static_cast<double>(db) / back_len);
        if (df <= fwd_len) val = std::max(val, 1.0 - static_cast<double>(df) / fwd_len);
        v[static_cast<std::size_t>(t)] = val;
    }
    return v;
}

/// Level at which a position along a side of `length` intervals first appears.
int introducing_level(int offset, int length)
{
    if (offset == 0) return 0;
    const int g = std::gcd(offset, length);
    int m = 0;
    for (int q = length / g; q > 1; q >>= 1) ++m;
    return m;
}

}  // namespace

double eval_psi(int level, int j, double x)
{
    check_level(level);
    if (x < 0.0 || x > 1.0) return 0.0;
    const double scaled = std::ldexp(x, level);
    return std::max(0.0, 1.0 - std::abs(scaled - j));
}

std::vector<int> level_index_set(int m)
{
    check_level(m);
    if (m == 0) return {0, 1};
    std::vector<int> out;
    for (int j = 1; j < (1 << m); j += 2) out.push_back(j);
    return out;
}

double HierarchicalBasis1D::Generator::node() const { return std::ldexp(static_cast<double>(index), -level); }

HierarchicalBasis1D::HierarchicalBasis1D(int max_level) : level(max_level)
{
    check_level(max_level);
    for (int m = 0; m <= max_level; ++m) {
        for (int j : level_index_set(m)) generators.push_back({m, j});
    }
}

std::vector<double> HierarchicalBasis1D::nodal_matrix() const
{
    const int n = (1 << level) + 1;
    const int d = dimension();
    std::vector<double> t(static_cast<std::size_t>(n) * d);
    for (int k = 0; k < n; ++k) {
        const double x = std::ldexp(static_cast<double>(k), -level);
        for (int g = 0; g < d; ++g) {
            t[static_cast<std::size_t>(k) * d + g] = eval_psi(generators[g].level, generators[g].index, x);
        }
    }
    return t;
}

std::vector<double> hierarchize(std::span<const double> nodal_values, int level)
{
    check_level(level);
    const int n = (1 << level) + 1;
    if (nodal_values.size() != static_cast<std::size_t>(n)) {
        throw LevelError("hierarchize: expected " + std::to_string(n) + " nodal values");
    }
    const HierarchicalBasis1D basis(level);
    std::vector<double> c;
    c.reserve(basis.generators.size());
    for (const auto& g : basis.generators) {
        const int stride = 1 << (level - g.level);
        const int k = g.index * stride;
        if (g.level == 0) {
            c.push_back(nodal_values[static_cast<std::size_t>(k)]);
        } else {
            c.push_back(nodal_values[static_cast<std::size_t>(k)] -
                        0.5 * (nodal_values[static_cast<std::size_t>(k - stride)] +
                               nodal_values[static_cast<std::size_t>(k + stride)]));
        }
    }
    return c;
}

std::vector<double> dehierarchize(std::span<const double> coefficients, int level)
{
    const HierarchicalBasis1D basis(level);
    if (coefficients.size() != basis.generators.size()) {
        throw LevelError("dehierarchize: expected " + std::to_string(basis.dimension()) + " coefficients");
    }
    const int n = (1 << level) + 1;
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        const double x = std::ldexp(static_cast<double>(k), -level);
        double s = 0.0;
        for (std::size_t g = 0; g < coefficients.size(); ++g) {
            s += coefficients[g] * eval_psi(basis.generators[g].level, basis.generators[g].index, x);
        }
        v[static_cast<std::size_t>(k)] = s;
    }
    return v;
}

Projection1D l2_project_1d(std::span<const double> samples, int level)
{
    check_level(level);
    if (samples.size() < 2) throw LevelError("l2_project_1d: need at least two samples");
    const int nfine = static_cast<int>(samples.size()) - 1;
    const int ncoarse = 1 << level;
    if (nfine % ncoarse != 0) {
        throw LevelError("l2_project_1d: fine grid of " + std::to_string(nfine) + " intervals does not resolve level " +
                         std::to_string(level));
    }
    const int r = nfine / ncoarse;
    const double H = 1.0 / ncoarse;
    const double dx = 1.0 / nfine;
    const int n = ncoarse + 1;

    // Load vector: exact integral of (piecewise-linear samples) × (nodal hat).
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < nfine; ++t) {
        const int k = t / r;  // coarse interval
        const double s0 = static_cast<double>(t - k * r) / r;
        const double s1 = static_cast<double>(t + 1 - k * r) / r;
        const double v0 = samples[static_cast<std::size_t>(t)];
        const double v1 = samples[static_cast<std::size_t>(t) + 1];
        // φ_{k+1} rises from s0 to s1 on this interval, φ_k falls.
        const double pr0 = s0, pr1 = s1;
        const double pl0 = 1.0 - s0, pl1 = 1.0 - s1;
        b[static_cast<std::size_t>(k)] += dx / 6.0 * (2 * v0 * pl0 + v0 * pl1 + v1 * pl0 + 2 * v1 * pl1);
        b[static_cast<std::size_t>(k) + 1] += dx / 6.0 * (2 * v0 * pr0 + v0 * pr1 + v1 * pr0 + 2 * v1 * pr1);
    }

    // Tridiagonal Gram matrix of nodal hats, solved by the Thomas algorithm.
    std::vector<double> diag(static_cast<std::size_t>(n), 2.0 * H / 3.0);
    diag.front() = diag.back() = H / 3.0;
    const double off = H / 6.0;
    std::vector<double> cprime(static_cast<std::size_t>(n), 0.0);
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    cprime[0] = off / diag[0];
    x[0] = b[0] / diag[0];
    for (int i = 1; i < n; ++i) {
        const double m = diag[i] - off * cprime[i - 1];
        cprime[i] = off / m;
        x[i] = (b[i] - off * x[i - 1]) / m;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= cprime[i] * x[i + 1];

    Projection1D p;
    p.level = level;
    p.nodal = x;
    p.hierarchical = hierarchize(x, level);
    return p;
}

std::vector<double> sample_nodal(std::span<const double> nodal, int n_intervals)
{
    const int ncoarse = static_cast<int>(nodal.size()) - 1;
    if (ncoarse < 1 || n_intervals % ncoarse != 0) throw LevelError("sample_nodal: incompatible resolutions");
    const int r = n_intervals / ncoarse;
    std::vector<double> out(static_cast<std::size_t>(n_intervals) + 1);
    for (int t = 0; t <= n_intervals; ++t) {
        const int k = std::min(t / r, ncoarse - 1);
        const double s = static_cast<double>(t - k * r) / r;
        out[static_cast<std::size_t>(t)] = (1.0 - s) * nodal[static_cast<std::size_t>(k)] + s * nodal[static_cast<std::size_t>(k) + 1];
    }
    return out;
}

int max_edge_level(const GridHierarchy& g)
{
    int m = 0;
    for (int q = 2 * g.ratio(); q > 1; q >>= 1) ++m;
    return m;
}

std::vector<int> edge_node_positions(const CoarsePatch& patch, int level)
{
    check_level(level);
    std::vector<int> pos;
    for (const auto& s : patch.segments) {
        const int parts = std::min(1 << level, s.length);
        const int step = s.length / parts;
        for (int t = 0; t < parts; ++t) pos.push_back(s.first + t * step);
    }
    return pos;
}

EdgeSpace edge_space(const CoarsePatch& patch, int level, const GridHierarchy& g, EdgeBasisKind kind)
{
    check_level(level);
    if (level > max_edge_level(g)) {
        throw LevelError("edge_space: level " + std::to_string(level) + " exceeds the fine resolution (max " +
                         std::to_string(max_edge_level(g)) + " for ratio " + std::to_string(g.ratio()) + ")");
    }
    const int L = patch.loop_length();
    EdgeSpace space;
    space.patch = patch.node;
    space.level = level;
    space.kind = kind;

    auto add = [&](int peak, int back, int fwd, int lvl) {
        if (patch.dirichlet_mask[static_cast<std::size_t>(peak)]) return;
        EdgeFunction fn;
        fn.node_position = peak;
        fn.level = lvl;
        fn.values = loop_hat(L, peak, back, fwd);
        for (int t = 0; t < L; ++t) {
            if (patch.dirichlet_mask[static_cast<std::size_t>(t)]) fn.values[static_cast<std::size_t>(t)] = 0.0;
        }
        space.traces.push_back(std::move(fn));
    };

    if (kind == EdgeBasisKind::nodal) {
        const auto nodes = edge_node_positions(patch, level);
        const int n = static_cast<int>(nodes.size());
        for (int k = 0; k < n; ++k) {
            const int p = nodes[k];
            const int prev = nodes[(k + n - 1) % n];
            const int next = nodes[(k + 1) % n];
            const auto& seg = patch.segment_of(p);
            add(p, (p - prev + L) % L, (next - p + L) % L, introducing_level(p - seg.first, seg.length));
        }
    } else {
        const auto corners = patch.corner_positions();
        for (int c = 0; c < 4; ++c) {
            const int p = corners[c];
            add(p, (p - corners[(c + 3) % 4] + L) % L, (corners[(c + 1) % 4] - p + L) % L, 0);
        }
        for (int m = 1; m <= level; ++m) {
            for (const auto& s : patch.segments) {
                if ((1 << m) > s.length) continue;
                const int half = s.length >> m;
                for (int t = 1; t < (1 << m); t += 2) add(s.first + t * half, half, half, m);
            }
        }
    }
    return space;
}

}  // namespace wemsfem
