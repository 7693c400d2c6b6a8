#include "wemsfem/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wemsfem {

namespace {

constexpr double pi = std::numbers::pi;

ScalarField unit_force()
{
    return [](double, double) { return 1.0; };
}

ScalarField constant(double v)
{
    return [v](double, double) { return v; };
}

}  // namespace

const std::vector<std::string>& example_ids()
{
    static const std::vector<std::string> ids{"1a", "1b", "2", "3", "4a", "4b"};
    return ids;
}

ProblemSpec make_problem(const std::string& id, std::optional<double> epsilon)
{
    if (epsilon && !(*epsilon > 0.0)) throw CatalogError("epsilon must be positive");
    ProblemSpec s;
    s.id = id;
    s.coeffs.force = unit_force();
    if (id == "1a" || id == "1b") {
        s.epsilon = epsilon.value_or(1e-2);
        s.beta = id == "1a" ? 2.0 : 8.0;
        s.k = id == "1a" ? 24.0 : 48.0;
        const double beta = s.beta;
        const double kp = s.k * pi;
        s.coeffs.diffusion = constant(s.epsilon);
        s.coeffs.velocity = [beta, kp](double x, double y) -> std::array<double, 2> {
            return {beta * std::sin(kp * x) * std::cos(kp * y), -beta * std::cos(kp * x) * std::sin(kp * y)};
        };
    } else if (id == "2") {
        s.epsilon = epsilon.value_or(1e-3);
        s.coeffs.diffusion = constant(s.epsilon);
        // b = (−∂g/∂y, ∂g/∂x) for g = sin(5πx) sin(6πy)/(60π) + (x + y)/200.
        s.coeffs.velocity = [](double x, double y) -> std::array<double, 2> {
            const double gx = std::cos(5 * pi * x) * std::sin(6 * pi * y) / 12.0 + 0.005;
            const double gy = std::sin(5 * pi * x) * std::cos(6 * pi * y) / 10.0 + 0.005;
            return {-gy, gx};
        };
    } else if (id == "3") {
        s.epsilon = epsilon.value_or(1.0);
        s.coeffs.diffusion = constant(s.epsilon);
        s.coeffs.velocity = [](double, double y) -> std::array<double, 2> {
            return {200.0 * std::sin(48 * pi * y), 0.0};
        };
    } else if (id == "4a" || id == "4b") {
        s.epsilon = epsilon.value_or(1.0 / 128.0);
        s.eps1 = id == "4a" ? 1.0 : 1.0 / 64.0;
        const double eps = s.epsilon;
        const double w = 2 * pi / s.eps1;
        s.coeffs.diffusion = [eps, w](double x, double) { return eps * (1.0 + 0.5 * std::cos(w * x)); };
        s.coeffs.velocity = [](double, double) -> std::array<double, 2> { return {1.0, 1.0}; };
    } else {
        throw CatalogError("unknown example '" + id + "' (expected 1a, 1b, 2, 3, 4a or 4b)");
    }
    s.coeffs.epsilon = s.epsilon;
    return s;
}

double velocity_max_component(const ProblemSpec& spec, int samples)
{
    if (samples < 1) throw CatalogError("velocity_max_component: need at least one interval");
    double m = 0.0;
    for (int j = 0; j <= samples; ++j) {
        const double y = static_cast<double>(j) / samples;
        for (int i = 0; i <= samples; ++i) {
            const auto b = spec.coeffs.velocity(static_cast<double>(i) / samples, y);
            m = std::max({m, std::abs(b[0]), std::abs(b[1])});
        }
    }
    return m;
}

}  // namespace wemsfem
