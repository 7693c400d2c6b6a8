#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wemsfem/fem.hpp"

namespace wemsfem {

class CatalogError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One benchmark problem on the unit square with homogeneous Dirichlet data.
struct ProblemSpec {
    std::string id;         ///< 1a, 1b, 2, 3, 4a or 4b
    double epsilon = 1.0;   ///< perturbation scalar ε
    double beta = 0.0;      ///< Example 1 amplitude
    double k = 0.0;         ///< Example 1 frequency
    double eps1 = 0.0;      ///< Example 4 oscillation scale
    ProblemCoefficients coeffs;
};

/// Ids accepted by make_problem, in catalog order.
const std::vector<std::string>& example_ids();

/// Builds a catalog problem. `epsilon` replaces the default ε (and rescales the
/// diffusion accordingly); it is how the Péclet sweep varies the problem.
ProblemSpec make_problem(const std::string& id, std::optional<double> epsilon = std::nullopt);

/// Max over a uniform sample grid of max(|b₁|, |b₂|). The default 2400 intervals
/// contain the extremal points of every catalog velocity.
double velocity_max_component(const ProblemSpec& spec, int samples = 2400);

}  // namespace wemsfem
