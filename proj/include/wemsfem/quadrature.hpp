#pragma once

#include <vector>

namespace wemsfem {

/// Gauss-Legendre rule on [0, 1] with `order` points (exact for degree 2·order − 1).
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

}  // namespace wemsfem
