#pragma once

#include <cstddef>
#include <vector>

namespace driftmc {

/// Gauss-Legendre rule on the unit interval: integral_0^1 f ~ sum_k w_k f(a_k).
struct QuadratureRule {
    std::vector<double> abscissas;  // ascending, in (0, 1)
    std::vector<double> weights;    // sum to 1

    std::size_t size() const { return abscissas.size(); }
};

/// L-point Gauss-Legendre rule mapped to (0,1). Newton iteration on P_L.
QuadratureRule gauss_legendre(std::size_t nodes);

/// Gauss-Hermite rule for the standard normal weight: E f(Y) ~ sum_k w_k f(y_k),
/// Y ~ N(0,1). Golub-Welsch on the probabilists' Hermite recurrence.
struct NormalQuadrature {
    std::vector<double> points;
    std::vector<double> weights;
};
NormalQuadrature gauss_hermite(std::size_t nodes);

}  // namespace driftmc
