#include "driftmc/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace driftmc {

QuadratureRule gauss_legendre(std::size_t nodes) {
    if (nodes == 0) throw std::invalid_argument("gauss_legendre: need at least one node");

    const std::size_t n = nodes;
    QuadratureRule rule;
    rule.abscissas.resize(n);
    rule.weights.resize(n);

    // Roots are symmetric; solve for the upper half on [-1,1].
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            // P_n'(z) = n (z P_n - P_{n-1}) / (z^2 - 1)
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // Recompute derivative at the converged root.
        double p0 = 1.0;
        double p1 = z;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);

        // z is the i-th largest root; map x -> (1 + x)/2.
        rule.abscissas[n - 1 - i] = 0.5 * (1.0 + z);
        rule.abscissas[i] = 0.5 * (1.0 - z);
        rule.weights[n - 1 - i] = 0.5 * w;
        rule.weights[i] = 0.5 * w;
    }
    if (n % 2 == 1) rule.abscissas[n / 2] = 0.5;
    return rule;
}

NormalQuadrature gauss_hermite(std::size_t nodes) {
    if (nodes == 0) throw std::invalid_argument("gauss_hermite: need at least one node");
    const auto n = static_cast<Eigen::Index>(nodes);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    NormalQuadrature q;
    q.points.resize(nodes);
    q.weights.resize(nodes);
    for (Eigen::Index k = 0; k < n; ++k) {
        q.points[k] = solver.eigenvalues()(k);
        const double v0 = solver.eigenvectors()(0, k);
        q.weights[k] = v0 * v0;
    }
    return q;
}

}  // namespace driftmc
