#pragma once

#include <Eigen/Dense>

namespace fpca::smoother {

// Equispaced evaluation grid on [0,1] with trapezoid quadrature weights.
// Weights sum to one, so <f,g>_w approximates the L2 inner product on [0,1].
struct Grid {
    int G = 0;
    Eigen::VectorXd points;
    Eigen::VectorXd weights;

    static Grid uniform(int G);

    double spacing() const { return points.size() > 1 ? points[1] - points[0] : 0.0; }

    // Weighted inner product of two grid functions.
    double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

    // Weighted squared L2 norm.
    double norm2(const Eigen::VectorXd& f) const { return inner(f, f); }
};

} // namespace fpca::smoother
