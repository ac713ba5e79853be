#include "fpca/grid.hpp"

#include <stdexcept>

namespace fpca::smoother {

Grid Grid::uniform(int G) {
    if (G < 2) throw std::invalid_argument("Grid: G must be >= 2");
    Grid g;
    g.G = G;
    g.points.resize(G);
    g.weights.resize(G);
    const double dx = 1.0 / static_cast<double>(G - 1);
    for (int i = 0; i < G; ++i) {
        g.points[i] = static_cast<double>(i) * dx;
        g.weights[i] = dx;
    }
    g.points[G - 1] = 1.0;
    g.weights[0] = 0.5 * dx;
    g.weights[G - 1] = 0.5 * dx;
    return g;
}

double Grid::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    if (f.size() != G || g.size() != G)
        throw std::invalid_argument("Grid::inner: size mismatch with grid");
    return (f.array() * g.array() * weights.array()).sum();
}

} // namespace fpca::smoother
