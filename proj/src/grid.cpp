#include "bsvie/grid.hpp"

namespace bsvie {

TimeGrid build_grid(double horizon, int n_steps) {
    require(horizon > 0.0, "build_grid: horizon must be positive");
    require(n_steps >= 1, "build_grid: need at least one step");
    TimeGrid g;
    g.horizon = horizon;
    g.nodes.resize(static_cast<std::size_t>(n_steps) + 1);
    g.steps.assign(static_cast<std::size_t>(n_steps), horizon / n_steps);
    for (int i = 0; i <= n_steps; ++i)
        g.nodes[static_cast<std::size_t>(i)] = horizon * i / n_steps;
    g.nodes.back() = horizon;
    return g;
}

}  // namespace bsvie
