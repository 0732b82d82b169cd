#pragma once

#include <vector>

#include "bsvie/common.hpp"

namespace bsvie {

// Partition 0 = t_0 < ... < t_N = T. Nonuniform nodes are admitted by the
// type; v1 construction is uniform only.
struct TimeGrid {
    double horizon = 0.0;
    std::vector<double> nodes;  // size N+1
    std::vector<double> steps;  // size N, steps[i] = nodes[i+1] - nodes[i]

    int num_steps() const { return static_cast<int>(steps.size()); }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    double t(int i) const { return nodes[static_cast<std::size_t>(i)]; }
    double dt(int i) const { return steps[static_cast<std::size_t>(i)]; }
};

TimeGrid build_grid(double horizon, int n_steps);

}  // namespace bsvie
