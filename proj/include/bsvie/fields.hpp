#pragma once

#include <cstddef>
#include <vector>

namespace bsvie {

// Process values on the time grid: [node][path][component].
struct NodeField {
    int nodes = 0;
    int paths = 0;
    int dim = 0;
    std::vector<double> data;

    NodeField() = default;
    NodeField(int nodes_, int paths_, int dim_)
        : nodes(nodes_), paths(paths_), dim(dim_),
          data(static_cast<std::size_t>(nodes_) * paths_ * dim_, 0.0) {}

    double* at(int node, int path) {
        return data.data() + (static_cast<std::size_t>(node) * paths + path) * dim;
    }
    const double* at(int node, int path) const {
        return data.data() + (static_cast<std::size_t>(node) * paths + path) * dim;
    }
    double* node_block(int node) { return data.data() + static_cast<std::size_t>(node) * paths * dim; }
    const double* node_block(int node) const {
        return data.data() + static_cast<std::size_t>(node) * paths * dim;
    }
};

// Two-parameter family values: [s_node][t_node][path][component].
// The s-grid equals the t-grid, so diagonals are grid-aligned reads.
struct FamilyField {
    int snodes = 0;
    int nodes = 0;
    int paths = 0;
    int dim = 0;
    std::vector<double> data;

    FamilyField() = default;
    FamilyField(int snodes_, int nodes_, int paths_, int dim_)
        : snodes(snodes_), nodes(nodes_), paths(paths_), dim(dim_),
          data(static_cast<std::size_t>(snodes_) * nodes_ * paths_ * dim_, 0.0) {}

    double* at(int s, int node, int path) {
        return data.data() +
               ((static_cast<std::size_t>(s) * nodes + node) * paths + path) * dim;
    }
    const double* at(int s, int node, int path) const {
        return data.data() +
               ((static_cast<std::size_t>(s) * nodes + node) * paths + path) * dim;
    }
    bool empty() const { return data.empty(); }
};

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > m) m = d;
    }
    return m;
}

}  // namespace bsvie
