#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bsvie/grid.hpp"

namespace bsvie {

// Volatility functional sigma(t_i, path prefix) -> R^{n x m}, row-major.
// `prefix` points at the simulated states X[p][0..node] (node+1 states of
// dimension n, contiguous); the evaluation must not look past the prefix.
using SigmaSpec = std::function<void(int node, double t, const double* prefix, int n_states, double* out)>;

// Immutable after construction; shared freely across threads.
struct PathEnsemble {
    int n_paths = 0;
    int dim_state = 0;     // n
    int dim_brownian = 0;  // m
    std::uint64_t seed = 0;
    std::vector<double> x0;
    TimeGrid grid;

    std::vector<double> states;      // [path][node][k], (N+1)*n per path
    std::vector<double> increments;  // [path][interval][k], N*m per path
    std::vector<double> sigma;       // [path][interval][k*m + l], N*n*m per path

    const double* state(int path, int node) const {
        return states.data() + (static_cast<std::size_t>(path) * grid.num_nodes() + node) * dim_state;
    }
    const double* path_prefix(int path) const {
        return states.data() + static_cast<std::size_t>(path) * grid.num_nodes() * dim_state;
    }
    const double* db(int path, int interval) const {
        return increments.data() + (static_cast<std::size_t>(path) * grid.num_steps() + interval) * dim_brownian;
    }
    const double* sigma_at(int path, int interval) const {
        return sigma.data() +
               (static_cast<std::size_t>(path) * grid.num_steps() + interval) *
                   (static_cast<std::size_t>(dim_state) * dim_brownian);
    }
};

// Euler scheme for the driftless forward martingale:
// X[p][i+1] = X[p][i] + sigma(t_i, X[p][0..i]) * dB[p][i].
PathEnsemble simulate_forward(const SigmaSpec& sigma_spec, const std::vector<double>& x0, const TimeGrid& grid,
                              int n_paths, std::uint64_t seed, int dim_brownian);

// Exhaustive two-point ensemble: 2^N equiprobable paths, dB_i = ±sqrt(dt_i),
// the sign of increment i for path p being bit i of p. Scalar Brownian.
PathEnsemble make_tree_ensemble(const SigmaSpec& sigma_spec, const std::vector<double>& x0, const TimeGrid& grid);

// Columns: path,node,time,X_0..X_{n-1}.
void dump_ensemble_csv(const PathEnsemble& ens, std::ostream& os);

SigmaSpec constant_sigma(double value, int n = 1, int m = 1);

}  // namespace bsvie
