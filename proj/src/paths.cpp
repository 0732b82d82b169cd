#include "bsvie/paths.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "bsvie/common.hpp"
#include "bsvie/rng.hpp"
#include "bsvie/threading.hpp"

namespace bsvie {

namespace {
void check_finite(const double* v, int count, int node, int path) {
    for (int k = 0; k < count; ++k)
        if (!std::isfinite(v[k]))
            throw NumericError("simulate_forward: non-finite sigma at node " + std::to_string(node) +
                               ", path " + std::to_string(path));
}
}  // namespace

PathEnsemble simulate_forward(const SigmaSpec& sigma_spec, const std::vector<double>& x0, const TimeGrid& grid,
                              int n_paths, std::uint64_t seed, int dim_brownian) {
    require(n_paths >= 1, "simulate_forward: n_paths must be >= 1");
    require(!x0.empty(), "simulate_forward: empty initial state");
    require(dim_brownian >= 1, "simulate_forward: dim_brownian must be >= 1");

    const int n = static_cast<int>(x0.size());
    const int m = dim_brownian;
    const int N = grid.num_steps();

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.dim_state = n;
    ens.dim_brownian = m;
    ens.seed = seed;
    ens.x0 = x0;
    ens.grid = grid;
    ens.states.resize(static_cast<std::size_t>(n_paths) * (N + 1) * n);
    ens.increments.resize(static_cast<std::size_t>(n_paths) * N * m);
    ens.sigma.resize(static_cast<std::size_t>(n_paths) * N * n * m);

    const NormalStream normals(seed);

    parallel_for(n_paths, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> z(static_cast<std::size_t>(m));
        for (std::int64_t p = lo; p < hi; ++p) {
            double* xp = ens.states.data() + static_cast<std::size_t>(p) * (N + 1) * n;
            for (int k = 0; k < n; ++k) xp[k] = x0[static_cast<std::size_t>(k)];
            for (int i = 0; i < N; ++i) {
                const double dt = grid.dt(i);
                const double sq = std::sqrt(dt);
                normals.fill(static_cast<std::uint64_t>(p), static_cast<std::uint32_t>(i), m, z.data());
                double* db = ens.increments.data() + (static_cast<std::size_t>(p) * N + i) * m;
                for (int k = 0; k < m; ++k) db[k] = sq * z[static_cast<std::size_t>(k)];

                double* sg = ens.sigma.data() + (static_cast<std::size_t>(p) * N + i) * (n * m);
                sigma_spec(i, grid.t(i), xp, i + 1, sg);
                check_finite(sg, n * m, i, static_cast<int>(p));

                const double* xi = xp + static_cast<std::size_t>(i) * n;
                double* xn = xp + static_cast<std::size_t>(i + 1) * n;
                for (int k = 0; k < n; ++k) {
                    double acc = xi[k];
                    for (int l = 0; l < m; ++l) acc += sg[k * m + l] * db[l];
                    xn[k] = acc;
                }
            }
        }
    });
    return ens;
}

PathEnsemble make_tree_ensemble(const SigmaSpec& sigma_spec, const std::vector<double>& x0, const TimeGrid& grid) {
    const int N = grid.num_steps();
    require(N <= 20, "make_tree_ensemble: tree too deep");
    const int P = 1 << N;
    const int n = static_cast<int>(x0.size());

    PathEnsemble ens;
    ens.n_paths = P;
    ens.dim_state = n;
    ens.dim_brownian = 1;
    ens.seed = 0;
    ens.x0 = x0;
    ens.grid = grid;
    ens.states.resize(static_cast<std::size_t>(P) * (N + 1) * n);
    ens.increments.resize(static_cast<std::size_t>(P) * N);
    ens.sigma.resize(static_cast<std::size_t>(P) * N * n);

    for (int p = 0; p < P; ++p) {
        double* xp = ens.states.data() + static_cast<std::size_t>(p) * (N + 1) * n;
        for (int k = 0; k < n; ++k) xp[k] = x0[static_cast<std::size_t>(k)];
        for (int i = 0; i < N; ++i) {
            const double db = ((p >> i) & 1) ? std::sqrt(grid.dt(i)) : -std::sqrt(grid.dt(i));
            ens.increments[static_cast<std::size_t>(p) * N + i] = db;
            double* sg = ens.sigma.data() + (static_cast<std::size_t>(p) * N + i) * n;
            sigma_spec(i, grid.t(i), xp, i + 1, sg);
            check_finite(sg, n, i, p);
            const double* xi = xp + static_cast<std::size_t>(i) * n;
            double* xn = xp + static_cast<std::size_t>(i + 1) * n;
            for (int k = 0; k < n; ++k) xn[k] = xi[k] + sg[k] * db;
        }
    }
    return ens;
}

void dump_ensemble_csv(const PathEnsemble& ens, std::ostream& os) {
    os << "path,node,time";
    for (int k = 0; k < ens.dim_state; ++k) os << ",X_" << k;
    os << "\n";
    char buf[64];
    for (int p = 0; p < ens.n_paths; ++p) {
        for (int i = 0; i < ens.grid.num_nodes(); ++i) {
            os << p << ',' << i << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", ens.grid.t(i));
            os << buf;
            const double* x = ens.state(p, i);
            for (int k = 0; k < ens.dim_state; ++k) {
                std::snprintf(buf, sizeof(buf), "%.17g", x[k]);
                os << ',' << buf;
            }
            os << "\n";
        }
    }
}

SigmaSpec constant_sigma(double value, int n, int m) {
    return [value, n, m](int, double, const double*, int, double* out) {
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < m; ++l) out[k * m + l] = (k == l) ? value : 0.0;
    };
}

}  // namespace bsvie
