#include "bsvie/bsde.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "bsvie/common.hpp"
#include "bsvie/threading.hpp"

namespace bsvie {

BsdeSlice backward_sweep(const std::vector<double>& terminal, int dim, const Driver& driver,
                         const RegressionCache& reg, Scheme scheme) {
    const PathEnsemble& ens = reg.ensemble();
    const TimeGrid& grid = ens.grid;
    const int P = ens.n_paths;
    const int N = grid.num_steps();
    const int m = ens.dim_brownian;
    require(static_cast<int>(terminal.size()) == P * dim, "backward_sweep: terminal size mismatch");

    BsdeSlice slice;
    slice.y = NodeField(N + 1, P, dim);
    slice.zeta = NodeField(N + 1, P, m * dim);
    std::memcpy(slice.y.node_block(N), terminal.data(), terminal.size() * sizeof(double));

    std::vector<double> proxy(static_cast<std::size_t>(P) * dim);
    std::vector<double> incr(static_cast<std::size_t>(P) * m * dim);

    for (int i = N - 1; i >= 0; --i) {
        const double dt = grid.dt(i);
        const double* ynext = slice.y.node_block(i + 1);

        reg.condexp(ynext, dim, i, proxy.data());

        // sigma^T Z via increment regression against the martingale part.
        parallel_for(P, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t p = lo; p < hi; ++p) {
                const double* db = ens.db(static_cast<int>(p), i);
                const double* yv = ynext + p * dim;
                const double* pv = proxy.data() + p * dim;
                double* out = incr.data() + p * (m * dim);
                for (int l = 0; l < dim; ++l)
                    for (int k = 0; k < m; ++k) out[l * m + k] = db[k] * (yv[l] - pv[l]) / dt;
            }
        });
        reg.condexp(incr.data(), m * dim, i, slice.zeta.node_block(i));

        double* ycur = slice.y.node_block(i);
        const double* zeta = slice.zeta.node_block(i);
        if (scheme == Scheme::Explicit) {
            parallel_for(P, [&](std::int64_t lo, std::int64_t hi) {
                std::vector<double> f(static_cast<std::size_t>(dim));
                PathContext ctx{&ens, i, 0, grid.t(i)};
                for (std::int64_t p = lo; p < hi; ++p) {
                    ctx.path = static_cast<int>(p);
                    const double* pv = proxy.data() + p * dim;
                    driver(ctx, pv, zeta + p * (m * dim), f.data());
                    for (int l = 0; l < dim; ++l) ycur[p * dim + l] = pv[l] + dt * f[static_cast<std::size_t>(l)];
                }
            });
        } else {
            std::vector<double> worst(kChunks, 0.0);
            parallel_chunks(P, [&](int c, std::int64_t lo, std::int64_t hi) {
                std::vector<double> f(static_cast<std::size_t>(dim)), ycand(static_cast<std::size_t>(dim));
                PathContext ctx{&ens, i, 0, grid.t(i)};
                for (std::int64_t p = lo; p < hi; ++p) {
                    ctx.path = static_cast<int>(p);
                    const double* pv = proxy.data() + p * dim;
                    const double* zv = zeta + p * (m * dim);
                    for (int l = 0; l < dim; ++l) ycand[static_cast<std::size_t>(l)] = pv[l];
                    double res = 0.0, prev_res = 1e300, omega = 1.0;
                    bool done = false;
                    for (int it = 0; it < 50; ++it) {
                        driver(ctx, ycand.data(), zv, f.data());
                        res = 0.0;
                        for (int l = 0; l < dim; ++l) {
                            const double target = pv[l] + dt * f[static_cast<std::size_t>(l)];
                            res = std::max(res, std::abs(target - ycand[static_cast<std::size_t>(l)]));
                            ycand[static_cast<std::size_t>(l)] += omega * (target - ycand[static_cast<std::size_t>(l)]);
                        }
                        if (res < 1e-12) {
                            done = true;
                            break;
                        }
                        if (res > prev_res) omega = std::max(0.125, omega * 0.5);
                        prev_res = res;
                    }
                    if (!done) worst[static_cast<std::size_t>(c)] = std::max(worst[static_cast<std::size_t>(c)], res);
                    for (int l = 0; l < dim; ++l) ycur[p * dim + l] = ycand[static_cast<std::size_t>(l)];
                }
            });
            double bad = 0.0;
            for (double w : worst) bad = std::max(bad, w);
            if (bad > 0.0)
                throw NumericError("backward_sweep: implicit step did not converge at node " + std::to_string(i) +
                                   " (residual " + std::to_string(bad) + ")");
        }
    }
    return slice;
}

}  // namespace bsvie
