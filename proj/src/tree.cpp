#include "bsvie/tree.hpp"

#include <cmath>
#include <cstring>

#include "bsvie/common.hpp"

namespace bsvie {

void tree_condexp(const PathEnsemble& ens, const double* values, int dim, int node, double* out) {
    const int P = ens.n_paths;
    const int groups = 1 << node;
    require(P % groups == 0, "tree_condexp: ensemble is not an exhaustive tree");
    std::vector<double> sum(static_cast<std::size_t>(groups) * dim, 0.0);
    for (int p = 0; p < P; ++p) {
        const int g = p & (groups - 1);
        for (int l = 0; l < dim; ++l) sum[static_cast<std::size_t>(g) * dim + l] += values[static_cast<std::size_t>(p) * dim + l];
    }
    const double inv = static_cast<double>(groups) / P;
    for (int p = 0; p < P; ++p) {
        const int g = p & (groups - 1);
        for (int l = 0; l < dim; ++l) out[static_cast<std::size_t>(p) * dim + l] = sum[static_cast<std::size_t>(g) * dim + l] * inv;
    }
}

namespace {

// One exact backward recursion mirroring the explicit sweep: proxy-evaluated
// driver, increment-extracted martingale aggregate, left-point integration.
// f_at(ctx, proxy, zeta, out) supplies the node generator.
void exact_sweep(const PathEnsemble& ens, const std::vector<double>& terminal, int dim,
                 const std::function<void(const PathContext&, const double*, const double*, double*)>& f_at,
                 NodeField& y, NodeField& zeta) {
    const TimeGrid& grid = ens.grid;
    const int N = grid.num_steps();
    const int P = ens.n_paths;
    const int m = ens.dim_brownian;
    y = NodeField(N + 1, P, dim);
    zeta = NodeField(N + 1, P, m * dim);
    std::memcpy(y.node_block(N), terminal.data(), terminal.size() * sizeof(double));

    std::vector<double> proxy(static_cast<std::size_t>(P) * dim);
    std::vector<double> incr(static_cast<std::size_t>(P) * m * dim);
    std::vector<double> f(static_cast<std::size_t>(dim));
    for (int i = N - 1; i >= 0; --i) {
        const double dt = grid.dt(i);
        const double* ynext = y.node_block(i + 1);
        tree_condexp(ens, ynext, dim, i, proxy.data());
        for (int p = 0; p < P; ++p) {
            const double* db = ens.db(p, i);
            for (int l = 0; l < dim; ++l)
                for (int k = 0; k < m; ++k)
                    incr[(static_cast<std::size_t>(p) * dim + l) * m + k] =
                        db[k] * (ynext[static_cast<std::size_t>(p) * dim + l] - proxy[static_cast<std::size_t>(p) * dim + l]) / dt;
        }
        tree_condexp(ens, incr.data(), m * dim, i, zeta.node_block(i));
        PathContext ctx{&ens, i, 0, grid.t(i)};
        for (int p = 0; p < P; ++p) {
            ctx.path = p;
            f_at(ctx, proxy.data() + static_cast<std::size_t>(p) * dim, zeta.at(i, p), f.data());
            for (int l = 0; l < dim; ++l)
                y.at(i, p)[l] = proxy[static_cast<std::size_t>(p) * dim + l] + dt * f[static_cast<std::size_t>(l)];
        }
    }
}

double blend_max_change(std::vector<double>& dst, const std::vector<double>& src, double damping) {
    double change = 0.0;
    for (std::size_t k = 0; k < dst.size(); ++k) {
        change = std::max(change, std::abs(src[k] - dst[k]));
        dst[k] += damping * (src[k] - dst[k]);
    }
    return change;
}

}  // namespace

TreeSolveResult tree_solve_system(const SystemSpec& spec, const PathEnsemble& tree_ens, double tol,
                                  int max_iter, double damping) {
    const PathEnsemble& ens = tree_ens;
    const TimeGrid& grid = ens.grid;
    const int N = grid.num_steps();
    const int P = ens.n_paths;
    require(P == (1 << N), "tree_solve_system: needs an exhaustive two-point tree ensemble");

    TreeSolveResult res;
    SystemSolution cur = zero_iterate(spec, ens);

    std::vector<double> term_y(static_cast<std::size_t>(P) * spec.d1);
    {
        PathContext ctx{&ens, N, 0, grid.t(N)};
        for (int p = 0; p < P; ++p) {
            ctx.path = p;
            spec.xi(ctx, term_y.data() + static_cast<std::size_t>(p) * spec.d1);
        }
    }

    for (int it = 1; it <= max_iter; ++it) {
        SystemSolution next = zero_iterate(spec, ens);
        std::vector<double> term(static_cast<std::size_t>(P) * spec.d2);
        NodeField fy, fz;

        for (int s = 0; s <= N; ++s) {
            const double sval = grid.t(s);
            PathContext tctx{&ens, N, 0, grid.t(N)};
            for (int p = 0; p < P; ++p) {
                tctx.path = p;
                spec.eta(s, sval, tctx, term.data() + static_cast<std::size_t>(p) * spec.d2);
            }
            exact_sweep(ens, term, spec.d2,
                        [&](const PathContext& ctx, const double* proxy, const double*, double* out) {
                            spec.g(s, sval, ctx, proxy, cur.V.at(s, ctx.node, ctx.path),
                                   cur.calY.at(ctx.node, ctx.path), cur.calZ.at(ctx.node, ctx.path), out);
                        },
                        fy, fz);
            for (int i = 0; i <= N; ++i)
                for (int p = 0; p < P; ++p) {
                    std::memcpy(next.U.at(s, i, p), fy.at(i, p), sizeof(double) * static_cast<std::size_t>(spec.d2));
                    std::memcpy(next.V.at(s, i, p), fz.at(i, p),
                                sizeof(double) * static_cast<std::size_t>(ens.dim_brownian * spec.d2));
                }
        }

        for (int s = 0; s <= N; ++s) {
            const double sval = grid.t(s);
            PathContext tctx{&ens, N, 0, grid.t(N)};
            for (int p = 0; p < P; ++p) {
                tctx.path = p;
                spec.d_eta(s, sval, tctx, term.data() + static_cast<std::size_t>(p) * spec.d2);
            }
            exact_sweep(ens, term, spec.d2,
                        [&](const PathContext& ctx, const double* proxy, const double*, double* out) {
                            spec.grad_g(s, sval, ctx, proxy, cur.dV.at(s, ctx.node, ctx.path),
                                        next.U.at(s, ctx.node, ctx.path), cur.V.at(s, ctx.node, ctx.path),
                                        cur.calY.at(ctx.node, ctx.path), cur.calZ.at(ctx.node, ctx.path), out);
                        },
                        fy, fz);
            for (int i = 0; i <= N; ++i)
                for (int p = 0; p < P; ++p) {
                    std::memcpy(next.dU.at(s, i, p), fy.at(i, p), sizeof(double) * static_cast<std::size_t>(spec.d2));
                    std::memcpy(next.dV.at(s, i, p), fz.at(i, p),
                                sizeof(double) * static_cast<std::size_t>(ens.dim_brownian * spec.d2));
                }
        }

        // Diagonals of the new families; the z-diagonal is reconstructed.
        for (int i = 0; i <= N; ++i)
            for (int p = 0; p < P; ++p) {
                std::memcpy(next.diagU.at(i, p), next.U.at(i, i, p), sizeof(double) * static_cast<std::size_t>(spec.d2));
                std::memcpy(next.diagdU.at(i, p), next.dU.at(i, i, p), sizeof(double) * static_cast<std::size_t>(spec.d2));
                reconstructed_slice(next.V, next.dV, grid, i, i, p, next.diagV.at(i, p));
            }

        exact_sweep(ens, term_y, spec.d1,
                    [&](const PathContext& ctx, const double* proxy, const double*, double* out) {
                        spec.h(ctx, proxy, cur.calZ.at(ctx.node, ctx.path), next.diagU.at(ctx.node, ctx.path),
                               cur.diagV.at(ctx.node, ctx.path), next.diagdU.at(ctx.node, ctx.path), out);
                    },
                    fy, fz);
        next.calY = std::move(fy);
        next.calZ = std::move(fz);

        double change = 0.0;
        change = std::max(change, blend_max_change(cur.calY.data, next.calY.data, damping));
        change = std::max(change, blend_max_change(cur.calZ.data, next.calZ.data, damping));
        change = std::max(change, blend_max_change(cur.U.data, next.U.data, damping));
        change = std::max(change, blend_max_change(cur.V.data, next.V.data, damping));
        change = std::max(change, blend_max_change(cur.dU.data, next.dU.data, damping));
        change = std::max(change, blend_max_change(cur.dV.data, next.dV.data, damping));
        change = std::max(change, blend_max_change(cur.diagU.data, next.diagU.data, damping));
        change = std::max(change, blend_max_change(cur.diagV.data, next.diagV.data, damping));
        change = std::max(change, blend_max_change(cur.diagdU.data, next.diagdU.data, damping));

        res.iterations = it;
        res.final_change = change;
        if (change < tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged)
        throw NumericError("tree_solve_system: damped fixed point did not reach tolerance (last change " +
                           std::to_string(res.final_change) + ")");
    res.solution = std::move(cur);
    return res;
}

}  // namespace bsvie
