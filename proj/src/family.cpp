#include "bsvie/family.hpp"

#include <cmath>
#include <random>

#include "bsvie/common.hpp"

namespace bsvie {

namespace {
std::vector<double> eval_family_terminal(const FamilyTerminal& eta, int s_node, double s,
                                         const PathEnsemble& ens, int dim) {
    const int P = ens.n_paths;
    const int N = ens.grid.num_steps();
    std::vector<double> term(static_cast<std::size_t>(P) * dim);
    PathContext ctx{&ens, N, 0, ens.grid.t(N)};
    for (int p = 0; p < P; ++p) {
        ctx.path = p;
        eta(s_node, s, ctx, term.data() + static_cast<std::size_t>(p) * dim);
    }
    return term;
}

inline const double* frozen_at(const NodeField* f, int node, int path, const double* zeros) {
    return f ? f->at(node, path) : zeros;
}
}  // namespace

FamilyField2 solve_family(const FamilyTerminal& eta, const FamilyDriver& g, const FrozenPair& frozen,
                          const RegressionCache& reg, int dim, Scheme scheme) {
    const PathEnsemble& ens = reg.ensemble();
    const TimeGrid& grid = ens.grid;
    const int N = grid.num_steps();
    const int P = ens.n_paths;
    const int m = ens.dim_brownian;
    const int dim_y = frozen.y ? frozen.y->dim : dim;

    FamilyField2 out;
    out.u = FamilyField(N + 1, N + 1, P, dim);
    out.v = FamilyField(N + 1, N + 1, P, m * dim);

    const std::vector<double> zeros(static_cast<std::size_t>(std::max(dim_y, m * dim_y)) * 2, 0.0);

    for (int j = 0; j <= N; ++j) {
        const double s = grid.t(j);
        Driver drv = [&, j, s](const PathContext& ctx, const double* u, const double* zeta, double* res) {
            g(j, s, ctx, u, zeta, frozen_at(frozen.y, ctx.node, ctx.path, zeros.data()),
              frozen_at(frozen.z, ctx.node, ctx.path, zeros.data()), res);
        };
        BsdeSlice slice;
        try {
            slice = backward_sweep(eval_family_terminal(eta, j, s, ens, dim), dim, drv, reg, scheme);
        } catch (const NumericError& e) {
            throw NumericError("solve_family: s-node " + std::to_string(j) + ": " + e.what());
        }
        std::copy(slice.y.data.begin(), slice.y.data.end(),
                  out.u.data.begin() + static_cast<std::size_t>(j) * slice.y.data.size());
        std::copy(slice.zeta.data.begin(), slice.zeta.data.end(),
                  out.v.data.begin() + static_cast<std::size_t>(j) * slice.zeta.data.size());
    }
    return out;
}

FamilyField2 solve_grad_family(const FamilyTerminal& d_eta, const GradFamilyDriver& grad_g,
                               const FamilyField2& solved, const FrozenPair& frozen,
                               const RegressionCache& reg, int dim, Scheme scheme) {
    const PathEnsemble& ens = reg.ensemble();
    const TimeGrid& grid = ens.grid;
    const int N = grid.num_steps();
    const int P = ens.n_paths;
    const int m = ens.dim_brownian;
    const int dim_y = frozen.y ? frozen.y->dim : dim;

    FamilyField2 out;
    out.u = FamilyField(N + 1, N + 1, P, dim);
    out.v = FamilyField(N + 1, N + 1, P, m * dim);

    const std::vector<double> zeros(static_cast<std::size_t>(std::max(dim_y, m * dim_y)) * 2, 0.0);

    for (int j = 0; j <= N; ++j) {
        const double s = grid.t(j);
        Driver drv = [&, j, s](const PathContext& ctx, const double* du, const double* dzeta, double* res) {
            grad_g(j, s, ctx, du, dzeta, solved.u.at(j, ctx.node, ctx.path), solved.v.at(j, ctx.node, ctx.path),
                   frozen_at(frozen.y, ctx.node, ctx.path, zeros.data()),
                   frozen_at(frozen.z, ctx.node, ctx.path, zeros.data()), res);
        };
        BsdeSlice slice;
        try {
            slice = backward_sweep(eval_family_terminal(d_eta, j, s, ens, dim), dim, drv, reg, scheme);
        } catch (const NumericError& e) {
            throw NumericError("solve_grad_family: s-node " + std::to_string(j) + ": " + e.what());
        }
        std::copy(slice.y.data.begin(), slice.y.data.end(),
                  out.u.data.begin() + static_cast<std::size_t>(j) * slice.y.data.size());
        std::copy(slice.zeta.data.begin(), slice.zeta.data.end(),
                  out.v.data.begin() + static_cast<std::size_t>(j) * slice.zeta.data.size());
    }
    return out;
}

void reconstructed_slice(const FamilyField& v, const FamilyField& dv, const TimeGrid& grid, int s_node,
                         int t_node, int path, double* out) {
    const int N = grid.num_steps();
    const int dim = v.dim;
    const double* top = v.at(N, t_node, path);
    for (int l = 0; l < dim; ++l) out[l] = top[l];
    for (int j = s_node; j < N; ++j) {
        const double* d = dv.at(j, t_node, path);
        const double dt = grid.dt(j);
        for (int l = 0; l < dim; ++l) out[l] -= d[l] * dt;
    }
}

void reconstruct_diagonals(FamilyField2& fields, const FamilyField* dv, const TimeGrid& grid) {
    const int N = grid.num_steps();
    const int P = fields.u.paths;
    const int du_dim = fields.u.dim;
    const int dv_dim = fields.v.dim;
    fields.diag_u = NodeField(N + 1, P, du_dim);
    fields.diag_v = NodeField(N + 1, P, dv_dim);
    for (int i = 0; i <= N; ++i) {
        for (int p = 0; p < P; ++p) {
            const double* u = fields.u.at(i, i, p);
            double* du = fields.diag_u.at(i, p);
            for (int l = 0; l < du_dim; ++l) du[l] = u[l];
            double* dvg = fields.diag_v.at(i, p);
            if (dv) {
                reconstructed_slice(fields.v, *dv, grid, i, i, p, dvg);
            } else {
                const double* v = fields.v.at(i, i, p);
                for (int l = 0; l < dv_dim; ++l) dvg[l] = v[l];
            }
        }
    }
}

GradCheckResult grad_consistency_check(const FamilyDriver& g, const GradFamilyDriver& grad_g,
                                       const PathEnsemble& ens, int dim, int dim_y,
                                       const std::vector<GradCheckPoint>& points, double step,
                                       double tolerance) {
    GradCheckResult result;
    const int m = ens.dim_brownian;
    std::vector<double> gp(static_cast<std::size_t>(dim)), gm(static_cast<std::size_t>(dim));
    std::vector<double> assembled(static_cast<std::size_t>(dim)), analytic(static_cast<std::size_t>(dim));
    std::vector<double> ub(static_cast<std::size_t>(dim)), vb(static_cast<std::size_t>(m) * dim);

    for (const auto& pt : points) {
        PathContext ctx{&ens, pt.t_node, pt.path, ens.grid.t(pt.t_node)};

        g(pt.s_node, pt.s + step, ctx, pt.u.data(), pt.v.data(), pt.y.data(), pt.z.data(), gp.data());
        g(pt.s_node, pt.s - step, ctx, pt.u.data(), pt.v.data(), pt.y.data(), pt.z.data(), gm.data());
        for (int l = 0; l < dim; ++l) assembled[static_cast<std::size_t>(l)] = (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);

        for (int l = 0; l < dim; ++l) ub[static_cast<std::size_t>(l)] = pt.u[static_cast<std::size_t>(l)] + step * pt.du[static_cast<std::size_t>(l)];
        g(pt.s_node, pt.s, ctx, ub.data(), pt.v.data(), pt.y.data(), pt.z.data(), gp.data());
        for (int l = 0; l < dim; ++l) ub[static_cast<std::size_t>(l)] = pt.u[static_cast<std::size_t>(l)] - step * pt.du[static_cast<std::size_t>(l)];
        g(pt.s_node, pt.s, ctx, ub.data(), pt.v.data(), pt.y.data(), pt.z.data(), gm.data());
        for (int l = 0; l < dim; ++l) assembled[static_cast<std::size_t>(l)] += (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);

        for (int l = 0; l < m * dim; ++l) vb[static_cast<std::size_t>(l)] = pt.v[static_cast<std::size_t>(l)] + step * pt.dv[static_cast<std::size_t>(l)];
        g(pt.s_node, pt.s, ctx, pt.u.data(), vb.data(), pt.y.data(), pt.z.data(), gp.data());
        for (int l = 0; l < m * dim; ++l) vb[static_cast<std::size_t>(l)] = pt.v[static_cast<std::size_t>(l)] - step * pt.dv[static_cast<std::size_t>(l)];
        g(pt.s_node, pt.s, ctx, pt.u.data(), vb.data(), pt.y.data(), pt.z.data(), gm.data());
        for (int l = 0; l < dim; ++l) assembled[static_cast<std::size_t>(l)] += (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);

        grad_g(pt.s_node, pt.s, ctx, pt.du.data(), pt.dv.data(), pt.u.data(), pt.v.data(), pt.y.data(),
               pt.z.data(), analytic.data());

        double dev = 0.0;
        for (int l = 0; l < dim; ++l) dev = std::max(dev, std::abs(analytic[static_cast<std::size_t>(l)] - assembled[static_cast<std::size_t>(l)]));
        if (dev > result.max_deviation) {
            result.max_deviation = dev;
            result.worst = pt;
        }
    }
    result.pass = result.max_deviation <= tolerance;
    (void)dim_y;
    return result;
}

std::vector<GradCheckPoint> default_grad_check_points(const PathEnsemble& ens, int dim, int dim_y, int count,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_int_distribution<int> node_pick(0, ens.grid.num_steps() - 1);
    std::uniform_int_distribution<int> path_pick(0, ens.n_paths - 1);
    const int m = ens.dim_brownian;

    std::vector<GradCheckPoint> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
        GradCheckPoint pt;
        pt.t_node = node_pick(rng);
        pt.path = path_pick(rng);
        pt.s_node = node_pick(rng);
        pt.s = ens.grid.t(pt.s_node) + 0.25 * ens.grid.dt(0) * unif(rng);
        auto fill = [&](std::vector<double>& v, int len) {
            v.resize(static_cast<std::size_t>(len));
            for (auto& x : v) x = unif(rng);
        };
        fill(pt.du, dim);
        fill(pt.dv, m * dim);
        fill(pt.u, dim);
        fill(pt.v, m * dim);
        fill(pt.y, dim_y);
        fill(pt.z, m * dim_y);
        pts.push_back(std::move(pt));
    }
    return pts;
}

GradFamilyDriver finite_difference_grad(const FamilyDriver& g, int dim, int /*dim_y*/, double step) {
    return [g, dim, step](int s_node, double s, const PathContext& ctx, const double* du, const double* dv,
                          const double* u, const double* v, const double* y, const double* z, double* out) {
        const int m = ctx.ens->dim_brownian;
        std::vector<double> gp(static_cast<std::size_t>(dim)), gm(static_cast<std::size_t>(dim));
        std::vector<double> buf;

        g(s_node, s + step, ctx, u, v, y, z, gp.data());
        g(s_node, s - step, ctx, u, v, y, z, gm.data());
        for (int l = 0; l < dim; ++l) out[l] = (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);

        buf.assign(u, u + dim);
        for (int l = 0; l < dim; ++l) buf[static_cast<std::size_t>(l)] += step * du[l];
        g(s_node, s, ctx, buf.data(), v, y, z, gp.data());
        for (int l = 0; l < dim; ++l) buf[static_cast<std::size_t>(l)] -= 2 * step * du[l];
        g(s_node, s, ctx, buf.data(), v, y, z, gm.data());
        for (int l = 0; l < dim; ++l) out[l] += (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);

        buf.assign(v, v + static_cast<std::ptrdiff_t>(m) * dim);
        for (int l = 0; l < m * dim; ++l) buf[static_cast<std::size_t>(l)] += step * dv[l];
        g(s_node, s, ctx, u, buf.data(), y, z, gp.data());
        for (int l = 0; l < m * dim; ++l) buf[static_cast<std::size_t>(l)] -= 2 * step * dv[l];
        g(s_node, s, ctx, u, buf.data(), y, z, gm.data());
        for (int l = 0; l < dim; ++l) out[l] += (gp[static_cast<std::size_t>(l)] - gm[static_cast<std::size_t>(l)]) / (2 * step);
    };
}

}  // namespace bsvie
