#include "bsvie/bsvie.hpp"

#include <cmath>
#include <sstream>

#include "bsvie/common.hpp"

namespace bsvie {

namespace {
FamilyDriver family_driver_of(const BsvieSpec& spec) {
    return [f = spec.f](int, double s, const PathContext& ctx, const double* u, const double* v,
                        const double* y, const double* z, double* out) {
        f(ctx.t, s, ctx, u, v, y, z, out);
    };
}

GradFamilyDriver grad_driver_of(const BsvieSpec& spec) {
    if (spec.grad_f) {
        return [gf = spec.grad_f](int, double s, const PathContext& ctx, const double* du, const double* dv,
                                  const double* u, const double* v, const double* y, const double* z,
                                  double* out) { gf(ctx.t, s, ctx, du, dv, u, v, y, z, out); };
    }
    return GradFamilyDriver{};
}
}  // namespace

void validate_bsvie_spec(const BsvieSpec& spec, const PathEnsemble& ens, double tolerance) {
    require(static_cast<bool>(spec.xi) && static_cast<bool>(spec.f), "bsvie spec: xi and f are required");
    require(static_cast<bool>(spec.d_xi), "bsvie spec: d_xi is required");
    if (!spec.grad_f) return;  // finite-difference assembly is consistent by construction
    const FamilyDriver g = family_driver_of(spec);
    const GradFamilyDriver gg = grad_driver_of(spec);
    const auto pts = default_grad_check_points(ens, spec.dim, spec.dim, 32);
    const auto res = grad_consistency_check(g, gg, ens, spec.dim, spec.dim, pts, 1e-5, tolerance);
    if (!res.pass) {
        std::ostringstream os;
        os << "bsvie spec: composite gradient inconsistent with f (max deviation " << res.max_deviation
           << " at s = " << res.worst.s << ", node " << res.worst.t_node << ", path " << res.worst.path << ")";
        throw ConfigError(os.str());
    }
}

SystemSpec build_system(const BsvieSpec& spec) {
    SystemSpec sys;
    sys.d1 = spec.dim;
    sys.d2 = spec.dim;
    sys.constants = spec.constants;
    sys.mode = spec.mode;

    sys.xi = [xi = spec.xi](const PathContext& ctx, double* out) { xi(ctx.ens->grid.horizon, ctx, out); };
    sys.eta = [xi = spec.xi](int, double s, const PathContext& ctx, double* out) { xi(s, ctx, out); };
    sys.d_eta = [dxi = spec.d_xi](int, double s, const PathContext& ctx, double* out) { dxi(s, ctx, out); };

    sys.h = [f = spec.f, d = spec.dim](const PathContext& ctx, const double* y, const double* z,
                                       const double* u, const double* v, const double* du, double* out) {
        f(ctx.t, ctx.t, ctx, y, z, u, v, out);
        for (int l = 0; l < d; ++l) out[l] -= du[l];
    };
    sys.g = family_driver_of(spec);
    sys.grad_g = grad_driver_of(spec);
    if (!sys.grad_g) sys.grad_g = finite_difference_grad(sys.g, spec.dim, spec.dim);
    return sys;
}

std::vector<FlowStats> flow_residual(const SystemSolution& sol, const BsvieSpec& spec,
                                     const PathEnsemble& ens,
                                     const std::vector<std::pair<int, int>>& pairs, bool drop_correction) {
    const TimeGrid& grid = ens.grid;
    const int P = ens.n_paths;
    const int m = ens.dim_brownian;
    const int d = spec.dim;

    std::vector<FlowStats> out;
    std::vector<double> f(static_cast<std::size_t>(d));
    for (const auto& [a, b] : pairs) {
        require(0 <= a && a < b && b <= grid.num_steps(), "flow_residual: bad node pair");
        FlowStats st;
        st.node_lo = a;
        st.node_hi = b;
        double acc = 0.0, acc_sq = 0.0, mx = 0.0;
        for (int p = 0; p < P; ++p) {
            double res_sq = 0.0, res_sum = 0.0;
            std::vector<double> r(static_cast<std::size_t>(d));
            for (int l = 0; l < d; ++l) r[static_cast<std::size_t>(l)] = sol.diagU.at(a, p)[l] - sol.diagU.at(b, p)[l];
            for (int i = a; i < b; ++i) {
                PathContext ctx{&ens, i, p, grid.t(i)};
                spec.f(grid.t(i), grid.t(i), ctx, sol.diagU.at(i, p), sol.diagV.at(i, p), sol.diagU.at(i, p),
                       sol.diagV.at(i, p), f.data());
                const double dt = grid.dt(i);
                const double* db = ens.db(p, i);
                const double* dv = sol.diagV.at(i, p);
                const double* du = sol.diagdU.at(i, p);
                for (int l = 0; l < d; ++l) {
                    double zdb = 0.0;
                    for (int k = 0; k < m; ++k) zdb += dv[l * m + k] * db[k];
                    r[static_cast<std::size_t>(l)] -= (f[static_cast<std::size_t>(l)] - (drop_correction ? 0.0 : du[l])) * dt;
                    r[static_cast<std::size_t>(l)] += zdb;
                }
            }
            for (int l = 0; l < d; ++l) {
                res_sq += r[static_cast<std::size_t>(l)] * r[static_cast<std::size_t>(l)];
                res_sum += r[static_cast<std::size_t>(l)];
            }
            acc += res_sum;
            acc_sq += res_sq;
            mx = std::max(mx, std::sqrt(res_sq));
        }
        st.mean = acc / (P * d);
        st.rms = std::sqrt(acc_sq / P);
        st.max = mx;
        out.push_back(st);
    }
    return out;
}

namespace {
std::vector<std::pair<int, int>> default_pairs(int N) {
    std::vector<std::pair<int, int>> pairs;
    if (N >= 2) pairs.push_back({0, N / 2});
    if (N >= 2) pairs.push_back({N / 2, N});
    pairs.push_back({0, N});
    return pairs;
}

void fill_diag_identity(BsvieSolution& out) {
    const NodeField& calY = out.sys.calY;
    double dy = 0.0, dz = 0.0;
    for (int i = 0; i < calY.nodes; ++i)
        for (int p = 0; p < calY.paths; ++p) {
            for (int l = 0; l < calY.dim; ++l)
                dy = std::max(dy, std::abs(out.sys.diagU.at(i, p)[l] - calY.at(i, p)[l]));
            // The terminal aggregate is zero on both sides by convention.
            if (i < calY.nodes - 1)
                for (int l = 0; l < out.sys.calZ.dim; ++l)
                    dz = std::max(dz, std::abs(out.sys.diagV.at(i, p)[l] - out.sys.calZ.at(i, p)[l]));
        }
    out.diag_dev_y = dy;
    out.diag_dev_z = dz;
}
}  // namespace

BsvieSolution solve_bsvie(const BsvieSpec& spec, const RegressionCache& reg, const BsvieOptions& opt) {
    const PathEnsemble& ens = reg.ensemble();
    validate_bsvie_spec(spec, ens, 1e-4);
    const SystemSpec sys = build_system(spec);

    BsvieSolution out;

    // Certification for kappa = 7 is evaluated up front and recorded; a
    // failed certificate does not abort the solve.
    {
        CertInputs ci;
        ci.kappa = opt.cert_kappa;
        ci.mode = spec.mode;
        ci.eps = opt.cert_eps.empty() ? default_eps(spec.mode) : opt.cert_eps;
        ci.gamma = opt.cert_gamma;
        ci.constants = spec.constants;
        ci.horizon = ens.grid.horizon;
        ci.c = std::numeric_limits<double>::quiet_NaN();
        const double bound =
            std::min(compute_radius_bound(ci.kappa, l_star(spec.constants, spec.mode), ens.grid.horizon, spec.mode),
                     compute_radius_bound_conservative(l_star(spec.constants, spec.mode), ens.grid.horizon, spec.mode));
        ci.R2 = opt.cert_R2 > 0.0 ? opt.cert_R2 : (std::isinf(bound) ? 1.0 : 0.9 * bound);
        const double c_eps = compute_c_eps(ci.eps, spec.constants, ens.grid.horizon, spec.mode);
        ci.I0 = estimate_I0(sys, ci.eps, c_eps, reg);
        out.cert = certify(ci);
    }

    PicardOptions popt = opt.picard;
    if (popt.norm_weight_c == 0.0) popt.norm_weight_c = out.cert.c_used;
    out.sys = picard_solve(sys, reg, popt);

    fill_diag_identity(out);
    out.flow = flow_residual(out.sys, spec, ens,
                             opt.flow_pairs.empty() ? default_pairs(ens.grid.num_steps()) : opt.flow_pairs);
    return out;
}

BsvieSolution tree_oracle(const BsvieSpec& spec, const PathEnsemble& tree_ens,
                          const std::vector<std::pair<int, int>>& flow_pairs) {
    const int N = tree_ens.grid.num_steps();
    require(N <= 3 && tree_ens.n_paths == (1 << N),
            "tree_oracle: needs an exhaustive two-point tree with at most 8 paths");
    validate_bsvie_spec(spec, tree_ens, 1e-4);
    const SystemSpec sys = build_system(spec);
    BsvieSolution out;
    auto res = tree_solve_system(sys, tree_ens);
    out.sys = std::move(res.solution);
    fill_diag_identity(out);
    out.flow = flow_residual(out.sys, spec, tree_ens, flow_pairs.empty() ? default_pairs(N) : flow_pairs);
    return out;
}

double SolutionDeviation::overall() const {
    return std::max({y, z, dy, dz, diag, caly, flow});
}

SolutionDeviation compare_solutions(const BsvieSolution& a, const BsvieSolution& b) {
    SolutionDeviation d;
    d.y = max_abs_diff(a.sys.U.data, b.sys.U.data);
    d.z = max_abs_diff(a.sys.V.data, b.sys.V.data);
    d.dy = max_abs_diff(a.sys.dU.data, b.sys.dU.data);
    d.dz = max_abs_diff(a.sys.dV.data, b.sys.dV.data);
    d.diag = std::max({max_abs_diff(a.sys.diagU.data, b.sys.diagU.data),
                       max_abs_diff(a.sys.diagV.data, b.sys.diagV.data),
                       max_abs_diff(a.sys.diagdU.data, b.sys.diagdU.data)});
    d.caly = std::max(max_abs_diff(a.sys.calY.data, b.sys.calY.data),
                      max_abs_diff(a.sys.calZ.data, b.sys.calZ.data));
    double fd = 0.0;
    for (std::size_t k = 0; k < a.flow.size() && k < b.flow.size(); ++k) {
        fd = std::max(fd, std::abs(a.flow[k].rms - b.flow[k].rms));
        fd = std::max(fd, std::abs(a.flow[k].mean - b.flow[k].mean));
        fd = std::max(fd, std::abs(a.flow[k].max - b.flow[k].max));
    }
    d.flow = fd;
    return d;
}

}  // namespace bsvie
