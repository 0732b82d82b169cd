#include "bsvie/norms.hpp"

#include <cmath>

#include "bsvie/family.hpp"

namespace bsvie {

namespace {
inline double sq_norm(const double* v, int dim) {
    double s = 0.0;
    for (int l = 0; l < dim; ++l) s += v[l] * v[l];
    return s;
}
}  // namespace

double sup_norm(const NodeField& y, double c, const TimeGrid& grid) {
    double best = 0.0;
    for (int i = 0; i < y.nodes; ++i) {
        const double w = std::exp(0.5 * c * grid.t(i));
        for (int p = 0; p < y.paths; ++p) {
            const double v = w * std::sqrt(sq_norm(y.at(i, p), y.dim));
            if (v > best) best = v;
        }
    }
    return best;
}

double h2_norm_sq(const NodeField& zeta, double c, const TimeGrid& grid) {
    double acc = 0.0;
    for (int p = 0; p < zeta.paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < grid.num_steps(); ++i)
            s += std::exp(c * grid.t(i)) * sq_norm(zeta.at(i, p), zeta.dim) * grid.dt(i);
        acc += s;
    }
    return acc / zeta.paths;
}

double bmo_norm_sq(const NodeField& zeta, double c, const RegressionCache& reg) {
    const TimeGrid& grid = reg.ensemble().grid;
    const int N = grid.num_steps();
    const int P = zeta.paths;
    std::vector<double> tail(static_cast<std::size_t>(P), 0.0);
    std::vector<double> fitted(static_cast<std::size_t>(P));
    double best = 0.0;
    // Tail sums accumulate backward; the conditional expectation at each
    // node is projected through the same regression machinery.
    for (int i = N - 1; i >= 0; --i) {
        const double w = std::exp(c * grid.t(i)) * grid.dt(i);
        for (int p = 0; p < P; ++p) tail[static_cast<std::size_t>(p)] += w * sq_norm(zeta.at(i, p), zeta.dim);
        reg.condexp(tail.data(), 1, i, fitted.data());
        for (int p = 0; p < P; ++p)
            if (fitted[static_cast<std::size_t>(p)] > best) best = fitted[static_cast<std::size_t>(p)];
    }
    return best;
}

double linf_terminal_norm(const std::vector<double>& values, int dim, double c, double horizon) {
    double best = 0.0;
    const std::size_t n = values.size() / static_cast<std::size_t>(dim);
    for (std::size_t p = 0; p < n; ++p) {
        const double v = std::sqrt(sq_norm(values.data() + p * static_cast<std::size_t>(dim), dim));
        if (v > best) best = v;
    }
    return std::exp(0.5 * c * horizon) * best;
}

double l1_inf_norm(const NodeField& y, double c, const TimeGrid& grid) {
    double best = 0.0;
    for (int p = 0; p < y.paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < grid.num_steps(); ++i)
            s += std::exp(0.5 * c * grid.t(i)) * std::sqrt(sq_norm(y.at(i, p), y.dim)) * grid.dt(i);
        if (s > best) best = s;
    }
    return best;
}

double family_sup_norm(const FamilyField& u, double c, const TimeGrid& grid) {
    double best = 0.0;
    for (int s = 0; s < u.snodes; ++s) {
        for (int i = 0; i < u.nodes; ++i) {
            const double w = std::exp(0.5 * c * grid.t(i));
            for (int p = 0; p < u.paths; ++p) {
                const double v = w * std::sqrt(sq_norm(u.at(s, i, p), u.dim));
                if (v > best) best = v;
            }
        }
    }
    return best;
}

double family_bmo_norm_sq(const FamilyField& v, double c, const RegressionCache& reg) {
    double best = 0.0;
    NodeField slice(v.nodes, v.paths, v.dim);
    for (int s = 0; s < v.snodes; ++s) {
        for (int i = 0; i < v.nodes; ++i)
            for (int p = 0; p < v.paths; ++p) {
                const double* src = v.at(s, i, p);
                double* dst = slice.at(i, p);
                for (int l = 0; l < v.dim; ++l) dst[l] = src[l];
            }
        best = std::max(best, bmo_norm_sq(slice, c, reg));
    }
    return best;
}

double NormReport::total() const { return std::sqrt(total_sq); }

NormReport solution_norms(const NodeField& calY, const NodeField& calZ, const FamilyField& U,
                          const FamilyField& V, const NodeField& diagV, const FamilyField& dU,
                          const FamilyField& dV, double c, const RegressionCache& reg) {
    const TimeGrid& grid = reg.ensemble().grid;
    NormReport r;
    r.c = c;
    r.calY_sup = sup_norm(calY, c, grid);
    r.calZ_bmo_sq = bmo_norm_sq(calZ, c, reg);
    r.U_sup = family_sup_norm(U, c, grid);
    r.V_bmo_sq = family_bmo_norm_sq(V, c, reg);
    r.diagV_bmo_sq = bmo_norm_sq(diagV, c, reg);
    r.dU_sup = family_sup_norm(dU, c, grid);
    r.dV_bmo_sq = family_bmo_norm_sq(dV, c, reg);
    r.total_sq = r.calY_sup * r.calY_sup + r.calZ_bmo_sq + r.U_sup * r.U_sup + r.V_bmo_sq + r.diagV_bmo_sq +
                 r.dU_sup * r.dU_sup + r.dV_bmo_sq;
    return r;
}

EnergyCheck energy_check(const NodeField& zeta, double c, int p_power, const RegressionCache& reg) {
    const TimeGrid& grid = reg.ensemble().grid;
    EnergyCheck out;
    double acc = 0.0;
    for (int p = 0; p < zeta.paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < grid.num_steps(); ++i)
            s += std::exp(c * grid.t(i)) * sq_norm(zeta.at(i, p), zeta.dim) * grid.dt(i);
        double pw = s;
        for (int k = 1; k < p_power; ++k) pw *= s;
        acc += pw;
    }
    out.lhs = acc / zeta.paths;
    const double bmo = bmo_norm_sq(zeta, c, reg);
    double factorial = 1.0;
    for (int k = 2; k <= p_power; ++k) factorial *= k;
    double rhs = factorial;
    for (int k = 0; k < p_power; ++k) rhs *= bmo;
    out.rhs = rhs;
    out.pass = out.lhs <= out.rhs * (1.0 + 1e-6) + 1e-300;
    return out;
}

DiagonalEnergyCheck diagonal_energy_check(const FamilyField& v, const FamilyField& dv, double c,
                                          double eps, const TimeGrid& grid) {
    const int N = grid.num_steps();
    const int P = v.paths;
    const int dim = v.dim;
    DiagonalEnergyCheck out;
    out.worst_margin = 1e300;
    std::vector<double> slice(static_cast<std::size_t>(dim));

    for (int p = 0; p < P; ++p) {
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < N; ++i) {
            const double w = std::exp(c * grid.t(i)) * grid.dt(i);
            reconstructed_slice(v, dv, grid, i, i, p, slice.data());
            lhs += w * sq_norm(slice.data(), dim);
            reconstructed_slice(v, dv, grid, 0, i, p, slice.data());
            rhs += w * sq_norm(slice.data(), dim);
            for (int j = 0; j < i; ++j) {
                reconstructed_slice(v, dv, grid, j, i, p, slice.data());
                const double dj = grid.dt(j);
                rhs += w * dj * (eps * sq_norm(slice.data(), dim) +
                                 (1.0 / eps + dj) * sq_norm(dv.at(j, i, p), dim));
            }
        }
        const double margin = rhs - lhs;
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_lhs = lhs;
            out.worst_rhs = rhs;
        }
    }
    out.pass = out.worst_margin >= -1e-9;
    return out;
}

}  // namespace bsvie
