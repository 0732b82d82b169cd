#include "bsvie/constants.hpp"

#include <algorithm>
#include <cmath>

#include "bsvie/common.hpp"
#include "bsvie/optimize.hpp"

namespace bsvie {

std::string mode_name(Mode m) { return m == Mode::LipschitzQuadratic ? "LQ" : "quadratic"; }

Mode parse_mode(const std::string& s) {
    if (s == "LQ" || s == "lq" || s == "lipschitz-quadratic") return Mode::LipschitzQuadratic;
    if (s == "quadratic" || s == "Q" || s == "q") return Mode::Quadratic;
    throw ConfigError("unknown mode '" + s + "' (expected LQ or quadratic)");
}

double l_star(const GrowthConstants& k, Mode mode) {
    const double z = std::max({k.L_z, k.L_v, k.L_dv});
    if (mode == Mode::LipschitzQuadratic) return z;
    return std::max({z, k.L_y, k.L_u, k.L_du});
}

std::vector<double> default_eps(Mode mode) {
    if (mode == Mode::Quadratic) return {7.0, 7.0, 40.0, 40.0, 40.0, 40.0};
    return {1.0, 1.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0};
}

double compute_c_eps(const std::vector<double>& eps, const GrowthConstants& k, double horizon, Mode mode) {
    const double T = horizon;
    for (double e : eps) require(e > 0.0, "c_eps: every eps must be positive");
    if (mode == Mode::Quadratic) {
        require(eps.size() >= 2, "c_eps: quadratic mode needs eps[0..1]");
        const double e1 = eps[0], e2 = eps[1];
        return std::max({7.0 * T * k.L_du * k.L_du / e1, 7.0 * T / e2, 2.0 * k.L_du});
    }
    require(eps.size() >= 11, "c_eps: LQ mode needs eps[0..10]");
    const double e1 = eps[0], e2 = eps[1], e7 = eps[6], e8 = eps[7], e9 = eps[8], e10 = eps[9], e11 = eps[10];
    const double Ly = k.L_y, Lu = k.L_u, Ldu = k.L_du;
    const double m1 = 2 * Ly + 7 * T * Ldu * Ldu / e1 + (e1 + e2) * T * Ly * Ly + Lu * Lu / e7 + e8 + e9 + e10;
    const double m2 = 2 * Lu + 7 * T / e2 + e7 + Ly * Ly / e8;
    const double m3 = 2 * Lu + (e1 + e2) * T * Lu * Lu + Ly * Ly / e9 + e11;
    const double m4 = 2 * Ldu + Ly * Ly / e10 + Lu * Lu / e11;
    const double m5 = 8 * Ly + 2 * T * Ly + 2 * T * Ldu * Ly;
    const double m6 = 4 * Lu + 2 * T * Lu + 2 * T * Ldu * Lu;
    return std::max({m1, m2, m3, m4, m5, m6});
}

double compute_radius_bound(int kappa, double Lstar, double horizon, Mode mode) {
    require(kappa >= 1, "radius bound: kappa must be >= 1");
    if (Lstar == 0.0) return std::numeric_limits<double>::infinity();
    require(Lstar > 0.0, "radius bound: Lstar must be >= 0");
    if (mode == Mode::LipschitzQuadratic) return 1.0 / (168.0 * kappa * Lstar * Lstar);
    return 1.0 / (336.0 * kappa * Lstar * Lstar * std::max(2.0, horizon * horizon));
}

double compute_radius_bound_conservative(double Lstar, double horizon, Mode mode) {
    if (Lstar == 0.0) return std::numeric_limits<double>::infinity();
    if (mode == Mode::LipschitzQuadratic) return 1.0 / (16800.0 * Lstar * Lstar);
    return 1.0 / (33600.0 * Lstar * Lstar * std::max(2.0, horizon * horizon));
}

double I0Terms::assemble(const std::vector<double>& eps) const {
    const double e1 = eps.size() > 0 ? eps[0] : 0.0;
    const double e2 = eps.size() > 1 ? eps[1] : 0.0;
    const double e3 = eps.size() > 2 ? eps[2] : 0.0;
    const double e4 = eps.size() > 3 ? eps[3] : 0.0;
    const double e5 = eps.size() > 4 ? eps[4] : 0.0;
    const double e6 = eps.size() > 5 ? eps[5] : 0.0;
    return xi_sq + 2.0 * eta_sq + (1.0 + e1 + e2) * d_eta_sq + e3 * h0_sq + (e4 + e5) * g0_sq +
           (e1 + e2 + e6) * dg0_sq;
}

CertReport certify(const CertInputs& in) {
    require(in.gamma > 0.0, "certify: gamma must be positive");
    CertReport r;
    r.kappa = in.kappa;
    r.mode = in.mode;
    r.eps = in.eps.empty() ? default_eps(in.mode) : in.eps;
    r.gamma = in.gamma;
    r.I0 = in.I0;
    r.R2 = in.R2;
    r.Lstar = l_star(in.constants, in.mode);

    r.c_eps = compute_c_eps(r.eps, in.constants, in.horizon, in.mode);
    r.c_used = std::isnan(in.c) ? r.c_eps : in.c;

    const double e12 = r.eps[0] + r.eps[1];
    const double three_k = 3.0 * in.kappa;
    const double lhs = std::pow(std::sqrt(e12 + three_k) + std::sqrt(three_k), 2.0);
    const double cap = (in.mode == Mode::LipschitzQuadratic ? 28.0 : 56.0) * in.kappa;
    r.sqrt_condition = lhs <= cap;

    r.i0_condition = in.I0 <= in.gamma * in.R2 / in.kappa;

    r.U_kappa = compute_radius_bound(in.kappa, r.Lstar, in.horizon, in.mode);
    r.U_conservative = compute_radius_bound_conservative(r.Lstar, in.horizon, in.mode);
    r.R2_bound = std::min(r.U_kappa, r.U_conservative);
    r.radius_bound_discrepancy = r.U_kappa != r.U_conservative;
    r.radius_condition = in.R2 < r.R2_bound;

    r.weight_condition = r.c_used >= r.c_eps;

    r.pass = r.sqrt_condition && r.i0_condition && r.radius_condition && r.weight_condition;
    return r;
}

LemmaReport verify_lemmas(int resolution) {
    require(resolution >= 100, "verify_lemmas: resolution must be >= 100");
    LemmaReport rep;

    // Reduced radius objective on the symmetric parameterisation.
    const auto radius_obj = [](double a) { return (a - 10.0) / (21.0 * a * a); };
    {
        const double lo = 10.0 + 1e-9, hi = 400.0;
        double best_a = lo, best_v = -1e300;
        for (int i = 0; i <= resolution; ++i) {
            const double a = lo + (hi - lo) * i / resolution;
            const double v = radius_obj(a);
            if (v > best_v) {
                best_v = v;
                best_a = a;
            }
        }
        const double span = (hi - lo) / resolution;
        best_a = golden_section_max(radius_obj, std::max(lo, best_a - 2 * span), best_a + 2 * span, 1e-12);
        rep.radius_opt_alpha = best_a;
        rep.radius_opt_value = radius_obj(best_a);
        const double expected = 1.0 / 840.0;
        rep.radius_rel_error = std::abs(rep.radius_opt_value - expected) / expected;
        rep.radius_discrepancy = std::abs(rep.radius_opt_value - rep.radius_documented_value) >
                                 1e-3 * rep.radius_documented_value;
    }

    // Contraction objective; closed form 3 (sqrt(30 + b) + sqrt(30))^2.
    double worst_rel = 0.0;
    const double sum_cases[] = {0.0, 10.0, 50.0};
    for (double b : sum_cases) {
        const auto obj = [b](double e) { return 3.0 * (3.0 * e * e + b * e) / (e - 10.0); };
        const double lo = 10.0 + 1e-6, hi = 400.0;
        double best_e = lo, best_v = 1e300;
        for (int i = 0; i <= resolution; ++i) {
            const double e = lo + (hi - lo) * i / resolution;
            const double v = obj(e);
            if (v < best_v) {
                best_v = v;
                best_e = e;
            }
        }
        const double span = (hi - lo) / resolution;
        best_e = golden_section_min(obj, std::max(lo, best_e - 2 * span), best_e + 2 * span, 1e-12);
        const double value = obj(best_e);
        const double closed = 3.0 * std::pow(std::sqrt(30.0 + b) + std::sqrt(30.0), 2.0);
        worst_rel = std::max(worst_rel, std::abs(value - closed) / closed);
        if (b == 0.0) {
            rep.contraction_opt_eps = best_e;
            rep.contraction_value_at_zero = value;
        }
    }
    rep.contraction_rel_error = worst_rel;

    rep.admissible_eps_sum = std::pow(2.0 * std::sqrt(70.0) - std::sqrt(30.0), 2.0) - 30.0;

    rep.pass = rep.radius_rel_error <= 1e-3 && rep.contraction_rel_error <= 1e-3 &&
               std::abs(rep.radius_opt_alpha - 20.0) <= 0.1 && std::abs(rep.contraction_opt_eps - 20.0) <= 0.1;
    return rep;
}

}  // namespace bsvie
