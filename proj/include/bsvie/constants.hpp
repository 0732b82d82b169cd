#pragma once

#include <limits>
#include <string>
#include <vector>

namespace bsvie {

// Lipschitz / local-quadratic growth constants of the three generators.
// L_y, L_u, L_du govern the (y, u, du) slots; L_z, L_v, L_dv the
// sigma^T-aggregate slots.
struct GrowthConstants {
    double L_y = 0.0;
    double L_u = 0.0;
    double L_du = 0.0;
    double L_z = 0.0;
    double L_v = 0.0;
    double L_dv = 0.0;
};

enum class Mode { LipschitzQuadratic, Quadratic };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

// max{L_z, L_v, L_dv} in LQ mode; max over all six in quadratic mode.
double l_star(const GrowthConstants& k, Mode mode);

// Weight threshold c^eps. LQ mode consumes eps[0..10] (eleven entries),
// quadratic mode eps[0..1].
double compute_c_eps(const std::vector<double>& eps, const GrowthConstants& k, double horizon, Mode mode);

// Largest certified squared radius, as stated: 1/(168 kappa Lstar^2) in LQ
// mode, 1/(336 kappa Lstar^2 max{2, T^2}) in quadratic mode. Lstar = 0 maps
// to +infinity (unbounded ball).
double compute_radius_bound(int kappa, double Lstar, double horizon, Mode mode);

// The tighter bound the derivation itself supports: 1/(2^5 3 5^2 7 Lstar^2)
// resp. 1/(2^6 3 5^2 7 Lstar^2 max{2, T^2}). The certifier uses
// min(statement, derivation) and flags the mismatch.
double compute_radius_bound_conservative(double Lstar, double horizon, Mode mode);

// Squared-norm constituents of the small-data functional I_0.
struct I0Terms {
    double xi_sq = 0.0;      // ||xi||^2_{Linf,c}
    double eta_sq = 0.0;     // sup_s ||eta(s)||^2_{Linf,c}
    double d_eta_sq = 0.0;   // sup_s ||d_s eta(s)||^2_{Linf,c}
    double h0_sq = 0.0;      // ||h(.,0)||^2_{L1inf,c}
    double g0_sq = 0.0;      // sup_s ||g(s,.,0)||^2_{L1inf,c}
    double dg0_sq = 0.0;     // sup_s ||grad g(s,.,0)||^2_{L1inf,c}

    double assemble(const std::vector<double>& eps) const;
};

struct CertReport {
    int kappa = 0;
    Mode mode = Mode::LipschitzQuadratic;
    double Lstar = 0.0;
    std::vector<double> eps;
    double gamma = 0.0;
    double c_eps = 0.0;
    double c_used = 0.0;
    double I0 = 0.0;
    double R2 = 0.0;
    double U_kappa = 0.0;              // statement bound
    double U_conservative = 0.0;       // derivation bound
    double R2_bound = 0.0;             // min of the two, governs the flag
    bool radius_bound_discrepancy = false;

    bool sqrt_condition = false;
    bool i0_condition = false;
    bool radius_condition = false;
    bool weight_condition = false;
    bool pass = false;
};

struct CertInputs {
    int kappa = 10;
    Mode mode = Mode::LipschitzQuadratic;
    std::vector<double> eps;  // defaults applied when empty
    double gamma = 0.25;
    double R2 = 0.0;
    double c = std::numeric_limits<double>::quiet_NaN();  // NaN -> use c_eps
    double I0 = 0.0;
    GrowthConstants constants;
    double horizon = 1.0;
};

std::vector<double> default_eps(Mode mode);

CertReport certify(const CertInputs& in);

// Brute-force verification of the two scalar optimisation bounds behind the
// radius and contraction constants.
struct LemmaReport {
    // Reduced radius objective f(a) = (a - 10) / (21 a^2).
    double radius_opt_alpha = 0.0;       // expected 20
    double radius_opt_value = 0.0;       // expected 1/840
    double radius_documented_value = 0.0125;  // the 1/(2^4 5) figure it conflicts with
    bool radius_discrepancy = false;
    double radius_rel_error = 0.0;

    // Contraction objective g(e) = 3 (3 e^2 + b e) / (e - 10) at b = e1+e2.
    double contraction_opt_eps = 0.0;       // expected 20 at b = 0
    double contraction_value_at_zero = 0.0;  // expected 360
    double contraction_rel_error = 0.0;
    double admissible_eps_sum = 0.0;  // (2 sqrt 70 - sqrt 30)^2 - 30

    bool pass = false;
};

LemmaReport verify_lemmas(int resolution = 1000);

}  // namespace bsvie
