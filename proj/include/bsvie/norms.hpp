#pragma once

#include "bsvie/fields.hpp"
#include "bsvie/regression.hpp"

namespace bsvie {

// Discrete estimators of the weighted process norms. Essential suprema are
// replaced by sample maxima and the stopping-time supremum in the BMO norm
// by the supremum over grid nodes; both approximations are lower bounds and
// are flagged as such in the run report.

// sup-norm with weight e^{ct/2}: max over nodes and paths of e^{ct/2}|Y_t|.
double sup_norm(const NodeField& y, double c, const TimeGrid& grid);

// Squared H^{2,c} norm: mean over paths of sum_i e^{c t_i} |zeta_i|^2 dt_i.
double h2_norm_sq(const NodeField& zeta, double c, const TimeGrid& grid);

// Squared BMO estimate: max over nodes i of the sample max over paths of
// E[ sum_{j>=i} e^{c t_j} |zeta_j|^2 dt_j | F_{t_i} ].
double bmo_norm_sq(const NodeField& zeta, double c, const RegressionCache& reg);

// e^{cT/2} sample-max of terminal data (L^{infinity,c}).
double linf_terminal_norm(const std::vector<double>& values, int dim, double c, double horizon);

// max over paths of sum_i e^{c t_i / 2} |y_i| dt_i (L^{1,infinity,c}).
double l1_inf_norm(const NodeField& y, double c, const TimeGrid& grid);

// Family variants: sup over s-nodes of the per-slice estimate.
double family_sup_norm(const FamilyField& u, double c, const TimeGrid& grid);
double family_bmo_norm_sq(const FamilyField& v, double c, const RegressionCache& reg);

struct NormReport {
    double c = 0.0;
    double calY_sup = 0.0;
    double calZ_bmo_sq = 0.0;
    double U_sup = 0.0;       // sup over s
    double V_bmo_sq = 0.0;    // sup over s
    double diagV_bmo_sq = 0.0;
    double dU_sup = 0.0;
    double dV_bmo_sq = 0.0;
    // Squared norm of the solution tuple in the weighted product space; the
    // two-parameter Z block carries both the per-s and the diagonal part.
    double total_sq = 0.0;

    double total() const;
};

NormReport solution_norms(const NodeField& calY, const NodeField& calZ, const FamilyField& U,
                          const FamilyField& V, const NodeField& diagV, const FamilyField& dU,
                          const FamilyField& dV, double c, const RegressionCache& reg);

// Energy inequality E[(int e^{cr}|zeta|^2 dr)^p] <= p! * (BMO estimate)^p.
struct EnergyCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

EnergyCheck energy_check(const NodeField& zeta, double c, int p, const RegressionCache& reg);

// Pathwise diagonal inequality at t = 0 for a two-parameter field and its
// s-derivative. The s-slices enter through the derivative-field
// reconstruction (the same object that defines the diagonal), for which the
// bound is an exact consequence of Young's inequality plus telescoping; the
// 1e-9 slack only absorbs rounding.
struct DiagonalEnergyCheck {
    double worst_lhs = 0.0;
    double worst_rhs = 0.0;
    double worst_margin = 0.0;  // min over paths of rhs - lhs
    bool pass = false;
};

DiagonalEnergyCheck diagonal_energy_check(const FamilyField& v, const FamilyField& dv, double c,
                                          double eps, const TimeGrid& grid);

}  // namespace bsvie
