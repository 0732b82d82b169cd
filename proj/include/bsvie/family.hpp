#pragma once

#include <functional>

#include "bsvie/bsde.hpp"

namespace bsvie {

// Terminal data eta(s, .) evaluated at the terminal node of a path.
using FamilyTerminal = std::function<void(int s_node, double s, const PathContext&, double* out)>;

// Family generator g(s, t, x, u, v, y, z): u is the family's own value,
// v its own sigma^T Z aggregate, (y, z) the frozen first-equation pair.
using FamilyDriver = std::function<void(int s_node, double s, const PathContext&, const double* u,
                                        const double* v, const double* y, const double* z, double* out)>;

// Composite gradient generator
//   grad_g(s, t, x, du, dv, u, v, y, z)
//     = d_s g + d_u g . du + sum_i d_{v:i} g . dv_{i:}
// with (u, v) read from the solved family and (y, z) frozen.
using GradFamilyDriver = std::function<void(int s_node, double s, const PathContext&, const double* du,
                                            const double* dv, const double* u, const double* v,
                                            const double* y, const double* z, double* out)>;

struct FamilyField2 {
    FamilyField u;     // [s][t][path] dim d2
    FamilyField v;     // [s][t][path] dim m*d2
    NodeField diag_u;  // u[i][i]
    NodeField diag_v;  // reconstructed, see reconstruct_diagonals
};

// Frozen per-node inputs for the coupled slots. Null fields read as zero.
struct FrozenPair {
    const NodeField* y = nullptr;
    const NodeField* z = nullptr;
};

// One backward sweep per s-node with terminal eta(s, .) and the family
// generator; the (y, z) slots are frozen. Sweeps are independent across s.
FamilyField2 solve_family(const FamilyTerminal& eta, const FamilyDriver& g, const FrozenPair& frozen,
                          const RegressionCache& reg, int dim, Scheme scheme = Scheme::Explicit);

// The derivative family: terminal d_s eta(s, .), generator grad_g reading
// the solved (u, v) family.
FamilyField2 solve_grad_family(const FamilyTerminal& d_eta, const GradFamilyDriver& grad_g,
                               const FamilyField2& solved, const FrozenPair& frozen,
                               const RegressionCache& reg, int dim, Scheme scheme = Scheme::Explicit);

// diag_u[i] = u[i][i]; the z-diagonal is reconstructed from the top slice
// and the derivative family by left-point quadrature:
//   diag_v[i] = v[N][i] - sum_{j >= i} dv[j][i] * dt_j.
// The direct read v[i][i] is kept for consistency tests only.
void reconstruct_diagonals(FamilyField2& fields, const FamilyField* dv, const TimeGrid& grid);

// Reconstructed s-slice at (s_j, t_i): v[N][i] - sum_{k >= j} dv[k][i] dt_k.
// Slice j = i is the diagonal.
void reconstructed_slice(const FamilyField& v_top_field, const FamilyField& dv, const TimeGrid& grid,
                         int s_node, int t_node, int path, double* out);

// Compares a user-supplied composite gradient against its finite-difference
// assembly at sample points; returns the worst absolute deviation.
struct GradCheckPoint {
    int s_node = 0;
    double s = 0.0;
    int t_node = 0;
    int path = 0;
    std::vector<double> du, dv, u, v, y, z;
};

struct GradCheckResult {
    double max_deviation = 0.0;
    GradCheckPoint worst;
    bool pass = false;
};

GradCheckResult grad_consistency_check(const FamilyDriver& g, const GradFamilyDriver& grad_g,
                                       const PathEnsemble& ens, int dim, int dim_y,
                                       const std::vector<GradCheckPoint>& points, double step = 1e-5,
                                       double tolerance = 1e-4);

// Deterministic sample points for the startup check.
std::vector<GradCheckPoint> default_grad_check_points(const PathEnsemble& ens, int dim, int dim_y,
                                                      int count = 32, std::uint64_t seed = 1234);

// Builds the composite gradient from g by central finite differences when no
// analytic grad_g is supplied.
GradFamilyDriver finite_difference_grad(const FamilyDriver& g, int dim, int dim_y, double step = 1e-6);

}  // namespace bsvie
