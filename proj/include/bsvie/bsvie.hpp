#pragma once

#include <utility>

#include "bsvie/system.hpp"
#include "bsvie/tree.hpp"

namespace bsvie {

// Data of the backward Volterra equation
//   Y_t^s = xi(s) + int_t^T f_r(s, X, Y_r^s, Z_r^s, Y_r^r, Z_r^r) dr
//           - int_t^T (Z_r^s)^T dX_r.
// The (y, z) slots of f take the family's own pair, the (u, v) slots the
// diagonal pair.
struct BsvieSpec {
    int dim = 1;
    std::function<void(double s, const PathContext&, double*)> xi;
    std::function<void(double s, const PathContext&, double*)> d_xi;
    std::function<void(double t, double s, const PathContext&, const double* y, const double* z,
                       const double* u, const double* v, double*)> f;
    // Composite gradient in (s, y, z):
    //   grad_f = d_s f + d_y f . dy + sum_i d_{z:i} f . dz_{i:}
    // Left empty, it is built from f by central finite differences.
    std::function<void(double t, double s, const PathContext&, const double* dy, const double* dz,
                       const double* y, const double* z, const double* u, const double* v, double*)> grad_f;
    GrowthConstants constants;
    Mode mode = Mode::LipschitzQuadratic;
};

// Startup validation: the composite gradient must be consistent with f.
// Throws ConfigError naming the worst sample point on failure.
void validate_bsvie_spec(const BsvieSpec& spec, const PathEnsemble& ens, double tolerance = 1e-4);

// Wiring into the coupled-system form: d1 = d2 = d, the first equation's
// generator is f on its own diagonal minus the derivative diagonal,
//   h(x, y, z, u, v, du) = f(t, t, x, y, z, u, v) - du,
// the family generator reads the frozen first-equation pair through the
// diagonal slots, and the family terminal is the free term itself.
SystemSpec build_system(const BsvieSpec& spec);

struct FlowStats {
    int node_lo = 0;
    int node_hi = 0;
    double mean = 0.0;
    double rms = 0.0;
    double max = 0.0;
};

struct BsvieSolution {
    SystemSolution sys;  // Y = sys.U, Z = sys.V, dY = sys.dU, dZ = sys.dV
    CertReport cert;
    // Deviation of the diagonal identity (Y_t^t, Z_t^t) = (calY, calZ).
    double diag_dev_y = 0.0;
    double diag_dev_z = 0.0;
    std::vector<FlowStats> flow;
};

struct BsvieOptions {
    PicardOptions picard;
    int cert_kappa = 7;
    std::vector<double> cert_eps;  // empty -> defaults
    double cert_gamma = 0.25;
    double cert_R2 = 0.0;  // 0 -> 0.9 * certified bound
    std::vector<std::pair<int, int>> flow_pairs;  // empty -> {(0, N/2), (N/2, N), (0, N)}
};

BsvieSolution solve_bsvie(const BsvieSpec& spec, const RegressionCache& reg, const BsvieOptions& opt);

// Pathwise residual statistics of the diagonal identity
//   Y_t^t = Y_s^s + int_t^s ( f_r(r, X, Y_r^r, Z_r^r, Y_r^r, Z_r^r)
//                             - dY_r^r ) dr - int_t^s (Z_r^r)^T dX_r
// over the requested node pairs, left-point quadrature. `drop_correction`
// omits the -dY_r^r term (negative control: without it the identity fails
// by an O(1) amount for genuinely s-dependent data).
std::vector<FlowStats> flow_residual(const SystemSolution& sol, const BsvieSpec& spec,
                                     const PathEnsemble& ens,
                                     const std::vector<std::pair<int, int>>& pairs,
                                     bool drop_correction = false);

// Exact small-instance reference: exhaustive two-point tree, every
// conditional expectation by branch summation, damped fixed point to 1e-14.
BsvieSolution tree_oracle(const BsvieSpec& spec, const PathEnsemble& tree_ens,
                          const std::vector<std::pair<int, int>>& flow_pairs = {});

// Componentwise maxima of |a - b| over all solution fields; used by the
// oracle-equivalence checks and the oracle-compare subcommand.
struct SolutionDeviation {
    double y = 0.0, z = 0.0, dy = 0.0, dz = 0.0, diag = 0.0, caly = 0.0, flow = 0.0;
    double overall() const;
};
SolutionDeviation compare_solutions(const BsvieSolution& a, const BsvieSolution& b);

}  // namespace bsvie
