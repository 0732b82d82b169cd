#pragma once

#include <functional>
#include <string>

#include "bsvie/constants.hpp"
#include "bsvie/family.hpp"
#include "bsvie/norms.hpp"

namespace bsvie {

// Terminal data for the first equation, evaluated at the terminal node.
using TerminalFn = std::function<void(const PathContext&, double* out)>;

// First-equation generator h(t, x, y, z, u, v, du):
//   y   (d1)      first-equation value slot
//   z   (m x d1)  first-equation sigma^T Z slot
//   u   (d2)      family diagonal U_t^t
//   v   (m x d2)  family z-diagonal
//   du  (d2)      derivative-family diagonal
using HDriver = std::function<void(const PathContext&, const double* y, const double* z, const double* u,
                                   const double* v, const double* du, double* out)>;

struct SystemSpec {
    int d1 = 1;
    int d2 = 1;
    TerminalFn xi;
    FamilyTerminal eta;
    FamilyTerminal d_eta;
    HDriver h;
    FamilyDriver g;
    GradFamilyDriver grad_g;
    GrowthConstants constants;
    Mode mode = Mode::LipschitzQuadratic;
};

// The solution tuple (orthogonal martingale parts are identically zero in
// the Brownian representation regime this solver works in).
struct SystemSolution {
    NodeField calY;   // d1
    NodeField calZ;   // m*d1
    FamilyField U;    // d2
    FamilyField V;    // m*d2
    FamilyField dU;   // d2
    FamilyField dV;   // m*d2
    NodeField diagU;  // U[i][i]
    NodeField diagV;  // reconstructed z-diagonal
    NodeField diagdU; // dU[i][i]

    struct TraceEntry {
        int iteration = 0;
        double diff_norm = 0.0;
        NormReport norms;
    };
    std::vector<TraceEntry> trace;
    bool converged = false;
    double final_diff = 0.0;
    NormReport norms;
    RegressionStats regression;
};

struct PicardOptions {
    double tol = 1e-6;
    int max_iter = 20;
    Scheme scheme = Scheme::Explicit;
    double norm_weight_c = 0.0;  // c for the stopping norm
};

// One application of the fixed-point map: the (U, V) family and then the
// derivative family are solved with (y, z) and the per-s martingale parts
// frozen from the input iterate; the first equation then reads the newly
// solved diagonals U_t^t and dU_t^t, the *input* z-diagonal, and the frozen
// z, matching the displayed map of the well-posedness argument. Each
// equation's own y-argument is handled by the sweep scheme.
SystemSolution apply_T(const SystemSolution& input, const SystemSpec& spec, const RegressionCache& reg,
                       Scheme scheme = Scheme::Explicit);

SystemSolution zero_iterate(const SystemSpec& spec, const PathEnsemble& ens);

// Banach iteration of apply_T from `start` (zero iterate when null) until
// the weighted product norm of successive differences drops below tol.
// Non-convergence is reported through the flag and trace, not an exception.
SystemSolution picard_solve(const SystemSpec& spec, const RegressionCache& reg, const PicardOptions& opt,
                            const SystemSolution* start = nullptr);

// Pathwise plug-back defect of the coupled system at the solution, with the
// martingale part removed by regression. For each equation the per-node
// projected residual RMS is accumulated over nodes; families report the
// worst s-slice.
struct ResidualReport {
    double y_equation = 0.0;
    double u_family = 0.0;
    double du_family = 0.0;

    double max() const { return std::max(y_equation, std::max(u_family, du_family)); }
};

ResidualReport residual_check(const SystemSolution& sol, const SystemSpec& spec, const RegressionCache& reg);

// Sample-max estimators of the small-data constituents, assembled per mode.
I0Terms estimate_I0_terms(const SystemSpec& spec, double c, const RegressionCache& reg);
double estimate_I0(const SystemSpec& spec, const std::vector<double>& eps, double c,
                   const RegressionCache& reg);

// Clip level that keeps every iterate's reported norm within radius R for
// weight c (coarse union bound over the tuple's components).
double ball_clip_level(double R, double c, double horizon, int m, int d);

}  // namespace bsvie
