#pragma once

#include "bsvie/system.hpp"

namespace bsvie {

// Exact conditional expectation on an exhaustive two-point tree ensemble:
// paths sharing increment signs 0..node-1 form one group, the estimate is
// the group average. Requires an ensemble built by make_tree_ensemble.
void tree_condexp(const PathEnsemble& ens, const double* values, int dim, int node, double* out);

struct TreeSolveResult {
    SystemSolution solution;
    int iterations = 0;
    double final_change = 0.0;
    bool converged = false;
};

// Solves the coupled system on a tree ensemble by damped fixed-point
// iteration over the whole field tuple, every conditional expectation taken
// by exact branch summation. Independent of the regression/sweep machinery;
// the discrete time-stepping conventions are the same by construction, so a
// converged regression solve in exact-expectation mode must agree to
// rounding.
TreeSolveResult tree_solve_system(const SystemSpec& spec, const PathEnsemble& tree_ens, double tol = 1e-14,
                                  int max_iter = 20000, double damping = 0.5);

}  // namespace bsvie
