#pragma once

#include <functional>

#include "bsvie/fields.hpp"
#include "bsvie/regression.hpp"

namespace bsvie {

// Pathwise evaluation context handed to coefficient functions.
struct PathContext {
    const PathEnsemble* ens = nullptr;
    int node = 0;
    int path = 0;
    double t = 0.0;

    const double* state() const { return ens->state(path, node); }
    double state(int k) const { return ens->state(path, node)[k]; }
    const double* prefix() const { return ens->path_prefix(path); }
};

// driver(ctx, y, zeta, out): y is d-dimensional, zeta is the sigma^T Z
// aggregate (m x d, column-major: zeta[l*m + k]), out is d-dimensional.
using Driver = std::function<void(const PathContext&, const double* y, const double* zeta, double* out)>;

enum class Scheme { Explicit, Implicit };

// One backward pass for a single BSDE. Y[node][path] (dim d) and the
// aggregate Zeta[node][path] (dim m*d). Zeta at the terminal node is zero.
struct BsdeSlice {
    NodeField y;
    NodeField zeta;
};

// Explicit: Y_i = E_i[Y_{i+1}] + dt * driver(t_i, ., Yproxy, Zeta_i) with
// Yproxy = E_i[Y_{i+1}].  Implicit: the driver's y-argument is the fixed
// point of y = Yproxy + dt * driver(., y, Zeta_i), damped iteration,
// at most 50 steps to 1e-12. Zeta_i is the increment regression
// E_i[dB (Y_{i+1} - Yproxy)^T] / dt (the proxy term has zero conditional
// expectation; subtracting it is plain variance reduction).
// Driver time integration uses the left point throughout.
BsdeSlice backward_sweep(const std::vector<double>& terminal, int dim, const Driver& driver,
                         const RegressionCache& reg, Scheme scheme = Scheme::Explicit);

}  // namespace bsvie
