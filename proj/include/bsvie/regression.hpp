#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bsvie/paths.hpp"

namespace bsvie {

enum class BasisKind { Polynomial, Bins };

// Numerical stand-in for the conditional expectation E[. | F_{t_i}] by
// least-squares projection on functions of the current state.
//  - Polynomial: monomials in the state components up to total degree.
//  - Bins: piecewise-constant indicators on a per-component quantisation of
//    the state; the fit is the exact per-group sample mean, which reproduces
//    conditional expectations exactly on exhaustive tree ensembles with
//    state-dependent (Markov) data.
// An optional truncation bound clips fitted values componentwise, the
// discrete analogue of solving on a ball of fixed radius.
struct BasisSpec {
    BasisKind kind = BasisKind::Polynomial;
    int degree = 3;      // polynomial total degree
    int bins = 64;       // bins per state component
    double truncation = 0.0;  // > 0 enables clipping to [-truncation, truncation]

    static BasisSpec polynomial(int degree, double truncation = 0.0);
    static BasisSpec binned(int bins, double truncation = 0.0);
};

// Per-run regression diagnostics, surfaced in the run report.
struct RegressionStats {
    bool ridge_fallback = false;    // any rank-deficient node solved with ridge
    double worst_condition = 0.0;   // max diag(G)/min pivot seen
    int fallback_nodes = 0;
};

// Caches per-node design data (Gram factor for polynomials, group index for
// bins) for one immutable ensemble. Prepare once, then condexp() is safe to
// call from multiple threads.
class RegressionCache {
public:
    RegressionCache(const PathEnsemble& ens, const BasisSpec& basis);
    ~RegressionCache();

    // Fitted values of the projection of `values` (n_paths x dim, path-major)
    // onto the node-i basis, written to `out` (same shape). Node 0 carries no
    // information beyond the initial state, so the fit is the sample mean.
    void condexp(const double* values, int dim, int node, double* out) const;

    std::vector<double> condexp(const std::vector<double>& values, int dim, int node) const;

    const BasisSpec& basis() const { return basis_; }
    const PathEnsemble& ensemble() const { return ens_; }
    RegressionStats stats() const;

private:
    struct Impl;
    const PathEnsemble& ens_;
    BasisSpec basis_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bsvie
