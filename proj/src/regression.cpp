#include "bsvie/regression.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <unordered_map>

#include "bsvie/common.hpp"
#include "bsvie/threading.hpp"

namespace bsvie {

BasisSpec BasisSpec::polynomial(int degree, double truncation) {
    require(degree >= 0, "basis: polynomial degree must be >= 0");
    require(truncation >= 0.0, "basis: truncation bound must be positive when present");
    BasisSpec b;
    b.kind = BasisKind::Polynomial;
    b.degree = degree;
    b.truncation = truncation;
    return b;
}

BasisSpec BasisSpec::binned(int bins, double truncation) {
    require(bins >= 1, "basis: bin count must be >= 1");
    require(truncation >= 0.0, "basis: truncation bound must be positive when present");
    BasisSpec b;
    b.kind = BasisKind::Bins;
    b.bins = bins;
    b.truncation = truncation;
    return b;
}

namespace {

// Exponent tuples with total degree <= degree, graded lexicographic.
std::vector<std::vector<int>> monomials(int n_vars, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(n_vars), 0);
    for (int total = 0; total <= degree; ++total) {
        std::function<void(int, int)> rec = [&](int var, int remaining) {
            if (var == n_vars) {
                if (remaining == 0) out.push_back(cur);
                return;
            }
            for (int e = 0; e <= remaining; ++e) {
                cur[static_cast<std::size_t>(var)] = e;
                rec(var + 1, remaining - e);
            }
            cur[static_cast<std::size_t>(var)] = 0;
        };
        rec(0, total);
    }
    return out;
}

struct CholFactor {
    int size = 0;
    std::vector<double> lower;  // row-major lower triangle
    bool ridge = false;
    double condition = 0.0;

    // Returns false when a pivot collapses.
    bool factor(const std::vector<double>& gram, int B, double ridge_lambda) {
        size = B;
        lower.assign(static_cast<std::size_t>(B) * B, 0.0);
        double trace = 0.0;
        for (int j = 0; j < B; ++j) trace += gram[static_cast<std::size_t>(j) * B + j];
        const double floor_pivot = std::max(trace / B, 1e-300) * 1e-12;
        double min_pivot = 1e300;
        for (int j = 0; j < B; ++j) {
            double d = gram[static_cast<std::size_t>(j) * B + j] + ridge_lambda;
            for (int k = 0; k < j; ++k) d -= lower[static_cast<std::size_t>(j) * B + k] * lower[static_cast<std::size_t>(j) * B + k];
            if (!(d > floor_pivot)) return false;
            min_pivot = std::min(min_pivot, d);
            const double lj = std::sqrt(d);
            lower[static_cast<std::size_t>(j) * B + j] = lj;
            for (int i = j + 1; i < B; ++i) {
                double s = gram[static_cast<std::size_t>(i) * B + j] + (i == j ? ridge_lambda : 0.0);
                for (int k = 0; k < j; ++k)
                    s -= lower[static_cast<std::size_t>(i) * B + k] * lower[static_cast<std::size_t>(j) * B + k];
                lower[static_cast<std::size_t>(i) * B + j] = s / lj;
            }
        }
        condition = (trace / B) / min_pivot;
        return true;
    }

    void solve_inplace(double* b) const {
        for (int i = 0; i < size; ++i) {
            double s = b[i];
            for (int k = 0; k < i; ++k) s -= lower[static_cast<std::size_t>(i) * size + k] * b[k];
            b[i] = s / lower[static_cast<std::size_t>(i) * size + i];
        }
        for (int i = size - 1; i >= 0; --i) {
            double s = b[i];
            for (int k = i + 1; k < size; ++k) s -= lower[static_cast<std::size_t>(k) * size + i] * b[k];
            b[i] = s / lower[static_cast<std::size_t>(i) * size + i];
        }
    }
};

}  // namespace

struct RegressionCache::Impl {
    std::vector<std::vector<int>> expts;  // monomial exponents
    int basis_size = 0;

    struct NodeData {
        CholFactor chol;                // polynomial mode
        std::vector<std::int32_t> group;  // bins mode: group id per path
        int n_groups = 0;
        bool prepared = false;
    };
    std::vector<NodeData> per_node;
    mutable std::atomic<int> fallback_nodes{0};
    mutable std::atomic<bool> ridge_any{false};
    double worst_condition = 0.0;

    void eval_basis(const double* x, int n, double* phi) const {
        // Fast path: scalar state, plain powers.
        if (n == 1) {
            double v = 1.0;
            for (int b = 0; b < basis_size; ++b) {
                phi[b] = v;
                v *= x[0];
            }
            return;
        }
        for (int b = 0; b < basis_size; ++b) {
            double v = 1.0;
            const auto& e = expts[static_cast<std::size_t>(b)];
            for (int k = 0; k < n; ++k)
                for (int r = 0; r < e[static_cast<std::size_t>(k)]; ++r) v *= x[k];
            phi[b] = v;
        }
    }
};

RegressionCache::RegressionCache(const PathEnsemble& ens, const BasisSpec& basis)
    : ens_(ens), basis_(basis), impl_(new Impl) {
    const int n = ens.dim_state;
    const int P = ens.n_paths;
    const int nodes = ens.grid.num_nodes();
    impl_->per_node.resize(static_cast<std::size_t>(nodes));

    if (basis.kind == BasisKind::Polynomial) {
        impl_->expts = monomials(n, basis.degree);
        impl_->basis_size = static_cast<int>(impl_->expts.size());
        const int B = impl_->basis_size;
        // Node 0 is served by the sample mean; factor the rest.
        for (int i = 1; i < nodes; ++i) {
            std::vector<std::vector<double>> partial(kChunks, std::vector<double>(static_cast<std::size_t>(B) * B, 0.0));
            parallel_chunks(P, [&](int c, std::int64_t lo, std::int64_t hi) {
                std::vector<double> phi(static_cast<std::size_t>(B));
                auto& g = partial[static_cast<std::size_t>(c)];
                for (std::int64_t p = lo; p < hi; ++p) {
                    impl_->eval_basis(ens.state(static_cast<int>(p), i), n, phi.data());
                    for (int a = 0; a < B; ++a)
                        for (int b = a; b < B; ++b) g[static_cast<std::size_t>(a) * B + b] += phi[a] * phi[b];
                }
            });
            std::vector<double> gram(static_cast<std::size_t>(B) * B, 0.0);
            for (const auto& g : partial)
                for (std::size_t k = 0; k < gram.size(); ++k) gram[k] += g[k];
            for (int a = 0; a < B; ++a)
                for (int b = 0; b < a; ++b) gram[static_cast<std::size_t>(a) * B + b] = gram[static_cast<std::size_t>(b) * B + a];

            auto& nd = impl_->per_node[static_cast<std::size_t>(i)];
            if (!nd.chol.factor(gram, B, 0.0)) {
                double trace = 0.0;
                for (int a = 0; a < B; ++a) trace += gram[static_cast<std::size_t>(a) * B + a];
                const double lambda = 1e-8 * trace / B;
                require(nd.chol.factor(gram, B, lambda), "regression: design matrix unusable even with ridge");
                nd.chol.ridge = true;
                impl_->ridge_any = true;
                impl_->fallback_nodes.fetch_add(1);
            }
            impl_->worst_condition = std::max(impl_->worst_condition, nd.chol.condition);
            nd.prepared = true;
        }
    } else {
        for (int i = 1; i < nodes; ++i) {
            auto& nd = impl_->per_node[static_cast<std::size_t>(i)];
            nd.group.resize(static_cast<std::size_t>(P));
            std::vector<double> lo(static_cast<std::size_t>(n), 1e300), hi(static_cast<std::size_t>(n), -1e300);
            for (int p = 0; p < P; ++p) {
                const double* x = ens.state(p, i);
                for (int k = 0; k < n; ++k) {
                    lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], x[k]);
                    hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], x[k]);
                }
            }
            std::unordered_map<std::int64_t, std::int32_t> remap;
            for (int p = 0; p < P; ++p) {
                const double* x = ens.state(p, i);
                std::int64_t key = 0;
                for (int k = 0; k < n; ++k) {
                    const double w = hi[static_cast<std::size_t>(k)] - lo[static_cast<std::size_t>(k)];
                    int idx = 0;
                    if (w > 0.0) {
                        idx = static_cast<int>((x[k] - lo[static_cast<std::size_t>(k)]) / w * basis_.bins);
                        idx = std::clamp(idx, 0, basis_.bins - 1);
                    }
                    key = key * basis_.bins + idx;
                }
                auto [it, inserted] = remap.emplace(key, static_cast<std::int32_t>(remap.size()));
                nd.group[static_cast<std::size_t>(p)] = it->second;
            }
            nd.n_groups = static_cast<int>(remap.size());
            nd.prepared = true;
        }
    }
}

RegressionCache::~RegressionCache() = default;

void RegressionCache::condexp(const double* values, int dim, int node, double* out) const {
    const int P = ens_.n_paths;
    for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(P) * dim; ++idx)
        if (!std::isfinite(values[idx])) throw NumericError("condexp: non-finite input value");

    if (node == 0) {
        // Trivial sigma-algebra at the start node: the fit is the mean.
        std::vector<std::vector<double>> partial(kChunks, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
        parallel_chunks(P, [&](int c, std::int64_t lo, std::int64_t hi) {
            auto& acc = partial[static_cast<std::size_t>(c)];
            for (std::int64_t p = lo; p < hi; ++p)
                for (int l = 0; l < dim; ++l) acc[static_cast<std::size_t>(l)] += values[p * dim + l];
        });
        std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
        for (const auto& a : partial)
            for (int l = 0; l < dim; ++l) mean[static_cast<std::size_t>(l)] += a[static_cast<std::size_t>(l)];
        for (int l = 0; l < dim; ++l) mean[static_cast<std::size_t>(l)] /= P;
        if (basis_.truncation > 0.0)
            for (int l = 0; l < dim; ++l)
                mean[static_cast<std::size_t>(l)] = std::clamp(mean[static_cast<std::size_t>(l)], -basis_.truncation, basis_.truncation);
        parallel_for(P, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t p = lo; p < hi; ++p)
                std::memcpy(out + p * dim, mean.data(), sizeof(double) * static_cast<std::size_t>(dim));
        });
        return;
    }

    const auto& nd = impl_->per_node[static_cast<std::size_t>(node)];
    const double clip = basis_.truncation;

    if (basis_.kind == BasisKind::Bins) {
        const int K = nd.n_groups;
        std::vector<std::vector<double>> psum(kChunks);
        std::vector<std::vector<std::int64_t>> pcnt(kChunks);
        parallel_chunks(P, [&](int c, std::int64_t lo, std::int64_t hi) {
            auto& s = psum[static_cast<std::size_t>(c)];
            auto& q = pcnt[static_cast<std::size_t>(c)];
            s.assign(static_cast<std::size_t>(K) * dim, 0.0);
            q.assign(static_cast<std::size_t>(K), 0);
            for (std::int64_t p = lo; p < hi; ++p) {
                const std::int32_t g = nd.group[static_cast<std::size_t>(p)];
                q[static_cast<std::size_t>(g)]++;
                for (int l = 0; l < dim; ++l) s[static_cast<std::size_t>(g) * dim + l] += values[p * dim + l];
            }
        });
        std::vector<double> sum(static_cast<std::size_t>(K) * dim, 0.0);
        std::vector<std::int64_t> cnt(static_cast<std::size_t>(K), 0);
        for (int c = 0; c < kChunks; ++c) {
            if (psum[static_cast<std::size_t>(c)].empty()) continue;
            for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += psum[static_cast<std::size_t>(c)][k];
            for (int k = 0; k < K; ++k) cnt[static_cast<std::size_t>(k)] += pcnt[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        }
        for (int g = 0; g < K; ++g)
            for (int l = 0; l < dim; ++l) sum[static_cast<std::size_t>(g) * dim + l] /= static_cast<double>(cnt[static_cast<std::size_t>(g)]);
        parallel_for(P, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t p = lo; p < hi; ++p) {
                const std::int32_t g = nd.group[static_cast<std::size_t>(p)];
                for (int l = 0; l < dim; ++l) {
                    double v = sum[static_cast<std::size_t>(g) * dim + l];
                    if (clip > 0.0) v = std::clamp(v, -clip, clip);
                    out[p * dim + l] = v;
                }
            }
        });
        return;
    }

    const int B = impl_->basis_size;
    const int n = ens_.dim_state;
    std::vector<std::vector<double>> partial(kChunks, std::vector<double>(static_cast<std::size_t>(B) * dim, 0.0));
    parallel_chunks(P, [&](int c, std::int64_t lo, std::int64_t hi) {
        std::vector<double> phi(static_cast<std::size_t>(B));
        auto& acc = partial[static_cast<std::size_t>(c)];
        for (std::int64_t p = lo; p < hi; ++p) {
            impl_->eval_basis(ens_.state(static_cast<int>(p), node), n, phi.data());
            const double* w = values + p * dim;
            for (int b = 0; b < B; ++b)
                for (int l = 0; l < dim; ++l) acc[static_cast<std::size_t>(b) * dim + l] += phi[b] * w[l];
        }
    });
    std::vector<double> rhs(static_cast<std::size_t>(B) * dim, 0.0);
    for (const auto& a : partial)
        for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += a[k];

    std::vector<double> coef(static_cast<std::size_t>(B) * dim);
    std::vector<double> col(static_cast<std::size_t>(B));
    for (int l = 0; l < dim; ++l) {
        for (int b = 0; b < B; ++b) col[static_cast<std::size_t>(b)] = rhs[static_cast<std::size_t>(b) * dim + l];
        nd.chol.solve_inplace(col.data());
        for (int b = 0; b < B; ++b) coef[static_cast<std::size_t>(b) * dim + l] = col[static_cast<std::size_t>(b)];
    }

    parallel_for(P, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> phi(static_cast<std::size_t>(B));
        for (std::int64_t p = lo; p < hi; ++p) {
            impl_->eval_basis(ens_.state(static_cast<int>(p), node), n, phi.data());
            for (int l = 0; l < dim; ++l) {
                double v = 0.0;
                for (int b = 0; b < B; ++b) v += phi[b] * coef[static_cast<std::size_t>(b) * dim + l];
                if (clip > 0.0) v = std::clamp(v, -clip, clip);
                out[p * dim + l] = v;
            }
        }
    });
}

std::vector<double> RegressionCache::condexp(const std::vector<double>& values, int dim, int node) const {
    std::vector<double> out(values.size());
    condexp(values.data(), dim, node, out.data());
    return out;
}

RegressionStats RegressionCache::stats() const {
    RegressionStats s;
    s.ridge_fallback = impl_->ridge_any.load();
    s.fallback_nodes = impl_->fallback_nodes.load();
    s.worst_condition = impl_->worst_condition;
    return s;
}

}  // namespace bsvie
