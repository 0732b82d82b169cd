#include <doctest.h>

#include <cmath>

#include "bsvie/bsde.hpp"

using namespace bsvie;

namespace {
const Driver kZeroDriver = [](const PathContext&, const double*, const double*, double* out) { out[0] = 0.0; };

std::vector<double> terminal_state(const PathEnsemble& ens) {
    std::vector<double> t(static_cast<std::size_t>(ens.n_paths));
    for (int p = 0; p < ens.n_paths; ++p) t[static_cast<std::size_t>(p)] = ens.state(p, ens.grid.num_steps())[0];
    return t;
}
}  // namespace

TEST_CASE("martingale representation: zero driver, terminal X_T") {
    const int P = 100000, N = 8;
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, build_grid(1.0, N), P, 11, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(3));
    const auto slice = backward_sweep(terminal_state(ens), 1, kZeroDriver, reg);

    const double dt = 1.0 / N;
    const double tol = 5.0 / std::sqrt(static_cast<double>(P)) + 2.0 * dt;
    for (int i = 0; i < N; ++i) {
        double rms_y = 0.0, rms_z = 0.0;
        for (int p = 0; p < P; ++p) {
            const double dy = slice.y.at(i, p)[0] - ens.state(p, i)[0];
            const double dz = slice.zeta.at(i, p)[0] - 1.0;
            rms_y += dy * dy;
            rms_z += dz * dz;
        }
        CHECK(std::sqrt(rms_y / P) <= tol);
        CHECK(std::sqrt(rms_z / P) <= tol);
    }
}

TEST_CASE("deterministic integrand is exact in exact-expectation mode") {
    const int N = 4;
    const auto ens = make_tree_ensemble(constant_sigma(1.0), {0.0}, build_grid(1.0, N));
    RegressionCache reg(ens, BasisSpec::binned(64));
    const Driver one = [](const PathContext&, const double*, const double*, double* out) { out[0] = 1.0; };
    std::vector<double> zero(static_cast<std::size_t>(ens.n_paths), 0.0);
    const auto slice = backward_sweep(zero, 1, one, reg);
    for (int i = 0; i <= N; ++i)
        for (int p = 0; p < ens.n_paths; ++p)
            CHECK(std::abs(slice.y.at(i, p)[0] - (N - i) * 0.25) <= 1e-14);
}

TEST_CASE("linear driver matches the exponential closed form at first order") {
    // dY = beta Y dt, Y_T = 1  =>  Y_0 = exp(-1). The explicit scheme gives
    // (1 - dt)^N; both the absolute error and the empirical order are
    // checked against the continuous solution.
    const Driver decay = [](const PathContext&, const double* y, const double*, double* out) { out[0] = -y[0]; };
    std::vector<double> errs;
    for (int N : {8, 16, 32}) {
        const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, build_grid(1.0, N), 4000, 3, 1);
        RegressionCache reg(ens, BasisSpec::polynomial(3));
        std::vector<double> one(static_cast<std::size_t>(ens.n_paths), 1.0);
        const auto slice = backward_sweep(one, 1, decay, reg);
        const double y0 = slice.y.at(0, 0)[0];
        CHECK(std::abs(y0 - std::pow(1.0 - 1.0 / N, N)) <= 1e-12);
        errs.push_back(std::abs(y0 - std::exp(-1.0)));
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double order = std::log2(errs[k] / errs[k + 1]);
        CHECK(order >= 0.7);
        CHECK(order <= 1.3);
    }
}

TEST_CASE("terminal exactness and zero-driver reduction are bit-exact") {
    const int P = 3000, N = 5;
    const auto ens = simulate_forward(constant_sigma(1.0), {0.3}, build_grid(1.0, N), P, 21, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(2));
    std::vector<double> term(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) term[static_cast<std::size_t>(p)] = std::tanh(ens.state(p, N)[0]);

    const auto slice = backward_sweep(term, 1, kZeroDriver, reg);
    for (int p = 0; p < P; ++p) CHECK(slice.y.at(N, p)[0] == term[static_cast<std::size_t>(p)]);

    // Iterated conditional expectation, independently recomputed.
    std::vector<double> cur = term;
    for (int i = N - 1; i >= 0; --i) {
        cur = reg.condexp(cur, 1, i);
        for (int p = 0; p < P; ++p) CHECK(slice.y.at(i, p)[0] == cur[static_cast<std::size_t>(p)]);
    }
}

TEST_CASE("linearity in the terminal for zero driver") {
    const int P = 2000, N = 4;
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, build_grid(1.0, N), P, 9, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(2));
    std::vector<double> a(static_cast<std::size_t>(P)), b(static_cast<std::size_t>(P)), mix(static_cast<std::size_t>(P));
    for (int p = 0; p < P; ++p) {
        a[static_cast<std::size_t>(p)] = std::sin(ens.state(p, N)[0]);
        b[static_cast<std::size_t>(p)] = ens.state(p, N)[0];
        mix[static_cast<std::size_t>(p)] = 1.5 * a[static_cast<std::size_t>(p)] + 0.5 * b[static_cast<std::size_t>(p)];
    }
    const auto sa = backward_sweep(a, 1, kZeroDriver, reg);
    const auto sb = backward_sweep(b, 1, kZeroDriver, reg);
    const auto sm = backward_sweep(mix, 1, kZeroDriver, reg);
    for (int i = 0; i <= N; ++i)
        for (int p = 0; p < P; p += 37)
            CHECK(sm.y.at(i, p)[0] ==
                  doctest::Approx(1.5 * sa.y.at(i, p)[0] + 0.5 * sb.y.at(i, p)[0]).epsilon(1e-9));
}

TEST_CASE("implicit scheme agrees with explicit within first order") {
    const Driver decay = [](const PathContext&, const double* y, const double*, double* out) { out[0] = -y[0]; };
    const int N = 16;
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, build_grid(1.0, N), 2000, 3, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(2));
    std::vector<double> one(static_cast<std::size_t>(ens.n_paths), 1.0);
    const auto ex = backward_sweep(one, 1, decay, reg, Scheme::Explicit);
    const auto im = backward_sweep(one, 1, decay, reg, Scheme::Implicit);
    // Implicit fixed point: y = y_next / (1 + dt).
    CHECK(im.y.at(0, 0)[0] == doctest::Approx(std::pow(1.0 + 1.0 / N, -N)).epsilon(1e-9));
    CHECK(std::abs(im.y.at(0, 0)[0] - ex.y.at(0, 0)[0]) <= 3.0 / N);
}

TEST_CASE("implicit non-convergence names the node") {
    // dt * Lipschitz >> 1 defeats the damped inner iteration.
    const Driver stiff = [](const PathContext&, const double* y, const double*, double* out) {
        out[0] = 1e9 * std::sin(1e4 * y[0]) + 1.0;
    };
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, build_grid(1.0, 2), 64, 3, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(1));
    std::vector<double> one(static_cast<std::size_t>(ens.n_paths), 1.0);
    CHECK_THROWS_WITH_AS(backward_sweep(one, 1, stiff, reg, Scheme::Implicit),
                         doctest::Contains("node"), NumericError);
}
