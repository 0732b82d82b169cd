#include <doctest.h>

#include <cmath>

#include "bsvie/paths.hpp"
#include "bsvie/rng.hpp"
#include "bsvie/threading.hpp"

using namespace bsvie;

TEST_CASE("uniform grid construction") {
    const TimeGrid g = build_grid(1.0, 4);
    REQUIRE(g.num_nodes() == 5);
    const double want[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i) CHECK(g.t(i) == doctest::Approx(want[i]).epsilon(1e-15));
    for (int i = 0; i < 4; ++i) CHECK(g.dt(i) == doctest::Approx(0.25).epsilon(1e-15));

    const TimeGrid g1 = build_grid(2.0, 1);
    CHECK(g1.t(0) == 0.0);
    CHECK(g1.t(1) == 2.0);

    CHECK_THROWS_AS(build_grid(1.0, 0), ConfigError);
    CHECK_THROWS_AS(build_grid(-1.0, 4), ConfigError);
}

TEST_CASE("philox known-answer vectors") {
    auto z = Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);

    auto f = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                               {0xffffffffu, 0xffffffffu});
    CHECK(f[0] == 0x408f276du);
    CHECK(f[1] == 0x41c83b0eu);
    CHECK(f[2] == 0xa20bc7c6u);
    CHECK(f[3] == 0x6d5451fdu);
}

TEST_CASE("zero volatility keeps paths at x0") {
    const TimeGrid g = build_grid(1.0, 8);
    const auto ens = simulate_forward(constant_sigma(0.0), {1.5}, g, 64, 7, 1);
    for (int p = 0; p < ens.n_paths; ++p)
        for (int i = 0; i <= 8; ++i) CHECK(ens.state(p, i)[0] == 1.5);
}

TEST_CASE("unit volatility terminal law and martingale/QV checks") {
    const int P = 100000;
    const TimeGrid g = build_grid(1.0, 16);
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, g, P, 42, 1);

    // Terminal mean/variance against the exact Gaussian law of the
    // discretised terminal state.
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < P; ++p) mean += ens.state(p, 16)[0];
    mean /= P;
    for (int p = 0; p < P; ++p) {
        const double d = ens.state(p, 16)[0] - mean;
        var += d * d;
    }
    var /= (P - 1);
    CHECK(std::abs(mean) <= 5.0 / std::sqrt(static_cast<double>(P)));
    CHECK(std::abs(var - 1.0) <= 0.1);

    // Martingale check at every node, 5 standard errors.
    for (int i = 0; i <= 16; ++i) {
        double mi = 0.0, vi = 0.0;
        for (int p = 0; p < P; ++p) mi += ens.state(p, i)[0];
        mi /= P;
        for (int p = 0; p < P; ++p) {
            const double d = ens.state(p, i)[0] - mi;
            vi += d * d;
        }
        vi /= (P - 1);
        const double se = std::sqrt(vi / P);
        CHECK(std::abs(mi) <= std::max(5.0 * se, 1e-12));
    }

    // Quadratic variation ratio, 5 standard errors.
    double rmean = 0.0, rvar = 0.0;
    std::vector<double> ratio(P);
    for (int p = 0; p < P; ++p) {
        double qv = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double dx = ens.state(p, i + 1)[0] - ens.state(p, i)[0];
            qv += dx * dx;
        }
        ratio[p] = qv / 1.0;
        rmean += ratio[p];
    }
    rmean /= P;
    for (int p = 0; p < P; ++p) rvar += (ratio[p] - rmean) * (ratio[p] - rmean);
    rvar /= (P - 1);
    CHECK(std::abs(rmean - 1.0) <= 5.0 * std::sqrt(rvar / P));
}

TEST_CASE("seed determinism across thread counts") {
    const TimeGrid g = build_grid(1.0, 8);
    set_thread_count(1);
    const auto a = simulate_forward(constant_sigma(1.0), {0.0}, g, 1000, 99, 2);
    set_thread_count(7);
    const auto b = simulate_forward(constant_sigma(1.0), {0.0}, g, 1000, 99, 2);
    set_thread_count(0);
    const auto c = simulate_forward(constant_sigma(1.0), {0.0}, g, 1000, 99, 2);
    CHECK(a.states == b.states);
    CHECK(a.increments == b.increments);
    CHECK(a.states == c.states);

    const auto d = simulate_forward(constant_sigma(1.0), {0.0}, g, 1000, 100, 2);
    CHECK(a.states != d.states);
}

TEST_CASE("path-dependent sigma sees only the prefix") {
    const TimeGrid g = build_grid(1.0, 4);
    // sigma = 1 + |X_t| reads the last prefix entry.
    SigmaSpec sig = [](int node, double, const double* prefix, int n_states, double* out) {
        CHECK(n_states == node + 1);
        out[0] = 1.0 + std::abs(prefix[n_states - 1]);
    };
    const auto ens = simulate_forward(sig, {0.5}, g, 16, 3, 1);
    for (int p = 0; p < 16; ++p)
        for (int i = 0; i < 4; ++i)
            CHECK(ens.sigma_at(p, i)[0] == doctest::Approx(1.0 + std::abs(ens.state(p, i)[0])));
}

TEST_CASE("non-finite sigma is a numeric error with location") {
    const TimeGrid g = build_grid(1.0, 4);
    SigmaSpec bad = [](int node, double, const double*, int, double* out) {
        out[0] = node == 2 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    CHECK_THROWS_AS(simulate_forward(bad, {0.0}, g, 4, 1, 1), NumericError);
}
