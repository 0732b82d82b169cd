#include <doctest.h>

#include <cmath>
#include <random>

#include "bsvie/constants.hpp"
#include "bsvie/family.hpp"
#include "bsvie/norms.hpp"

using namespace bsvie;

TEST_CASE("weighted norms on deterministic fields equal their closed forms") {
    const TimeGrid grid = build_grid(1.0, 8);
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, grid, 500, 3, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(2));

    SUBCASE("constant process, c = 0") {
        NodeField y(9, 500, 1);
        for (auto& v : y.data) v = 2.0;
        CHECK(sup_norm(y, 0.0, grid) == doctest::Approx(2.0).epsilon(1e-15));
    }

    SUBCASE("exponential weight cancellation") {
        const double c = 3.0;
        NodeField y(9, 500, 1);
        for (int i = 0; i <= 8; ++i)
            for (int p = 0; p < 500; ++p) y.at(i, p)[0] = std::exp(-0.5 * c * grid.t(i));
        CHECK(sup_norm(y, c, grid) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("unit field BMO estimate is the full tail") {
        NodeField zeta(9, 500, 1);
        for (auto& v : zeta.data) v = 1.0;
        CHECK(bmo_norm_sq(zeta, 0.0, reg) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(h2_norm_sq(zeta, 0.0, grid) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("energy inequality") {
    const TimeGrid grid = build_grid(1.0, 8);
    const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, grid, 2000, 5, 1);
    RegressionCache reg(ens, BasisSpec::polynomial(2));

    SUBCASE("deterministic unit field, p = 2") {
        NodeField zeta(9, 2000, 1);
        for (auto& v : zeta.data) v = 1.0;
        const auto chk = energy_check(zeta, 0.0, 2, reg);
        CHECK(chk.lhs == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(chk.rhs == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(chk.pass);
    }

    SUBCASE("zero field") {
        NodeField zeta(9, 2000, 1);
        const auto chk = energy_check(zeta, 0.0, 1, reg);
        CHECK(chk.lhs == 0.0);
        CHECK(chk.rhs == 0.0);
        CHECK(chk.pass);
    }

    SUBCASE("solved-field property: both powers pass") {
        RegressionCache reg3(ens, BasisSpec::polynomial(3));
        std::vector<double> term(2000);
        for (int p = 0; p < 2000; ++p) term[static_cast<std::size_t>(p)] = std::tanh(ens.state(p, 8)[0]);
        const Driver drv = [](const PathContext&, const double* y, const double* z, double* out) {
            out[0] = -0.5 * y[0] + 0.25 * z[0];
        };
        const auto slice = backward_sweep(term, 1, drv, reg3);
        for (int pw : {1, 2})
            for (double c : {0.0, 1.0}) {
                const auto chk = energy_check(slice.zeta, c, pw, reg3);
                CHECK(chk.pass);
            }
    }
}

TEST_CASE("diagonal energy inequality") {
    const TimeGrid grid = build_grid(1.0, 8);
    const int N = 8, P = 9;

    SUBCASE("s-independent field: derivative contributes nothing") {
        FamilyField v(N + 1, N + 1, P, 1), dv(N + 1, N + 1, P, 1);
        for (int s = 0; s <= N; ++s)
            for (int i = 0; i <= N; ++i)
                for (int p = 0; p < P; ++p) v.at(s, i, p)[0] = std::sin(i + 0.2 * p);
        const auto chk = diagonal_energy_check(v, dv, 0.5, 1.0, grid);
        CHECK(chk.pass);
    }

    SUBCASE("linear-in-s field: both sides finite and ordered") {
        FamilyField v(N + 1, N + 1, P, 1), dv(N + 1, N + 1, P, 1);
        for (int s = 0; s <= N; ++s)
            for (int i = 0; i <= N; ++i)
                for (int p = 0; p < P; ++p) {
                    const double zeta = 1.0 + 0.1 * i + 0.05 * p;
                    v.at(s, i, p)[0] = grid.t(s) * zeta;
                    dv.at(s, i, p)[0] = zeta;
                }
        for (double eps : {0.25, 1.0, 4.0}) {
            const auto chk = diagonal_energy_check(v, dv, 1.0, eps, grid);
            CHECK(chk.pass);
            CHECK(chk.worst_lhs > 0.0);
            CHECK(chk.worst_rhs >= chk.worst_lhs - 1e-9);
        }
    }

    SUBCASE("solved family") {
        const auto ens = simulate_forward(constant_sigma(1.0), {0.0}, grid, 4000, 7, 1);
        RegressionCache reg(ens, BasisSpec::polynomial(3));
        FamilyTerminal eta = [](int, double s, const PathContext& ctx, double* out) {
            out[0] = s * std::tanh(ctx.state(0));
        };
        FamilyDriver g = [](int, double, const PathContext&, const double* u, const double*, const double*,
                            const double*, double* out) { out[0] = -u[0]; };
        const auto fam = solve_family(eta, g, FrozenPair{}, reg, 1);
        FamilyTerminal d_eta = [](int, double, const PathContext& ctx, double* out) {
            out[0] = std::tanh(ctx.state(0));
        };
        GradFamilyDriver grad = [](int, double, const PathContext&, const double* du, const double*,
                                   const double*, const double*, const double*, const double*, double* out) {
            out[0] = -du[0];
        };
        const auto dfam = solve_grad_family(d_eta, grad, fam, FrozenPair{}, reg, 1);
        const auto chk = diagonal_energy_check(fam.v, dfam.v, 1.0, 1.0, grid);
        CHECK(chk.pass);
    }
}

TEST_CASE("c_eps evaluation") {
    SUBCASE("quadratic mode printed example") {
        GrowthConstants k;
        k.L_du = 1.0;
        CHECK(compute_c_eps({7.0, 7.0}, k, 1.0, Mode::Quadratic) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("vanishing constants leave the bare time term") {
        GrowthConstants k;  // all zero
        CHECK(compute_c_eps({7.0, 2.0}, k, 1.0, Mode::Quadratic) == doctest::Approx(3.5).epsilon(1e-15));
    }
    SUBCASE("five-variable simplification reproduces the general formula") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(0.1, 5.0);
        for (int trial = 0; trial < 200; ++trial) {
            GrowthConstants k;
            k.L_y = unif(rng);
            k.L_u = unif(rng);
            k.L_du = unif(rng);
            const double T = unif(rng);
            const double t1 = unif(rng), t4 = unif(rng), t5 = unif(rng);
            // eps = (t1, t1, ., ., ., t1, t4, t5, t5, t5, t4)
            const std::vector<double> eps = {t1, t1, 1.0, 1.0, 1.0, t1, t4, t5, t5, t5, t4};
            const double general = compute_c_eps(eps, k, T, Mode::LipschitzQuadratic);
            const double Ly = k.L_y, Lu = k.L_u, Ldu = k.L_du;
            const double simplified = std::max({
                2 * Ly + 7 * T * Ldu * Ldu / t1 + 2 * t1 * T * Ly * Ly + Lu * Lu / t4 + 3 * t5,
                2 * Lu + 7 * T / t1 + t4 + Ly * Ly / t5,
                2 * Ldu + Ly * Ly / t5 + Lu * Lu / t4,
                2 * Lu + 2 * t1 * T * Lu * Lu + Ly * Ly / t5 + t4,
                8 * Ly + 2 * T * Ly + 2 * T * Ldu * Ly,
                4 * Lu + 2 * T * Lu + 2 * T * Ldu * Lu,
            });
            CHECK(general == doctest::Approx(simplified).epsilon(1e-12));
        }
    }
    SUBCASE("nonpositive eps is a configuration error") {
        GrowthConstants k;
        CHECK_THROWS_AS(compute_c_eps({0.0, 1.0}, k, 1.0, Mode::Quadratic), ConfigError);
    }
}

TEST_CASE("radius bounds") {
    CHECK(compute_radius_bound(10, 1.0, 1.0, Mode::LipschitzQuadratic) ==
          doctest::Approx(1.0 / 1680.0).epsilon(1e-15));
    CHECK(compute_radius_bound(10, 1.0, 1.0, Mode::Quadratic) == doctest::Approx(1.0 / 6720.0).epsilon(1e-15));
    CHECK(compute_radius_bound(7, 1.0, 1.0, Mode::LipschitzQuadratic) ==
          doctest::Approx(1.0 / 1176.0).epsilon(1e-15));
    CHECK(compute_radius_bound(10, 1.0, 3.0, Mode::Quadratic) ==
          doctest::Approx(1.0 / (3360.0 * 9.0)).epsilon(1e-15));
    CHECK(std::isinf(compute_radius_bound(10, 0.0, 1.0, Mode::LipschitzQuadratic)));

    // Monotone in kappa and Lstar.
    double prev = 1e300;
    for (int kappa : {1, 2, 7, 10, 11}) {
        const double u = compute_radius_bound(kappa, 1.0, 1.0, Mode::LipschitzQuadratic);
        CHECK(u < prev);
        prev = u;
    }
    prev = 1e300;
    for (double L : {0.1, 0.5, 1.0, 2.0}) {
        const double u = compute_radius_bound(10, L, 1.0, Mode::LipschitzQuadratic);
        CHECK(u < prev);
        prev = u;
    }
}

TEST_CASE("certifier conditions and boundaries") {
    GrowthConstants k;
    k.L_z = k.L_v = k.L_dv = 1.0;

    SUBCASE("sqrt condition at kappa = 10 with small eps") {
        CertInputs in;
        in.kappa = 10;
        in.eps = default_eps(Mode::LipschitzQuadratic);
        in.eps[0] = in.eps[1] = 0.0 + 1e-12;
        in.constants = k;
        in.R2 = 1e-6;
        in.gamma = 0.25;
        in.I0 = 0.0;
        const auto rep = certify(in);
        CHECK(rep.sqrt_condition);  // (sqrt 30 + sqrt 30)^2 = 120 <= 280
    }

    SUBCASE("eps1 + eps2 boundary") {
        const double boundary = std::pow(2.0 * std::sqrt(70.0) - std::sqrt(30.0), 2.0) - 30.0;
        CHECK(boundary == doctest::Approx(96.697).epsilon(1e-4));
        for (double delta : {-1e-6, 1e-6}) {
            CertInputs in;
            in.kappa = 10;
            in.eps = default_eps(Mode::LipschitzQuadratic);
            in.eps[0] = 0.5 * (boundary + delta);
            in.eps[1] = 0.5 * (boundary + delta);
            in.constants = k;
            in.R2 = 1e-6;
            const auto rep = certify(in);
            CHECK(rep.sqrt_condition == (delta < 0));
        }
        // +0.1 beyond the boundary fails.
        CertInputs in;
        in.kappa = 10;
        in.eps = default_eps(Mode::LipschitzQuadratic);
        in.eps[0] = boundary + 0.1;
        in.eps[1] = 1e-9;
        in.constants = k;
        in.R2 = 1e-6;
        CHECK_FALSE(certify(in).sqrt_condition);
    }

    SUBCASE("radius condition is strict and conservative") {
        CertInputs in;
        in.kappa = 10;
        in.constants = k;
        in.R2 = compute_radius_bound(10, 1.0, 1.0, Mode::LipschitzQuadratic);
        auto rep = certify(in);
        CHECK_FALSE(rep.radius_condition);
        CHECK(rep.radius_bound_discrepancy);
        CHECK(rep.R2_bound == doctest::Approx(1.0 / 16800.0).epsilon(1e-15));

        in.R2 = 0.5 / 16800.0;
        rep = certify(in);
        CHECK(rep.radius_condition);
    }

    SUBCASE("weight condition compares against c_eps") {
        CertInputs in;
        in.kappa = 10;
        in.mode = Mode::Quadratic;
        GrowthConstants kq;
        kq.L_du = 1.0;
        kq.L_z = 1.0;
        in.constants = kq;
        in.eps = {7.0, 7.0, 1.0, 1.0, 1.0, 1.0};
        in.R2 = 1e-9;
        in.c = 1.0;  // c_eps = 2
        auto rep = certify(in);
        CHECK_FALSE(rep.weight_condition);
        in.c = std::numeric_limits<double>::quiet_NaN();
        rep = certify(in);
        CHECK(rep.weight_condition);
        CHECK(rep.c_used == doctest::Approx(2.0));
    }

    SUBCASE("overall pass is the conjunction") {
        CertInputs in;
        in.kappa = 10;
        in.constants = k;
        in.R2 = 0.5 / 16800.0;
        in.I0 = 0.25 * in.R2 / 10.0 * 0.9;
        const auto rep = certify(in);
        CHECK(rep.sqrt_condition);
        CHECK(rep.i0_condition);
        CHECK(rep.radius_condition);
        CHECK(rep.weight_condition);
        CHECK(rep.pass);
    }
}

TEST_CASE("optimisation bounds verified by brute force") {
    const auto rep = verify_lemmas(1000);
    CHECK(rep.pass);
    CHECK(rep.radius_opt_alpha == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(rep.radius_opt_value == doctest::Approx(1.0 / 840.0).epsilon(1e-9));
    CHECK(rep.radius_rel_error <= 1e-3);
    CHECK(rep.radius_discrepancy);  // 1/840 vs the documented 1/80
    CHECK(rep.contraction_value_at_zero == doctest::Approx(360.0).epsilon(1e-9));
    CHECK(rep.contraction_opt_eps == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(rep.admissible_eps_sum ==
          doctest::Approx(std::pow(2.0 * std::sqrt(70.0) - std::sqrt(30.0), 2.0) - 30.0).epsilon(1e-12));
    CHECK(rep.admissible_eps_sum == doctest::Approx(96.697).epsilon(1e-4));
    CHECK_THROWS_AS(verify_lemmas(10), ConfigError);
}

TEST_CASE("lstar per mode") {
    GrowthConstants k;
    k.L_y = 3.0;
    k.L_z = 1.0;
    k.L_v = 2.0;
    CHECK(l_star(k, Mode::LipschitzQuadratic) == 2.0);
    CHECK(l_star(k, Mode::Quadratic) == 3.0);
}
