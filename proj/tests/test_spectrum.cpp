#include "helpers.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace kt;

namespace {
GridPtr proj(int n) { return DirectionGrid::build(2, n, GridMode::projective); }
double similarity_k(double s) { return 0.4 * std::pow(2.0, s) + 0.6 * std::pow(1.0 / 3.0, s); }
double similarity_L(double s) {
    return (0.4 * std::pow(2.0, s) * std::log(2.0) - 0.6 * std::pow(1.0 / 3.0, s) * std::log(3.0)) / similarity_k(s);
}
} // namespace

TEST_CASE("Monte Carlo oracle for k(s)") {
    CHECK(k_mc_oracle(linear("ip_2d"), 0.0, 30, 1000, 1).value == 1.0);
    const auto kes = k_mc_oracle(linear("kesten_1d"), 1.0, 20, 100000, 2);
    CHECK(std::abs(kes.value - 1.0) < 4.0 * kes.std_error);
    const auto sim = k_mc_oracle(linear("similarity_2d"), 2.0, 20, 100000, 3);
    CHECK(std::abs(sim.value - (0.4 * 4 + 0.6 / 9)) < 4.0 * sim.std_error);
    CHECK_THROWS_AS(k_mc_oracle(linear("ip_2d"), 1.0, 0, 100, 1), InvalidInput);
}

TEST_CASE("tail index") {
    const auto g = proj(512);
    KFunction k1(linear("kesten_1d"), DirectionGrid::build(1, 1, GridMode::projective));
    CHECK(solve_alpha(k1).alpha == Catch::Approx(1.0).margin(1e-10));

    KFunction k2(linear("similarity_2d"), g);
    const auto a2 = solve_alpha(k2, 0.05, 2.0, 1e-10);
    CHECK(a2.alpha == Catch::Approx(1.0).margin(1e-8));
    CHECK(std::abs(a2.k_at_alpha - 1.0) < 1e-9);

    // all norms <= 1: k is non-increasing, no root
    LinearEnsemble small{2, {{rotation(1.0), 0.5}, {0.5 * rotation(2.0), 0.5}}, "small"};
    KFunction k3(small, g);
    CHECK_THROWS_WITH(solve_alpha(k3), Catch::Matchers::ContainsSubstring("no root"));
    // expanding ensembles have k > 1 right after 0
    KFunction k4(linear("ip_2d_expanding"), g);
    CHECK_THROWS_AS(solve_alpha(k4), HypothesisViolation);
}

TEST_CASE("Lyapunov exponents in closed form") {
    const auto e = linear("kesten_1d");
    const auto g1 = DirectionGrid::build(1, 1, GridMode::projective);
    KFunction k(e, g1);
    CHECK(lyapunov_finite_diff(k, 0.0) == Catch::Approx(0.4 * std::log(2.0) - 0.6 * std::log(3.0)).margin(1e-14));
    CHECK(lyapunov_finite_diff(k, 1.0) == Catch::Approx(0.8 * std::log(2.0) - 0.2 * std::log(3.0)).margin(1e-14));
    CHECK(lyapunov_finite_diff(k, 1.0) == Catch::Approx(0.3348).margin(1e-4));

    const auto sim = linear("similarity_2d");
    const auto g = proj(256);
    KFunction ks(sim, g);
    for (double s : {0.0, 1.0, 2.0}) {
        const auto sp = power_iterate(sim, s, g, {.with_dual = false});
        CHECK(lyapunov_finite_diff(ks, s) == Catch::Approx(similarity_L(s)).margin(1e-7));
        CHECK(lyapunov_quadrature(sim, sp) == Catch::Approx(similarity_L(s)).margin(1e-9));
        const auto mc = lyapunov_tilted_mc(sim, sp, 4, {.n_chains = 16, .n_steps = 20000});
        CHECK(std::abs(mc.value - similarity_L(s)) < 4.0 * mc.std_error + 1e-3);
    }
}

TEST_CASE("positive exponent at alpha") {
    const auto e = linear("ip_2d");
    const auto g = proj(512);
    KFunction k(e, g);
    const double L0 = lyapunov_finite_diff(k, 0.0);
    REQUIRE(L0 < 0.0);
    const auto a = solve_alpha(k);
    const auto sp = power_iterate(e, a.alpha, g, {.with_dual = false});
    const double fd = lyapunov_finite_diff(k, a.alpha);
    const double quad = lyapunov_quadrature(e, sp);
    const auto mc = lyapunov_tilted_mc(e, sp, 8);
    CHECK(fd > 0.0);
    CHECK(mc.value - 3.0 * mc.std_error > 0.0);
    CHECK(std::abs(fd - quad) < 1e-6);
    CHECK(std::abs(fd - mc.value) < std::max(0.05 * std::abs(fd), 0.01 + 3.0 * mc.std_error));
}

TEST_CASE("Lyapunov gap") {
    const auto g = proj(256);
    const auto rot = rotations();
    const auto gr = lyapunov_gap(rot, power_iterate(rot, 0.0, g, {.with_dual = false}), 1, {.n = 20, .n_triples = 4, .n_paths = 64});
    CHECK(std::abs(gr.value) < 1e-10);

    const LinearEnsemble diag{2, {{m2(2, 0, 0, 0.5), 1.0}}, "diag"};
    const auto gd = lyapunov_gap(diag, power_iterate(diag, 0.0, g, {.with_dual = false}), 2, {.n = 300, .n_triples = 4, .n_paths = 8});
    CHECK(gd.value == Catch::Approx(-2.0 * std::log(2.0)).epsilon(0.02));

    const auto e = linear("ip_2d");
    KFunction k(e, g);
    const double alpha = solve_alpha(k).alpha;
    for (double s : {0.0, alpha}) {
        const auto gap = lyapunov_gap(e, power_iterate(e, s, g, {.with_dual = false}), 3);
        CHECK(gap.value + 3.0 * gap.std_error < 0.0);
    }
}

TEST_CASE("contraction rate") {
    const auto g = proj(256);
    const auto rot = rotations();
    const ContractionParams small{.n = 5, .n_pairs = 8, .n_worst = 2, .n_prescan = 16, .n_paths = 32};
    const auto r = contraction_rate(rot, power_iterate(rot, 0.5, g, {.with_dual = false}), 0.5, 1, small);
    CHECK(r.value == Catch::Approx(1.0).epsilon(1e-9));

    const auto e = linear("ip_2d");
    const auto sp = power_iterate(e, 1.0, g, {.with_dual = false});
    const auto rho = contraction_rate(e, sp, 0.1, 2);
    CHECK(rho.value + 3.0 * rho.std_error < 1.0);
    const auto tiny = contraction_rate(e, sp, 1e-9, 2, small);
    CHECK(tiny.value == Catch::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("backward direction") {
    const auto g = proj(256);
    const LinearEnsemble diag{2, {{m2(2, 0, 0, 0.5), 1.0}}, "diag"};
    const auto bd = backward_direction(diag, power_iterate(diag, 0.0, g, {.with_dual = false}), 40, 1);
    CHECK(std::abs(bd.z_star(0)) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(bd.max_residual < 1e-12);
    CHECK_FALSE(bd.degenerate);

    const auto rot = rotations();
    CHECK(backward_direction(rot, power_iterate(rot, 0.0, g, {.with_dual = false}), 40, 1).degenerate);

    const auto e = linear("ip_2d");
    const auto sp = power_iterate(e, 1.0, g);
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto b = backward_direction(e, sp, 200, 7, i);
        CHECK(b.max_residual < 1e-3);
        CHECK_FALSE(b.degenerate);
    }
    // the law of z* approaches *pi^s
    const LinearEnsemble star = transpose(e);
    const auto sp_star = power_iterate(star, 1.0, g, {.with_dual = false});
    const double tv = backward_direction_law_distance(e, sp, sp_star, 60, 2000, 11, 8);
    CHECK(tv < 0.1);
}

TEST_CASE("renormalized products keep exact logarithms") {
    const auto e = linear("ip_2d");
    Engine rng = make_stream(1, 2, 3);
    const auto cum = e.cumulative();
    for (int rep = 0; rep < 20; ++rep) {
        ScaledProduct p(2, 7);
        Mat direct = Mat::Identity(2, 2);
        const Vec x = random_direction(2, rng);
        Vec y = x;
        double incremental = 0.0;
        for (int n = 0; n < 50; ++n) {
            const Mat& g = e.atoms[static_cast<std::size_t>(draw_index(cum, rng))].matrix;
            p.left_multiply(g);
            direct = g * direct;
            const Action a = act(g, y);
            incremental += a.lognorm;
            y = a.y;
        }
        CHECK(std::abs(incremental - std::log((direct * x).norm())) < 1e-10);
        CHECK(std::abs(p.log_norm() - std::log(op_norm(direct))) < 1e-10);
    }
}

TEST_CASE("spectral curve export") {
    const auto e = linear("ip_2d");
    const auto curve = spectral_curve(e, {0.0, 0.5, 1.0}, proj(128));
    REQUIRE(curve.rows.size() == 3);
    CHECK(curve.rows[0].k == Catch::Approx(1.0));
    CHECK(curve.L_mu_0 < 0.0);
    std::ostringstream os;
    write_curve_csv(curve, os);
    CHECK(os.str().rfind("s,k,log_k,L_finite_diff,L_tilted_mc", 0) == 0);
    CHECK_THROWS_AS(spectral_curve(e, {1.0, 0.5}, proj(16)), InvalidInput);
    CHECK_THROWS_AS(spectral_curve(e, {-1.0, 0.5}, proj(16)), InvalidInput);
}
