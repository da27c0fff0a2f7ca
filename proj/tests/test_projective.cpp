#include "helpers.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace kt;

TEST_CASE("grid sizes and quadrature weights") {
    for (auto mode : {GridMode::projective, GridMode::sphere}) {
        const auto g = DirectionGrid::build(2, 64, mode);
        CHECK(g->size() == 64);
        double total = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            total += g->weight(i);
            CHECK(g->node(i).norm() == Catch::Approx(1.0));
        }
        CHECK(total == Catch::Approx(1.0));
    }
    CHECK(DirectionGrid::build(1, 8, GridMode::sphere)->size() == 2);
    CHECK(DirectionGrid::build(1, 8, GridMode::projective)->size() == 1);
    const auto g3 = DirectionGrid::build(3, 200, GridMode::sphere);
    CHECK(g3->size() == 200);
    CHECK_THROWS_AS(DirectionGrid::build(4, 10, GridMode::sphere), InvalidInput);
}

TEST_CASE("antipode map is an involution") {
    const auto g = DirectionGrid::build(2, 64, GridMode::sphere);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const int a = g->antipode(i);
        REQUIRE(a >= 0);
        CHECK(g->antipode(static_cast<std::size_t>(a)) == static_cast<int>(i));
        CHECK((g->node(i) + g->node(static_cast<std::size_t>(a))).norm() < 1e-12);
    }
    const auto g3 = DirectionGrid::build(3, 100, GridMode::sphere);
    for (std::size_t i = 0; i < g3->size(); ++i)
        CHECK((g3->node(i) + g3->node(static_cast<std::size_t>(g3->antipode(i)))).norm() < 1e-12);
}

TEST_CASE("interpolation is exact at nodes and linear in angle") {
    const auto g = DirectionGrid::build(2, 32, GridMode::projective);
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = std::sin(3.0 * static_cast<double>(i));
    const GridFunction f{g, v};
    for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(interpolate(f, g->node(i)) == Catch::Approx(v[i]).margin(1e-12));
        CHECK(interpolate(f, -g->node(i)) == Catch::Approx(v[i]).margin(1e-12));
    }
    const double step = std::numbers::pi / 32;
    CHECK(interpolate(f, unit_angle(2.5 * step)) == Catch::Approx(0.5 * (v[2] + v[3])));
    // periodic wrap between the last node and node 0
    CHECK(interpolate(f, unit_angle(31.5 * step)) == Catch::Approx(0.5 * (v[31] + v[0])));
}

TEST_CASE("stencil weights are a partition of unity") {
    const auto g = DirectionGrid::build(3, 300, GridMode::projective);
    Engine rng = make_stream(5, 0, 0);
    for (int i = 0; i < 50; ++i) {
        const Stencil s = g->stencil(random_direction(3, rng));
        double w = 0.0;
        for (int k = 0; k < s.size; ++k) {
            CHECK(s.weight[k] >= 0.0);
            w += s.weight[k];
        }
        CHECK(w == Catch::Approx(1.0));
    }
}

TEST_CASE("distances") {
    const Vec x = unit_angle(0.0), y = unit_angle(std::numbers::pi);
    CHECK(distance(x, y, GridMode::projective) == Catch::Approx(0.0).margin(1e-15));
    CHECK(distance(x, y, GridMode::sphere) == Catch::Approx(2.0));
    const auto g = DirectionGrid::build(2, 64, GridMode::projective);
    CHECK(g->nearest(unit_angle(0.01)) == 0);
    CHECK(g->nearest(unit_angle(std::numbers::pi - 0.01)) == 0);
}

TEST_CASE("action and cocycle") {
    const Mat g = m2(2, 1, 0, 0.5);
    const Vec x = unit_angle(0.3);
    const Action a = act(g, x);
    CHECK(a.y.norm() == Catch::Approx(1.0));
    CHECK(std::exp(a.lognorm) == Catch::Approx((g * x).norm()));
    // additivity: log|g h x| = log|h x| + log|g (h.x)|
    const Mat h = rotation(0.7) * m2(1.5, 0, 0, 1 / 1.5);
    const Action ah = act(h, x);
    const Action agh = act(g * h, x);
    CHECK(agh.lognorm == Catch::Approx(ah.lognorm + act(g, ah.y).lognorm).epsilon(1e-12));
    CHECK_THROWS_AS(contact_cocycle(g, x, x), InvalidInput);
    // d = 2: x ^ y is a volume form, so the cocycle is log|det g| - 2 log|g x|
    const Vec y = unit_angle(1.1);
    CHECK(contact_cocycle(g, x, y) == Catch::Approx(std::log(1.0) - 2.0 * a.lognorm).margin(1e-12));
}

TEST_CASE("grid CSV export") {
    const auto g = DirectionGrid::build(2, 4, GridMode::projective);
    std::ostringstream os;
    g->write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("node_index,x0,x1,quadrature_weight\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 5);
}
