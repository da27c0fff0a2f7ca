#include "helpers.hpp"

#include <catch_amalgamated.hpp>

using namespace kt;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("structural validation names the offending atom") {
    auto e = scalar({{2.0, 0.4}, {1.0 / 3.0, 0.6}});
    CHECK_NOTHROW(validate_linear(e));

    auto bad_weight = e;
    bad_weight.atoms[1].weight = -0.6;
    CHECK_THROWS_WITH(validate_linear(bad_weight), ContainsSubstring("atom 1"));

    auto singular = e;
    singular.atoms[0].matrix(0, 0) = 0.0;
    CHECK_THROWS_WITH(validate_linear(singular), ContainsSubstring("atom 0"));

    auto sum = e;
    sum.atoms[0].weight = 0.5;
    CHECK_THROWS_WITH(validate_linear(sum), ContainsSubstring("weights sum"));

    auto nan = e;
    nan.atoms[1].matrix(0, 0) = std::nan("");
    CHECK_THROWS_AS(validate_linear(nan), InvalidInput);
}

TEST_CASE("gamma and norms of atoms") {
    const auto r = validate_linear(linear("ip_2d"));
    REQUIRE(r.atoms.size() == 2);
    CHECK(r.atoms[0].norm == Catch::Approx(0.85 * 1.5));
    CHECK(r.atoms[0].gamma >= 1.0);
    const auto rot = validate_linear(rotations());
    CHECK(rot.atoms[0].gamma == Catch::Approx(1.0));
}

TEST_CASE("transpose") {
    const auto e = linear("ip_2d");
    const auto t = transpose(e);
    CHECK(t.label == e.label + " (transposed)");
    CHECK((t.atoms[1].matrix - e.atoms[1].matrix.transpose()).norm() == 0.0);
    CHECK((transpose(t).atoms[1].matrix - e.atoms[1].matrix).norm() == 0.0);
}

TEST_CASE("proximality") {
    CHECK(check_proximality(scalar({{2.0, 1.0}}), 4, 64, 1).verdict == Verdict::pass);
    const auto ip = check_proximality(linear("ip_2d"), 6, 256, 1);
    CHECK(ip.verdict == Verdict::pass);
    CHECK_FALSE(ip.witness.empty());
    CHECK(check_proximality(rotations(), 6, 256, 1).verdict != Verdict::pass);
}

TEST_CASE("strong irreducibility") {
    CHECK(check_strong_irreducibility(linear("ip_2d"), 12).verdict == Verdict::pass);
    // diagonal matrices fix the two coordinate axes
    LinearEnsemble diag{2, {{m2(2, 0, 0, 0.5), 0.5}, {m2(0.5, 0, 0, 3), 0.5}}, "diag"};
    const auto r = check_strong_irreducibility(diag, 12);
    CHECK(r.verdict == Verdict::fail);
    // a rotation by pi/2 permutes the axes: still a finite invariant union
    LinearEnsemble perm{2, {{m2(2, 0, 0, 0.5), 0.5}, {rotation(std::numbers::pi / 2), 0.5}}, "perm"};
    CHECK(check_strong_irreducibility(perm, 12).verdict == Verdict::fail);
}

TEST_CASE("cone classification") {
    CHECK(classify_cone_case(linear("ip_2d"), 3).cone_case == ConeCase::I);
    const auto pos = classify_cone_case(linear("positive_2d"), 3);
    CHECK(pos.cone_case == ConeCase::II);
    REQUIRE_FALSE(pos.positive_attractor.empty());
    // the attractor of positive matrices is inside one closed quadrant
    const Vec& a = pos.positive_attractor.front();
    CHECK(a(0) * a(1) >= 0.0);
    CHECK(classify_cone_case(linear("kesten_1d"), 3).cone_case == ConeCase::II);
    CHECK(classify_cone_case(linear("symmetric_1d"), 3).cone_case == ConeCase::I);
}

TEST_CASE("nonarithmeticity in dimension one") {
    CHECK(check_nonarithmetic_1d(linear("kesten_1d")).verdict == Verdict::pass);
    CHECK(check_nonarithmetic_1d(linear("arithmetic_1d")).verdict == Verdict::fail);
    CHECK(check_nonarithmetic_1d(linear("deterministic_1d")).verdict == Verdict::fail);
}

TEST_CASE("affine validation rejects a common fixed point") {
    CHECK_NOTHROW(validate_affine(affine("kesten_1d")));
    const auto zero = with_translation(linear("kesten_1d"), v1(0.0));
    CHECK_THROWS_WITH(validate_affine(zero), ContainsSubstring("fixed point"));
    // x -> a x + (1 - a) fixes 1 for every a
    AffineEnsemble fixed{1, {{m1(2.0), v1(-1.0), 0.5}, {m1(0.5), v1(0.5), 0.5}}, "fixed"};
    CHECK_THROWS_AS(validate_affine(fixed), InvalidInput);
}

TEST_CASE("full validation report") {
    const auto r = validate_full(linear("kesten_1d"), 1);
    CHECK(r.proximality == Verdict::pass);
    CHECK(r.nonarithmetic == Verdict::pass);
    CHECK_FALSE(r.evidence.empty());
    const auto ar = validate_full(linear("arithmetic_1d"), 1);
    CHECK(ar.nonarithmetic == Verdict::fail);
}

TEST_CASE("json round trip and parse errors") {
    const auto doc = load("ip_2d");
    const auto e = linear_from_json(doc);
    const auto again = linear_from_json(to_json(e));
    CHECK((again.atoms[1].matrix - e.atoms[1].matrix).norm() == 0.0);
    CHECK(content_hash(doc) == content_hash(load("ip_2d")));
    CHECK(content_hash(doc) != content_hash(load("ip_2d_expanding")));

    Json nested = Json::parse(R"({"dimension": 2, "atoms": [
        {"matrix": [[1, 0], [0, 2]], "weight": 0.5},
        {"matrix": [[1, 0], [0]], "weight": 0.5}]})");
    CHECK_THROWS_WITH(linear_from_json(nested), ContainsSubstring("atom 1"));
    Json missing = Json::parse(R"({"atoms": []})");
    CHECK_THROWS_AS(linear_from_json(missing), InvalidInput);
    Json lin_only = Json::parse(R"({"dimension": 1, "atoms": [{"matrix": [2], "weight": 1}]})");
    CHECK_FALSE(has_translations(lin_only));
    CHECK_THROWS_WITH(affine_from_json(lin_only), ContainsSubstring("translation"));
}
