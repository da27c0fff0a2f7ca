#include "helpers.hpp"
#include "property_suite.hpp"

#include <catch_amalgamated.hpp>

using namespace kt;

TEST_CASE("spectral invariants on every shipped ensemble") {
    for (const auto& name : kprop::shipped_ensembles(KESTEN_ENSEMBLE_DIR))
        for (const auto& c : kprop::spectral_checks(name, linear(name))) {
            INFO(c.ensemble << ": " << c.name << " (" << c.detail << ")");
            CHECK(c.ok);
        }
}

TEST_CASE("affine invariants on every shipped affine ensemble") {
    for (const auto& name : kprop::shipped_ensembles(KESTEN_ENSEMBLE_DIR)) {
        if (!has_translations(load(name)))
            continue;
        for (const auto& c : kprop::affine_checks(name, affine(name))) {
            INFO(c.ensemble << ": " << c.name << " (" << c.detail << ")");
            CHECK(c.ok);
        }
    }
}
