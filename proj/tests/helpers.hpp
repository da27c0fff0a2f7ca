#pragma once

#include "kesten/kesten.hpp"

#include <cmath>
#include <string>

namespace kt {

using namespace kesten;

inline Json load(const std::string& name) { return read_json_file(std::string(KESTEN_ENSEMBLE_DIR) + "/" + name + ".json"); }
inline LinearEnsemble linear(const std::string& name) { return linear_from_json(load(name)); }
inline AffineEnsemble affine(const std::string& name) { return affine_from_json(load(name)); }

inline Mat m1(double a) {
    Mat m(1, 1);
    m(0, 0) = a;
    return m;
}
inline Mat m2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}
inline Mat rotation(double t) { return m2(std::cos(t), -std::sin(t), std::sin(t), std::cos(t)); }
inline Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}
inline Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}
inline Vec unit_angle(double t) { return v2(std::cos(t), std::sin(t)); }

inline LinearEnsemble scalar(std::initializer_list<std::pair<double, double>> atoms) {
    LinearEnsemble e{1, {}, "scalar"};
    for (auto [a, w] : atoms)
        e.atoms.push_back({m1(a), w});
    return e;
}

inline AffineEnsemble with_translation(const LinearEnsemble& e, const Vec& b) {
    AffineEnsemble ae{e.dimension, {}, e.label};
    for (const auto& a : e.atoms)
        ae.atoms.push_back({a.matrix, b, a.weight});
    return ae;
}

inline LinearEnsemble rotations() {
    return {2, {{rotation(1.0), 0.5}, {rotation(std::sqrt(2.0)), 0.5}}, "rotations"};
}

} // namespace kt
