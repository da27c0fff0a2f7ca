#ifndef KESTEN_LINALG_HPP
#define KESTEN_LINALG_HPP

#include "kesten/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kesten {

/// Singular values of a small matrix, descending.
inline Vec singular_values(const Mat& g) {
    if (g.rows() == 1) {
        Vec s(1);
        s(0) = std::abs(g(0, 0));
        return s;
    }
    if (g.rows() == 2) {
        // closed form: s1^2 + s2^2 = |g|_F^2, s1 s2 = |det g|
        const double f2 = g.squaredNorm();
        const double det = std::abs(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0));
        const double disc = std::sqrt(std::max(0.0, f2 * f2 - 4.0 * det * det));
        Vec s(2);
        s(0) = std::sqrt(0.5 * (f2 + disc));
        s(1) = s(0) > 0.0 ? det / s(0) : 0.0;
        return s;
    }
    Eigen::JacobiSVD<Mat> svd(g);
    return svd.singularValues();
}

/// Operator 2-norm |g|.
inline double op_norm(const Mat& g) {
    return singular_values(g)(0);
}

/// gamma(g) = max(|g|, |g^{-1}|); >= 1, with equality iff g is orthogonal.
inline double gamma_of(const Mat& g) {
    const Vec s = singular_values(g);
    const double smin = s(s.size() - 1);
    if (smin <= 0.0)
        return std::numeric_limits<double>::infinity();
    return std::max(s(0), 1.0 / smin);
}

inline double determinant(const Mat& g) {
    switch (g.rows()) {
    case 1: return g(0, 0);
    case 2: return g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    default: return g.determinant();
    }
}

/// Running matrix product kept as scale * m with |m| ~ 1, so that the log of the
/// norm of a long product never overflows. Renormalizes every `period` updates.
class ScaledProduct {
public:
    explicit ScaledProduct(int d, int period = 25) : m_(Mat::Identity(d, d)), period_(period) {}

    /// this <- g * this (forward walk S_n = g_n ... g_1).
    void left_multiply(const Mat& g) {
        m_ = g * m_;
        tick();
    }
    /// this <- this * g (backward products A_1 ... A_n).
    void right_multiply(const Mat& g) {
        m_ = m_ * g;
        tick();
    }

    void renormalize() {
        const double n = op_norm(m_);
        if (n > 0.0 && std::isfinite(n)) {
            m_ /= n;
            log_scale_ += std::log(n);
        }
        count_ = 0;
    }

    double log_norm() const { return log_scale_ + std::log(op_norm(m_)); }
    double log_scale() const { return log_scale_; }
    /// The normalized factor; the full product is exp(log_scale()) * normalized().
    const Mat& normalized() const { return m_; }

private:
    void tick() {
        if (++count_ >= period_)
            renormalize();
    }

    Mat m_;
    double log_scale_ = 0.0;
    int period_;
    int count_ = 0;
};

} // namespace kesten

#endif // KESTEN_LINALG_HPP
