#ifndef KESTEN_ENSEMBLE_HPP
#define KESTEN_ENSEMBLE_HPP

#include "kesten/linalg.hpp"
#include "kesten/random.hpp"
#include "kesten/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace kesten {

struct LinearAtom {
    Mat matrix;
    double weight = 0.0;
};

/// Finite-support probability measure mu on GL(d, R).
struct LinearEnsemble {
    int dimension = 1;
    std::vector<LinearAtom> atoms;
    std::string label;

    std::vector<double> weights() const {
        std::vector<double> w;
        w.reserve(atoms.size());
        for (const auto& a : atoms)
            w.push_back(a.weight);
        return w;
    }
    std::vector<double> cumulative() const { return cumulative_of(weights()); }
};

struct AffineAtom {
    Mat matrix;
    Vec translation;
    double weight = 0.0;
};

/// Finite-support measure lambda on affine maps x -> A x + B.
struct AffineEnsemble {
    int dimension = 1;
    std::vector<AffineAtom> atoms;
    std::string label;

    LinearEnsemble linear_part() const {
        LinearEnsemble e{dimension, {}, label};
        for (const auto& a : atoms)
            e.atoms.push_back({a.matrix, a.weight});
        return e;
    }
    std::vector<double> cumulative() const { return linear_part().cumulative(); }
};

struct AtomNorms {
    double norm = 0.0;
    double inverse_norm = 0.0;
    double gamma = 0.0;
};

struct ValidationReport {
    Verdict irreducibility = Verdict::inconclusive;
    Verdict proximality = Verdict::inconclusive;
    Verdict nonarithmetic = Verdict::inconclusive; // d = 1 only
    ConeCase cone_case = ConeCase::unknown;
    std::vector<AtomNorms> atoms;
    std::vector<std::string> evidence;
};

namespace detail {
inline std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

inline std::string word_string(const std::vector<int>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i)
            s += '.';
        s += std::to_string(w[i]);
    }
    return s;
}
} // namespace detail

/// Structural validation: shapes, invertibility, normalization. Throws
/// InvalidInput naming the offending atom; fills the per-atom norms.
inline ValidationReport validate_linear(const LinearEnsemble& e) {
    if (e.dimension < 1 || e.dimension > kMaxDim)
        throw InvalidInput("dimension " + std::to_string(e.dimension) + " outside [1, " + std::to_string(kMaxDim) + "]");
    if (e.atoms.empty())
        throw InvalidInput("ensemble has no atoms");
    ValidationReport report;
    double total = 0.0;
    for (std::size_t i = 0; i < e.atoms.size(); ++i) {
        const auto& a = e.atoms[i];
        const std::string tag = "atom " + std::to_string(i) + ": ";
        if (a.matrix.rows() != e.dimension || a.matrix.cols() != e.dimension)
            throw InvalidInput(tag + "matrix is " + std::to_string(a.matrix.rows()) + "x" +
                               std::to_string(a.matrix.cols()) + ", expected " + std::to_string(e.dimension) + "x" +
                               std::to_string(e.dimension));
        if (!a.matrix.allFinite())
            throw InvalidInput(tag + "non-finite matrix entry");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw InvalidInput(tag + "weight " + detail::fmt_double(a.weight) + " is not strictly positive");
        const double norm = op_norm(a.matrix);
        const double det = determinant(a.matrix);
        if (!(std::abs(det) > 1e-12 * std::pow(norm, e.dimension)))
            throw InvalidInput(tag + "singular matrix (det = " + detail::fmt_double(det) + ")");
        const Vec s = singular_values(a.matrix);
        AtomNorms n;
        n.norm = s(0);
        n.inverse_norm = 1.0 / s(s.size() - 1);
        n.gamma = std::max(n.norm, n.inverse_norm);
        report.atoms.push_back(n);
        total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidInput("weights sum " + detail::fmt_double(total));
    return report;
}

/// Push-forward of mu by g -> g^T.
inline LinearEnsemble transpose(const LinearEnsemble& e) {
    LinearEnsemble t{e.dimension, {}, e.label.empty() ? e.label : e.label + " (transposed)"};
    t.atoms.reserve(e.atoms.size());
    for (const auto& a : e.atoms)
        t.atoms.push_back({a.matrix.transpose(), a.weight});
    return t;
}

struct ProximalityResult {
    Verdict verdict = Verdict::inconclusive;
    std::vector<int> witness; // atom indices, rightmost applied first
    double relative_gap = 0.0;
    std::string evidence;
};

namespace detail {
inline Mat word_product(const LinearEnsemble& e, const std::vector<int>& w) {
    Mat p = Mat::Identity(e.dimension, e.dimension);
    for (int i : w)
        p = e.atoms[i].matrix * p;
    return p;
}

/// Relative gap between the top two eigenvalue moduli if the top one is real
/// and strictly dominant, else a negative number.
inline double proximal_gap(const Mat& g) {
    const Eigen::MatrixXd m = g;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    const Eigen::VectorXcd ev = es.eigenvalues();
    std::vector<std::complex<double>> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    const double top = std::abs(v[0]);
    if (top == 0.0 || std::abs(v[0].imag()) > 1e-12 * top)
        return -1.0;
    return (top - std::abs(v[1])) / top;
}
} // namespace detail

/// Searches words of length <= max_word_length for a proximal element. All
/// words are enumerated when there are at most n_random_words of a given
/// length, otherwise n_random_words words are sampled. Never returns `fail`.
inline ProximalityResult check_proximality(const LinearEnsemble& e, int max_word_length, int n_random_words,
                                           std::uint64_t seed) {
    ProximalityResult r;
    if (e.dimension == 1) {
        r.verdict = Verdict::pass;
        r.witness = {0};
        r.relative_gap = 1.0;
        r.evidence = "d = 1: every element is proximal";
        return r;
    }
    const int m = static_cast<int>(e.atoms.size());
    Engine rng = make_stream(seed, 0x70726f78ULL, 0);
    const auto cum = e.cumulative();
    for (int len = 1; len <= max_word_length; ++len) {
        const double count = std::pow(static_cast<double>(m), len);
        std::vector<std::vector<int>> words;
        if (count <= n_random_words) {
            std::vector<int> w(len, 0);
            for (long c = 0; c < static_cast<long>(count); ++c) {
                long x = c;
                for (int j = 0; j < len; ++j) {
                    w[j] = static_cast<int>(x % m);
                    x /= m;
                }
                words.push_back(w);
            }
        } else {
            for (int k = 0; k < n_random_words; ++k) {
                std::vector<int> w(len);
                for (auto& x : w)
                    x = draw_index(cum, rng);
                words.push_back(std::move(w));
            }
        }
        for (const auto& w : words) {
            const double gap = detail::proximal_gap(detail::word_product(e, w));
            if (gap > 1e-6) {
                r.verdict = Verdict::pass;
                r.witness = w;
                r.relative_gap = gap;
                r.evidence = "word " + detail::word_string(w) + " has a simple real dominant eigenvalue, relative gap " +
                             detail::fmt_double(gap);
                return r;
            }
        }
    }
    r.evidence = "no proximal word found up to length " + std::to_string(max_word_length);
    return r;
}

struct IrreducibilityResult {
    Verdict verdict = Verdict::inconclusive;
    std::vector<Vec> invariant_set; // set found when verdict == fail (lines, or plane normals)
    std::string evidence;
};

namespace detail {
inline double projective_gap(const Vec& a, const Vec& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

inline void real_eigenvectors(const Mat& g, std::vector<Vec>& out) {
    const Eigen::MatrixXd m = g;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, true);
    const Eigen::VectorXcd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i).imag()) > 1e-10 * std::abs(ev(i)))
            continue;
        Vec v = es.eigenvectors().col(i).real();
        if (v.norm() < 1e-12)
            continue;
        v /= v.norm();
        bool seen = false;
        for (const auto& u : out)
            seen = seen || projective_gap(u, v) < 1e-8;
        if (!seen)
            out.push_back(v);
    }
}

enum class Closure { closed, exploded, undecided };

/// Forward orbit of a line under the given maps, up to `depth` generations.
inline Closure orbit_closure(const std::vector<Mat>& maps, const Vec& seed, int depth, std::size_t bound,
                             std::vector<Vec>& orbit) {
    orbit = {seed};
    std::vector<Vec> frontier = {seed};
    for (int gen = 0; gen < depth; ++gen) {
        std::vector<Vec> next;
        for (const auto& x : frontier) {
            for (const auto& g : maps) {
                Vec y = g * x;
                y /= y.norm();
                bool seen = false;
                for (const auto& u : orbit)
                    if (projective_gap(u, y) < 1e-9) {
                        seen = true;
                        break;
                    }
                if (!seen) {
                    orbit.push_back(y);
                    next.push_back(y);
                    if (orbit.size() > bound)
                        return Closure::exploded;
                }
            }
        }
        if (next.empty())
            return Closure::closed;
        frontier = std::move(next);
    }
    return Closure::undecided;
}
} // namespace detail

/// Heuristic search for a finite invariant union of proper subspaces. Candidate
/// lines (and, for d = 3, planes through their normals) are seeded from real
/// eigenvectors of atoms, short words, and atom powers, then closed under the
/// atom actions. A closed orbit is a counterexample (`fail`); if every seed
/// orbit grows beyond `cardinality_bound` the verdict is `pass`.
inline IrreducibilityResult check_strong_irreducibility(const LinearEnsemble& e, int n_iterations,
                                                        std::size_t cardinality_bound = 64) {
    IrreducibilityResult r;
    const int d = e.dimension;
    if (d == 1) {
        r.verdict = Verdict::pass;
        r.evidence = "d = 1: no proper nonzero subspaces";
        return r;
    }
    // Subspaces of dimension d-1 are tracked by their normals, acted on by g^{-T}.
    std::vector<std::pair<std::vector<Mat>, std::string>> families;
    std::vector<Mat> line_maps, normal_maps;
    for (const auto& a : e.atoms) {
        line_maps.push_back(a.matrix);
        normal_maps.push_back(a.matrix.inverse().transpose());
    }
    families.emplace_back(line_maps, "line");
    if (d >= 3)
        families.emplace_back(normal_maps, "hyperplane");

    std::size_t exploded = 0, seeds_total = 0;
    for (const auto& [maps, kind] : families) {
        std::vector<Vec> seeds;
        for (const auto& g : maps) {
            Mat p = g;
            for (int power = 1; power <= 12; ++power) {
                detail::real_eigenvectors(p, seeds);
                p = p * g;
            }
        }
        for (const auto& g : maps)
            for (const auto& h : maps)
                detail::real_eigenvectors(g * h, seeds);
        for (const auto& s : seeds) {
            ++seeds_total;
            std::vector<Vec> orbit;
            const auto c = detail::orbit_closure(maps, s, n_iterations, cardinality_bound, orbit);
            if (c == detail::Closure::closed) {
                r.verdict = Verdict::fail;
                r.invariant_set = orbit;
                r.evidence = "finite invariant set of " + std::to_string(orbit.size()) + " " + kind + "(s)";
                return r;
            }
            if (c == detail::Closure::exploded)
                ++exploded;
        }
    }
    if (seeds_total == 0) {
        r.evidence = "no real eigen-directions among atoms, powers <= 12, or pair products";
        return r;
    }
    if (exploded == seeds_total) {
        r.verdict = Verdict::pass;
        r.evidence = "all " + std::to_string(seeds_total) + " seeded orbits exceeded " +
                     std::to_string(cardinality_bound) + " directions";
        return r;
    }
    r.evidence = std::to_string(exploded) + "/" + std::to_string(seeds_total) +
                 " seeded orbits exploded; the rest stayed undecided after " + std::to_string(n_iterations) +
                 " generations";
    return r;
}

struct ConeResult {
    ConeCase cone_case = ConeCase::unknown;
    /// per trajectory: min |a + b| over its own late-time directions a, b
    std::vector<double> antipodal_chords;
    std::vector<Vec> attractor;          // late-time directions of all trajectories
    std::vector<Vec> positive_attractor; // case II: trajectories aligned with the first one
    std::string evidence;
};

struct ConeOptions {
    int n_trajectories = 16;
    int n_steps = 4000;
    double symmetric_tol = 1e-3;    // A symmetric: some a, b in A with |a + b| below this
    double separated_margin = 0.05; // A, -A disjoint: every |a + b| above this
};

namespace detail {
/// min over pairs of |a + b|. Sort-based for d = 2, brute force on a subsample otherwise.
inline double min_antipodal_chord(const std::vector<Vec>& pts) {
    if (pts.empty())
        return 2.0;
    const int d = static_cast<int>(pts.front().size());
    double best = 2.0;
    if (d == 2) {
        // |a + b| is small iff the angle of b is close to the angle of a plus pi
        constexpr double two_pi = 2.0 * std::numbers::pi;
        std::vector<double> ang;
        ang.reserve(pts.size());
        for (const auto& p : pts) {
            double th = std::atan2(p(1), p(0));
            ang.push_back(th < 0.0 ? th + two_pi : th);
        }
        std::sort(ang.begin(), ang.end());
        for (double th : ang) {
            double target = th + std::numbers::pi;
            if (target >= two_pi)
                target -= two_pi;
            const auto it = std::lower_bound(ang.begin(), ang.end(), target);
            const double hi = it == ang.end() ? ang.front() + two_pi : *it;
            const double lo = it == ang.begin() ? ang.back() - two_pi : *(it - 1);
            const double gap = std::min(hi - target, target - lo);
            best = std::min(best, 2.0 * std::sin(0.5 * gap));
        }
        return best;
    }
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / 2000);
    for (std::size_t i = 0; i < pts.size(); i += stride)
        for (std::size_t j = i; j < pts.size(); j += stride)
            best = std::min(best, (pts[i] + pts[j]).norm());
    return best;
}
} // namespace detail

/// Simulates S_n.x on the sphere from random starts and tests, per trajectory,
/// whether its late-time set A is symmetric (case I) or separated from -A
/// (case II). In case II different starts land in Lambda_+ or -Lambda_+.
inline ConeResult classify_cone_case(const LinearEnsemble& e, std::uint64_t seed, const ConeOptions& opt = {}) {
    ConeResult r;
    const int d = e.dimension;
    if (d == 1) {
        const bool has_negative =
            std::any_of(e.atoms.begin(), e.atoms.end(), [](const auto& a) { return a.matrix(0, 0) < 0.0; });
        r.cone_case = has_negative ? ConeCase::I : ConeCase::II;
        r.antipodal_chords = {has_negative ? 0.0 : 2.0};
        r.evidence = has_negative ? "a negative atom exchanges the two half-lines" : "all atoms positive: R_+ invariant";
        Vec p(1);
        p(0) = 1.0;
        r.attractor.push_back(p);
        r.positive_attractor.push_back(p);
        if (has_negative)
            r.attractor.push_back(-p);
        return r;
    }
    const auto cum = e.cumulative();
    const int burn = std::max(100, opt.n_steps / 5);
    Vec reference;
    for (int t = 0; t < opt.n_trajectories; ++t) {
        Engine rng = make_stream(seed, 0x636f6e65ULL, static_cast<std::uint64_t>(t));
        Vec x = random_direction(d, rng);
        std::vector<Vec> late;
        for (int n = 0; n < opt.n_steps; ++n) {
            x = e.atoms[draw_index(cum, rng)].matrix * x;
            x /= x.norm();
            if (n >= burn)
                late.push_back(x);
        }
        r.antipodal_chords.push_back(detail::min_antipodal_chord(late));
        Vec mean = Vec::Zero(d);
        for (const auto& p : late)
            mean += p;
        if (t == 0)
            reference = mean;
        const bool aligned = mean.dot(reference) >= 0.0;
        for (const auto& p : late) {
            r.attractor.push_back(p);
            if (aligned)
                r.positive_attractor.push_back(p);
        }
    }
    std::vector<double> sorted = r.antipodal_chords;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (median <= opt.symmetric_tol)
        r.cone_case = ConeCase::I;
    else if (sorted.front() >= opt.separated_margin)
        r.cone_case = ConeCase::II;
    if (r.cone_case != ConeCase::II)
        r.positive_attractor.clear();
    r.evidence = "per-trajectory min |a + b|: median " + detail::fmt_double(median) + ", min " +
                 detail::fmt_double(sorted.front()) + " over " + std::to_string(opt.n_trajectories) +
                 " trajectories";
    return r;
}

struct NonarithmeticResult {
    Verdict verdict = Verdict::inconclusive;
    std::string evidence;
};

namespace detail {
/// Rational approximation p/q of x with q <= max_den matching x to `tol`, if any.
inline bool is_rational(double x, long max_den, double tol, long& p_out, long& q_out) {
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        const long ai = static_cast<long>(a);
        const long p2 = ai * p1 + p0;
        const long q2 = ai * q1 + q0;
        if (q2 > max_den)
            return false;
        if (std::abs(x - static_cast<double>(p2) / static_cast<double>(q2)) <= tol * std::max(1.0, std::abs(x))) {
            p_out = p2;
            q_out = q2;
            return true;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double frac = r - a;
        if (frac <= 0.0)
            return false;
        r = 1.0 / frac;
    }
    return false;
}
} // namespace detail

/// d = 1: the group generated by log|a_i| is dense iff some ratio of nonzero
/// logs is irrational (continued-fraction test, denominators <= 10^4,
/// relative tolerance 1e-13, far below the 1/q^2 spacing of such fractions).
inline NonarithmeticResult check_nonarithmetic_1d(const LinearEnsemble& e) {
    if (e.dimension != 1)
        throw InvalidInput("check_nonarithmetic_1d requires d = 1");
    std::vector<double> logs;
    for (const auto& a : e.atoms) {
        const double l = std::log(std::abs(a.matrix(0, 0)));
        if (std::abs(l) > 1e-14)
            logs.push_back(l);
    }
    NonarithmeticResult r;
    if (logs.size() < 2) {
        r.verdict = Verdict::fail;
        r.evidence = "fewer than two atoms with |a| != 1: log|a| generates a lattice";
        return r;
    }
    for (std::size_t i = 0; i < logs.size(); ++i)
        for (std::size_t j = i + 1; j < logs.size(); ++j) {
            long p = 0, q = 1;
            const double ratio = logs[i] / logs[j];
            if (!detail::is_rational(ratio, 10000, 1e-13, p, q)) {
                r.verdict = Verdict::pass;
                r.evidence = "log|a_" + std::to_string(i) + "|/log|a_" + std::to_string(j) + "| = " +
                             detail::fmt_double(ratio) + " has no rational approximation with denominator <= 1e4";
                return r;
            }
        }
    r.verdict = Verdict::fail;
    r.evidence = "all ratios of log|a_i| are rational with denominator <= 1e4";
    return r;
}

/// Structural validation of an affine ensemble, including the requirement that
/// the affine maps share no fixed point.
inline ValidationReport validate_affine(const AffineEnsemble& ae) {
    for (std::size_t i = 0; i < ae.atoms.size(); ++i)
        if (ae.atoms[i].translation.size() != ae.dimension)
            throw InvalidInput("atom " + std::to_string(i) + ": translation has " +
                               std::to_string(ae.atoms[i].translation.size()) + " entries, expected " +
                               std::to_string(ae.dimension));
    ValidationReport report = validate_linear(ae.linear_part());
    const int d = ae.dimension;
    const auto m = static_cast<Eigen::Index>(ae.atoms.size());
    Eigen::MatrixXd lhs(m * d, d);
    Eigen::VectorXd rhs(m * d);
    double scale = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& a = ae.atoms[i];
        lhs.block(i * d, 0, d, d) = Eigen::MatrixXd::Identity(d, d) - Eigen::MatrixXd(a.matrix);
        rhs.segment(i * d, d) = a.translation;
        scale = std::max(scale, a.translation.norm());
    }
    const Eigen::VectorXd x = lhs.completeOrthogonalDecomposition().solve(rhs);
    const double residual = (lhs * x - rhs).norm();
    if (residual <= 1e-9 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << "supp lambda has a fixed point at (" << x.transpose() << "); no stationary heavy tail";
        throw InvalidInput(os.str());
    }
    report.evidence.push_back("no common fixed point (least-squares residual " + detail::fmt_double(residual) + ")");
    return report;
}

struct ValidationOptions {
    int max_word_length = 6;
    int n_random_words = 256;
    int irreducibility_iterations = 12;
    ConeOptions cone;
};

/// Structural validation followed by all heuristic hypothesis checks.
inline ValidationReport validate_full(const LinearEnsemble& e, std::uint64_t seed, const ValidationOptions& opt = {}) {
    ValidationReport r = validate_linear(e);
    const auto irr = check_strong_irreducibility(e, opt.irreducibility_iterations);
    r.irreducibility = irr.verdict;
    r.evidence.push_back("irreducibility: " + irr.evidence);
    const auto prox = check_proximality(e, opt.max_word_length, opt.n_random_words, seed);
    r.proximality = prox.verdict;
    r.evidence.push_back("proximality: " + prox.evidence);
    if (prox.verdict == Verdict::pass) {
        const auto cone = classify_cone_case(e, seed, opt.cone);
        r.cone_case = cone.cone_case;
        r.evidence.push_back("cone: " + cone.evidence);
    }
    if (e.dimension == 1) {
        const auto na = check_nonarithmetic_1d(e);
        r.nonarithmetic = na.verdict;
        r.evidence.push_back("nonarithmetic: " + na.evidence);
    }
    return r;
}

} // namespace kesten

#endif // KESTEN_ENSEMBLE_HPP
