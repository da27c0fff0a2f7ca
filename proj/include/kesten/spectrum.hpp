#ifndef KESTEN_SPECTRUM_HPP
#define KESTEN_SPECTRUM_HPP

#include "kesten/linalg.hpp"
#include "kesten/parallel.hpp"
#include "kesten/random.hpp"
#include "kesten/transfer.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kesten {

// Stream tags, one per kind of stochastic computation.
namespace tag {
inline constexpr std::uint64_t k_oracle = 0x6b6f7263;
inline constexpr std::uint64_t tilted_mc = 0x746d6300;
inline constexpr std::uint64_t gap = 0x67617000;
inline constexpr std::uint64_t contraction = 0x72686f00;
inline constexpr std::uint64_t backward = 0x7a737472;
} // namespace tag

/// Step sampler for the chain x_{k+1} = g.x_k. With a SpectralPoint at s != 0
/// the atom is drawn from q^s(x, .); otherwise from the weights of the ensemble.
/// `normalizer` is the per-step constant sum_j w_j |g_j x|^s e(g_j.x) / e(x),
/// which enters exact likelihood ratios.
class TiltedSampler {
public:
    struct Step {
        int atom = 0;
        Vec y;
        double lognorm = 0.0;
        double normalizer = 1.0;
    };

    TiltedSampler(const LinearEnsemble& e, const SpectralPoint* sp)
        : e_(&e), sp_(sp), cumulative_(e.cumulative()), raw_(e.atoms.size()), images_(e.atoms.size()),
          logs_(e.atoms.size()) {
        tilted_ = sp_ != nullptr && sp_->s != 0.0;
    }

    bool tilted() const { return tilted_; }

    Step step(const Vec& x, Engine& rng) {
        Step st;
        if (!tilted_) {
            st.atom = draw_index(cumulative_, rng);
            const Action a = act(e_->atoms[st.atom].matrix, x);
            st.y = a.y;
            st.lognorm = a.lognorm;
            return st;
        }
        const double s = sp_->s;
        double total = 0.0;
        for (std::size_t j = 0; j < raw_.size(); ++j) {
            const Action a = act(e_->atoms[j].matrix, x);
            images_[j] = a.y;
            logs_[j] = a.lognorm;
            total += e_->atoms[j].weight * std::exp(s * a.lognorm) * interpolate(sp_->e, a.y);
            raw_[j] = total;
        }
        st.atom = draw_index(raw_, rng);
        st.y = images_[st.atom];
        st.lognorm = logs_[st.atom];
        st.normalizer = total / interpolate(sp_->e, x);
        return st;
    }

private:
    const LinearEnsemble* e_;
    const SpectralPoint* sp_;
    bool tilted_ = false;
    std::vector<double> cumulative_;
    std::vector<double> raw_;
    std::vector<Vec> images_;
    std::vector<double> logs_;
};

/// Independent oracle (E|S_n|^s)^{1/n} from n_samples products of n i.i.d. atoms.
/// Moments are averaged in log space; the standard error is the delta method.
inline Estimate k_mc_oracle(const LinearEnsemble& e, double s, int n, std::size_t n_samples, std::uint64_t seed) {
    if (n < 1 || n_samples < 2)
        throw InvalidInput("k_mc_oracle needs n >= 1 and at least two samples");
    std::vector<double> logs(n_samples);
    const auto cum = e.cumulative();
    for_blocks(n_samples, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        Engine rng = make_stream(seed, tag::k_oracle, b);
        for (std::size_t i = lo; i < hi; ++i) {
            ScaledProduct p(e.dimension);
            for (int k = 0; k < n; ++k)
                p.left_multiply(e.atoms[draw_index(cum, rng)].matrix);
            logs[i] = p.log_norm();
        }
    });
    if (s == 0.0)
        return {1.0, 0.0};
    double m = -1e300;
    for (double l : logs)
        m = std::max(m, s * l);
    double a = 0.0, b = 0.0;
    for (double l : logs) {
        const double z = std::exp(s * l - m);
        a += z;
        b += z * z;
    }
    const double nn = static_cast<double>(n_samples);
    a /= nn;
    b /= nn;
    const double rel_var = std::max(0.0, b / (a * a) - 1.0);
    const double rel_se = std::sqrt(rel_var / (nn - 1.0));
    const double k = std::exp((m + std::log(a)) / n);
    return {k, k * rel_se / n};
}

/// Evaluator of s -> k(s): closed form for d = 1, grid power iteration otherwise.
/// Successive grid solves are warm-started from the previous one.
class KFunction {
public:
    KFunction(LinearEnsemble e, GridPtr grid, PowerOptions opt = {})
        : e_(std::move(e)), grid_(std::move(grid)), opt_(std::move(opt)) {
        opt_.with_dual = false;
        if (e_.dimension > 1)
            op_.emplace(e_, grid_, opt_.mask);
    }

    double operator()(double s) { return point(s).k; }

    SpectralPoint point(double s) {
        if (e_.dimension == 1) {
            SpectralPoint sp;
            sp.s = s;
            sp.k = closed_form(s);
            return sp;
        }
        PowerOptions o = opt_;
        o.warm = last_ ? &*last_ : nullptr;
        SpectralPoint sp = power_iterate(*op_, e_, s, o);
        ++evaluations_;
        last_ = sp;
        return sp;
    }

    double closed_form(double s) const {
        double k = 0.0;
        for (const auto& a : e_.atoms)
            k += a.weight * std::pow(std::abs(a.matrix(0, 0)), s);
        return k;
    }
    /// k'(s)/k(s) for d = 1.
    double closed_form_log_derivative(double s) const {
        double k = 0.0, dk = 0.0;
        for (const auto& a : e_.atoms) {
            const double r = std::abs(a.matrix(0, 0));
            const double t = a.weight * std::pow(r, s);
            k += t;
            dk += t * std::log(r);
        }
        return dk / k;
    }

    int evaluations() const { return evaluations_; }
    const GridPtr& grid() const { return grid_; }
    const LinearEnsemble& ensemble() const { return e_; }
    const TransferOperator* op() const { return op_ ? &*op_ : nullptr; }

private:
    LinearEnsemble e_;
    GridPtr grid_;
    PowerOptions opt_;
    std::optional<TransferOperator> op_;
    std::optional<SpectralPoint> last_;
    int evaluations_ = 0;
};

struct AlphaResult {
    double alpha = 0.0;
    double k_at_alpha = 1.0;
    double s_lo = 0.0, s_hi = 0.0; // final bracket
    int evaluations = 0;
};

/// Root of k(s) = 1 on s > 0 by TOMS 748 on a bracket [s_lo, s_hi]. A failing
/// user bracket is expanded geometrically up to s_cap.
inline AlphaResult solve_alpha(const std::function<double(double)>& k, double s_lo, double s_hi, double tol = 1e-12,
                               double s_cap = 64.0) {
    if (!(s_lo > 0.0) || !(s_hi > s_lo))
        throw InvalidInput("bracket must satisfy 0 < s_lo < s_hi");
    const char* no_root = "no root: check L_mu<0 and that some product has spectral radius > 1";
    int evals = 0;
    auto f = [&](double s) {
        ++evals;
        return k(s) - 1.0;
    };
    double flo = f(s_lo);
    while (flo >= 0.0 && s_lo > 1e-6) {
        s_lo /= 4.0;
        flo = f(s_lo);
    }
    if (flo >= 0.0)
        throw HypothesisViolation(no_root);
    double fhi = f(s_hi);
    while (fhi <= 0.0) {
        if (s_hi >= s_cap)
            throw HypothesisViolation(no_root);
        s_lo = s_hi;
        flo = fhi;
        s_hi = std::min(2.0 * s_hi, s_cap);
        fhi = f(s_hi);
    }
    std::uintmax_t max_iter = 200;
    auto stop = [&](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
    const auto r = boost::math::tools::toms748_solve(f, s_lo, s_hi, flo, fhi, stop, max_iter);
    AlphaResult out;
    const double fa = f(r.first), fb = f(r.second);
    const bool first = std::abs(fa) <= std::abs(fb);
    out.alpha = first ? r.first : r.second;
    out.k_at_alpha = 1.0 + (first ? fa : fb);
    out.s_lo = r.first;
    out.s_hi = r.second;
    out.evaluations = evals;
    if (max_iter >= 200)
        throw NonConvergence("alpha solver exceeded its iteration budget");
    return out;
}

inline AlphaResult solve_alpha(KFunction& k, double s_lo = 0.05, double s_hi = 2.0, double tol = 1e-12,
                               double s_cap = 64.0) {
    return solve_alpha([&](double s) { return k(s); }, s_lo, s_hi, tol, s_cap);
}

enum class LyapunovMethod { finite_diff, tilted_mc, quadrature };

inline std::string_view to_string(LyapunovMethod m) {
    switch (m) {
    case LyapunovMethod::finite_diff: return "finite_diff";
    case LyapunovMethod::tilted_mc: return "tilted_mc";
    case LyapunovMethod::quadrature: return "quadrature";
    }
    return "?";
}

struct LyapunovParams {
    double h = 1e-3;          // finite-difference spacing
    std::size_t n_chains = 32; // tilted MC
    std::size_t n_steps = 20000;
};

/// d log k / ds at s: closed form for d = 1, otherwise central differences
/// at h and h/2 combined by Richardson extrapolation. Near s = 0 the stencil
/// reaches slightly negative exponents, where P^s is still well defined for
/// invertible atoms.
inline double lyapunov_finite_diff(KFunction& k, double s, double h = 1e-3) {
    if (k.ensemble().dimension == 1)
        return k.closed_form_log_derivative(s);
    auto d = [&](double hh) { return (std::log(k(s + hh)) - std::log(k(s - hh))) / (2.0 * hh); };
    const double d1 = d(h), d2 = d(h / 2.0);
    return (4.0 * d2 - d1) / 3.0;
}

/// sum_nodes sum_atoms pi^s(node) q^s(node, g) log|g x_node| with pi^s = e^s nu^s.
inline double lyapunov_quadrature(const LinearEnsemble& e, const SpectralPoint& sp) {
    if (e.dimension == 1)
        return KFunction(e, sp.e.grid).closed_form_log_derivative(sp.s);
    const TransferOperator op(e, sp.e.grid);
    const auto fac = op.factors(sp.s);
    const std::size_t m = op.atoms();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sp.e.values.size(); ++i) {
        const double nu = sp.nu.masses[i];
        if (nu == 0.0)
            continue;
        for (std::size_t j = 0; j < m; ++j) {
            const Stencil& st = op.image_stencil(i, j);
            double eg = 0.0;
            for (int q = 0; q < st.size; ++q)
                eg += st.weight[q] * sp.e.values[st.index[q]];
            const double mass = nu * fac[i * m + j] * eg;
            num += mass * op.lognorm(i, j);
            den += mass;
        }
    }
    return num / den;
}

/// Long runs of the q^s chain; the average of log|g x_k| after burn-in
/// (10% of the run, at least 100 steps). Standard error from chain means.
inline Estimate lyapunov_tilted_mc(const LinearEnsemble& e, const SpectralPoint& sp, std::uint64_t seed,
                                   const LyapunovParams& par = {}) {
    if (par.n_chains < 2)
        throw InvalidInput("tilted MC needs at least two chains");
    const std::size_t burn = std::max<std::size_t>(100, par.n_steps / 10);
    std::vector<double> means(par.n_chains);
    for_blocks(par.n_chains, 1, [&](std::size_t b, std::size_t, std::size_t) {
        Engine rng = make_stream(seed, tag::tilted_mc, b);
        TiltedSampler sampler(e, &sp);
        Vec x = random_direction(e.dimension, rng);
        double acc = 0.0;
        for (std::size_t k = 0; k < burn + par.n_steps; ++k) {
            const auto st = sampler.step(x, rng);
            if (k >= burn)
                acc += st.lognorm;
            x = st.y;
        }
        means[b] = acc / static_cast<double>(par.n_steps);
    });
    double mean = 0.0;
    for (double v : means)
        mean += v;
    mean /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(means.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(means.size()))};
}

namespace detail {
/// Node index drawn from the grid measure pi = e nu.
inline Vec draw_from_pi(const SpectralPoint& sp, const std::vector<double>& cumulative, Engine& rng) {
    return sp.e.grid->node(static_cast<std::size_t>(draw_index(cumulative, rng)));
}
inline std::vector<double> pi_cumulative(const SpectralPoint& sp) {
    std::vector<double> pi(sp.e.values.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        pi[i] = sp.e.values[i] * sp.nu.masses[i];
    return cumulative_of(pi);
}

inline Estimate mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v)
        m += x;
    m /= n;
    double var = 0.0;
    for (double x : v)
        var += (x - m) * (x - m);
    var /= std::max(1.0, n - 1.0);
    return {m, std::sqrt(var / n)};
}

/// Evolves the pair (v, v') under g and tracks log delta(v, v') = log sin angle
/// through the 2-plane they span. The frame is kept orthonormal by QR, so the
/// angle stays resolved long after the two directions merge numerically.
struct PairTracker {
    Mat frame; // d x 2, orthonormal; column 0 is the direction of S v
    double c1 = 0.0, c2 = 0.0; // coordinates of S v' in the frame, normalized

    PairTracker(const Vec& v, const Vec& w) {
        const int d = static_cast<int>(v.size());
        frame.resize(d, 2);
        frame.col(0) = v / v.norm();
        Vec r = w - w.dot(frame.col(0)) * frame.col(0);
        const double rn = r.norm();
        frame.col(1) = rn > 0.0 ? Vec(r / rn) : Vec(Vec::Zero(d));
        c1 = w.dot(frame.col(0));
        c2 = rn;
        const double n = std::hypot(c1, c2);
        c1 /= n;
        c2 /= n;
    }
    double log_delta() const { return std::log(std::abs(c2)); }

    void apply(const Mat& g) {
        const Mat gq = g * frame;
        Vec a = gq.col(0);
        const double r11 = a.norm();
        const Vec q1 = a / r11;
        const double r12 = q1.dot(gq.col(1));
        Vec b = gq.col(1) - r12 * q1;
        const double r22 = b.norm();
        frame.col(0) = q1;
        frame.col(1) = r22 > 0.0 ? Vec(b / r22) : Vec(b);
        const double n1 = r11 * c1 + r12 * c2, n2 = r22 * c2;
        const double n = std::hypot(n1, n2);
        c1 = n1 / n;
        c2 = n2 / n;
    }
};
} // namespace detail

struct GapParams {
    int n = 50;                // path length
    std::size_t n_triples = 8; // sampled (x, v, v')
    std::size_t n_paths = 256; // paths per triple
};

/// max over sampled (x, v, v') of (1/n) E^s[log(delta(S_n.v, S_n.v') / delta(v, v'))],
/// with S_n drawn from the q^s chain started at x ~ pi^s. The standard error is
/// that of the maximizing triple.
inline Estimate lyapunov_gap(const LinearEnsemble& e, const SpectralPoint& sp, std::uint64_t seed,
                             const GapParams& par = {}) {
    if (e.dimension < 2)
        throw InvalidInput("lyapunov_gap needs d >= 2");
    const auto cum_pi = detail::pi_cumulative(sp);
    std::vector<Estimate> per(par.n_triples);
    for_blocks(par.n_triples, 1, [&](std::size_t b, std::size_t, std::size_t) {
        Engine rng = make_stream(seed, tag::gap, b);
        const Vec x0 = detail::draw_from_pi(sp, cum_pi, rng);
        const Vec v = random_direction(e.dimension, rng);
        const Vec w = random_direction(e.dimension, rng);
        TiltedSampler sampler(e, &sp);
        std::vector<double> vals(par.n_paths);
        for (std::size_t p = 0; p < par.n_paths; ++p) {
            detail::PairTracker tr(v, w);
            const double l0 = tr.log_delta();
            Vec x = x0;
            for (int k = 0; k < par.n; ++k) {
                const auto st = sampler.step(x, rng);
                tr.apply(e.atoms[st.atom].matrix);
                x = st.y;
            }
            vals[p] = (tr.log_delta() - l0) / par.n;
        }
        per[b] = detail::mean_se(vals);
    });
    return *std::max_element(per.begin(), per.end(),
                             [](const Estimate& a, const Estimate& b) { return a.value < b.value; });
}

struct ContractionParams {
    int n = 10;
    std::size_t n_pairs = 64;
    std::size_t n_worst = 8;
    std::size_t n_prescan = 256;
    std::size_t n_paths = 512;
};

/// (sup over sampled pairs of E^s_x[delta^eps(S_n.x, S_n.y) / delta^eps(x, y)])^{1/n}.
/// Pairs: n_pairs quasi-random ones plus the n_worst of a coarse pre-scan.
inline Estimate contraction_rate(const LinearEnsemble& e, const SpectralPoint& sp, double eps, std::uint64_t seed,
                                 const ContractionParams& par = {}) {
    if (e.dimension < 2)
        throw InvalidInput("contraction_rate needs d >= 2");
    if (!(eps > 0.0))
        throw InvalidInput("eps must be positive");
    const int d = e.dimension;
    auto pair_at = [&](std::size_t i, Engine& rng) -> std::pair<Vec, Vec> {
        if (d == 2) {
            // golden-ratio sequence on the torus of angle pairs
            const double a = std::fmod(0.5 + 0.6180339887498949 * static_cast<double>(i), 1.0) * std::numbers::pi;
            const double b = std::fmod(0.25 + 0.7548776662466927 * static_cast<double>(i), 1.0) * std::numbers::pi;
            Vec x(2), y(2);
            x << std::cos(a), std::sin(a);
            y << std::cos(b), std::sin(b);
            return {x, y};
        }
        return {random_direction(d, rng), random_direction(d, rng)};
    };
    auto estimate = [&](const Vec& x0, const Vec& y0, std::size_t paths, Engine& rng) -> Estimate {
        TiltedSampler sampler(e, &sp);
        std::vector<double> vals(paths);
        detail::PairTracker init(x0, y0);
        const double l0 = init.log_delta();
        for (std::size_t p = 0; p < paths; ++p) {
            detail::PairTracker tr(x0, y0);
            Vec x = x0;
            for (int k = 0; k < par.n; ++k) {
                const auto st = sampler.step(x, rng);
                tr.apply(e.atoms[st.atom].matrix);
                x = st.y;
            }
            vals[p] = std::exp(eps * (tr.log_delta() - l0));
        }
        return detail::mean_se(vals);
    };

    std::vector<std::pair<Vec, Vec>> pairs;
    Engine qrng = make_stream(seed, tag::contraction, 0);
    for (std::size_t i = 0; pairs.size() < par.n_pairs; ++i) {
        auto pr = pair_at(i, qrng);
        if (std::abs(detail::PairTracker(pr.first, pr.second).log_delta()) < 20.0)
            pairs.push_back(std::move(pr));
    }
    std::vector<std::pair<double, std::size_t>> scan(par.n_prescan);
    std::vector<std::pair<Vec, Vec>> scan_pairs(par.n_prescan);
    for_blocks(par.n_prescan, 16, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        Engine rng = make_stream(seed, tag::contraction, 1 + b);
        for (std::size_t i = lo; i < hi; ++i) {
            scan_pairs[i] = {random_direction(d, rng), random_direction(d, rng)};
            scan[i] = {estimate(scan_pairs[i].first, scan_pairs[i].second, std::max<std::size_t>(8, par.n_paths / 16), rng).value, i};
        }
    });
    std::sort(scan.begin(), scan.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < std::min(par.n_worst, scan.size()); ++i)
        pairs.push_back(scan_pairs[scan[i].second]);

    std::vector<Estimate> per(pairs.size());
    for_blocks(pairs.size(), 1, [&](std::size_t b, std::size_t, std::size_t) {
        Engine rng = make_stream(seed, tag::contraction, 100000 + b);
        per[b] = estimate(pairs[b].first, pairs[b].second, par.n_paths, rng);
    });
    const auto best = *std::max_element(per.begin(), per.end(),
                                        [](const Estimate& a, const Estimate& b) { return a.value < b.value; });
    const double r = std::pow(best.value, 1.0 / par.n);
    return {r, r * best.std_error / (par.n * best.value)};
}

struct BackwardDirection {
    Vec z_star;
    double max_residual = 0.0;     // max over probes of | |S_n x|/|S_n| - |<z*, x>| |
    double singular_ratio = 0.0;   // sigma_2 / sigma_1 of S_n
    bool degenerate = false;       // no dominant direction (e.g. isometries)
};

/// One q^s path S_n = g_n ... g_1 from x ~ pi^s; z* is the top right singular
/// vector of S_n, checked against |S_n x|/|S_n| on random probes.
inline BackwardDirection backward_direction(const LinearEnsemble& e, const SpectralPoint& sp, int n,
                                            std::uint64_t seed, std::uint64_t index = 0, int n_probe = 32) {
    if (e.dimension < 2)
        throw InvalidInput("backward_direction needs d >= 2");
    Engine rng = make_stream(seed, tag::backward, index);
    const auto cum_pi = detail::pi_cumulative(sp);
    Vec x = detail::draw_from_pi(sp, cum_pi, rng);
    TiltedSampler sampler(e, &sp);
    ScaledProduct prod(e.dimension);
    for (int k = 0; k < n; ++k) {
        const auto st = sampler.step(x, rng);
        prod.left_multiply(e.atoms[st.atom].matrix);
        x = st.y;
    }
    prod.renormalize();
    const Mat& m = prod.normalized();
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    BackwardDirection out;
    out.z_star = svd.matrixV().col(0);
    const auto sv = svd.singularValues();
    out.singular_ratio = sv(1) / sv(0);
    out.degenerate = out.singular_ratio > 1e-2;
    for (int i = 0; i < n_probe; ++i) {
        const Vec p = random_direction(e.dimension, rng);
        const double lhs = (m * p).norm() / sv(0);
        out.max_residual = std::max(out.max_residual, std::abs(lhs - std::abs(out.z_star.dot(p))));
    }
    return out;
}

/// Total-variation distance between the empirical law of z* over `reps` paths
/// and *pi^s = *e^s *nu^s, both binned onto a coarse projective grid.
inline double backward_direction_law_distance(const LinearEnsemble& e, const SpectralPoint& sp,
                                              const SpectralPoint& sp_star, int n, std::size_t reps,
                                              std::uint64_t seed, int bins = 16) {
    const GridPtr coarse = DirectionGrid::build(e.dimension, bins, GridMode::projective);
    std::vector<double> target(coarse->size(), 0.0), hist(coarse->size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < sp_star.e.values.size(); ++i) {
        const double w = sp_star.e.values[i] * sp_star.nu.masses[i];
        target[static_cast<std::size_t>(coarse->nearest(sp_star.e.grid->node(i)))] += w;
        total += w;
    }
    for (auto& v : target)
        v /= total;
    std::vector<int> idx(reps);
    for_blocks(reps, 1, [&](std::size_t b, std::size_t, std::size_t) {
        idx[b] = coarse->nearest(backward_direction(e, sp, n, seed, b, 0).z_star);
    });
    for (int i : idx)
        hist[static_cast<std::size_t>(i)] += 1.0 / static_cast<double>(reps);
    double tv = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i)
        tv += std::abs(hist[i] - target[i]);
    return 0.5 * tv;
}

/// One row of the exported curve; NaN marks columns that were not requested.
struct CurveRow {
    double s = 0.0, k = 1.0;
    double L_finite_diff = NAN;
    Estimate L_tilted_mc{NAN, NAN};
    double L_quadrature = NAN;
    Estimate gap{NAN, NAN};
    Estimate rho_eps{NAN, NAN};
};

struct SpectralCurve {
    std::vector<double> s;
    std::vector<SpectralPoint> points;
    std::vector<CurveRow> rows;
    std::optional<double> alpha;
    std::optional<double> k_prime_alpha;
    double L_mu_0 = NAN;
};

struct CurveOptions {
    bool tilted_mc = false;
    bool gap = false;
    bool rho = false;
    double eps = 0.1;
    LyapunovParams lyapunov;
    GapParams gap_params;
    ContractionParams rho_params;
    std::uint64_t seed = 1;
};

inline SpectralCurve spectral_curve(const LinearEnsemble& e, const std::vector<double>& s_grid, const GridPtr& grid,
                                    const CurveOptions& opt = {}, const PowerOptions& popt = {}) {
    if (!std::is_sorted(s_grid.begin(), s_grid.end()) ||
        std::adjacent_find(s_grid.begin(), s_grid.end()) != s_grid.end())
        throw InvalidInput("s values must be strictly increasing");
    if (!s_grid.empty() && s_grid.front() < 0.0)
        throw InvalidInput("negative exponents are not supported");
    KFunction kf(e, grid, popt);
    SpectralCurve curve;
    curve.s = s_grid;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        const double s = s_grid[i];
        PowerOptions o = popt;
        o.with_dual = false;
        const SpectralPoint sp = power_iterate(e, s, grid, o);
        CurveRow row;
        row.s = s;
        row.k = sp.k;
        row.L_finite_diff = lyapunov_finite_diff(kf, s, opt.lyapunov.h);
        row.L_quadrature = lyapunov_quadrature(e, sp);
        const std::uint64_t seed_i = mix64(opt.seed + i);
        if (opt.tilted_mc)
            row.L_tilted_mc = lyapunov_tilted_mc(e, sp, seed_i, opt.lyapunov);
        if (opt.gap && e.dimension >= 2)
            row.gap = lyapunov_gap(e, sp, seed_i, opt.gap_params);
        if (opt.rho && e.dimension >= 2)
            row.rho_eps = contraction_rate(e, sp, std::min(opt.eps, std::max(s, 1e-3)), seed_i, opt.rho_params);
        curve.rows.push_back(row);
        curve.points.push_back(sp);
    }
    curve.L_mu_0 = lyapunov_finite_diff(kf, 0.0, opt.lyapunov.h);
    return curve;
}

inline void write_curve_csv(const SpectralCurve& c, std::ostream& os) {
    CsvWriter w(os);
    w.header({"s", "k", "log_k", "L_finite_diff", "L_tilted_mc", "L_tilted_mc_se", "L_quadrature", "gap", "gap_se",
              "rho_eps", "rho_eps_se"});
    for (const auto& r : c.rows) {
        w.cell(r.s).cell(r.k).cell(std::log(r.k)).cell(r.L_finite_diff).cell(r.L_tilted_mc.value)
            .cell(r.L_tilted_mc.std_error).cell(r.L_quadrature).cell(r.gap.value).cell(r.gap.std_error)
            .cell(r.rho_eps.value).cell(r.rho_eps.std_error);
        w.end_row();
    }
}

} // namespace kesten

#endif // KESTEN_SPECTRUM_HPP
