#ifndef KESTEN_RECURSION_HPP
#define KESTEN_RECURSION_HPP

#include "kesten/csv.hpp"
#include "kesten/ensemble.hpp"
#include "kesten/linalg.hpp"
#include "kesten/parallel.hpp"
#include "kesten/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace kesten {

namespace tag {
inline constexpr std::uint64_t stationary = 0x73746174;
inline constexpr std::uint64_t bootstrap = 0x626f6f74;
} // namespace tag

/// Draws of R = sum_{k>=1} A_1 ... A_{k-1} B_k, stored row-major (N x d).
struct TailSampleBank {
    int dimension = 1;
    std::vector<double> data;
    int n_steps = 0;
    std::uint64_t seed = 0;
    std::string ensemble_hash;
    /// max over samples of |A_1 ... A_n| max|B| at truncation, relative to median |R|
    double truncation = 0.0;
    bool under_converged = false;

    std::size_t size() const { return dimension ? data.size() / static_cast<std::size_t>(dimension) : 0; }
    Vec sample(std::size_t i) const {
        Vec v(dimension);
        for (int j = 0; j < dimension; ++j)
            v(j) = data[i * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(j)];
        return v;
    }
};

struct StationaryOptions {
    double product_floor = 1e-12;   // stop once |A_1 ... A_n| drops below this
    double truncation_cutoff = 1e-6;
    double divergent_fraction = 0.01; // share of samples still undecayed that signals L_mu >= 0
};

/// Backward partial sums R_n, one per sample, each run until the running
/// product norm falls below the floor or n_steps terms have been added.
inline TailSampleBank sample_stationary(const AffineEnsemble& ae, int n_steps, std::size_t n_samples,
                                        std::uint64_t seed, const StationaryOptions& opt = {}) {
    if (n_steps < 1 || n_samples < 1)
        throw InvalidInput("n_steps and n_samples must be positive");
    const int d = ae.dimension;
    const auto cum = ae.cumulative();
    double bmax = 0.0;
    for (const auto& a : ae.atoms)
        bmax = std::max(bmax, a.translation.norm());
    TailSampleBank bank;
    bank.dimension = d;
    bank.n_steps = n_steps;
    bank.seed = seed;
    bank.data.assign(n_samples * static_cast<std::size_t>(d), 0.0);
    std::vector<double> remainder(n_samples, 0.0);

    if (d == 1) {
        std::vector<double> a(ae.atoms.size()), b(ae.atoms.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            a[j] = ae.atoms[j].matrix(0, 0);
            b[j] = ae.atoms[j].translation(0);
        }
        for_blocks(n_samples, kBlock, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
            Engine rng = make_stream(seed, tag::stationary, blk);
            for (std::size_t i = lo; i < hi; ++i) {
                double p = 1.0, r = 0.0;
                for (int k = 0; k < n_steps && std::abs(p) >= opt.product_floor; ++k) {
                    const int j = draw_index(cum, rng);
                    r += p * b[j];
                    p *= a[j];
                }
                bank.data[i] = r;
                remainder[i] = std::abs(p) * bmax;
            }
        });
    } else {
        for_blocks(n_samples, kBlock, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
            Engine rng = make_stream(seed, tag::stationary, blk);
            for (std::size_t i = lo; i < hi; ++i) {
                Mat p = Mat::Identity(d, d);
                Vec r = Vec::Zero(d);
                // Frobenius norm bounds the operator norm from above
                for (int k = 0; k < n_steps && p.norm() >= opt.product_floor; ++k) {
                    const auto& atom = ae.atoms[static_cast<std::size_t>(draw_index(cum, rng))];
                    r.noalias() += p * atom.translation;
                    p = p * atom.matrix;
                }
                for (int j = 0; j < d; ++j)
                    bank.data[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = r(j);
                remainder[i] = p.norm() * bmax;
            }
        });
    }

    std::size_t undecayed = 0;
    double worst = 0.0;
    for (double rem : remainder) {
        if (!std::isfinite(rem) || rem >= bmax)
            ++undecayed;
        if (std::isfinite(rem))
            worst = std::max(worst, rem);
    }
    for (double v : bank.data)
        if (!std::isfinite(v))
            throw HypothesisViolation("L_mu >= 0 suspected: partial sums overflowed");
    if (bmax > 0.0 && static_cast<double>(undecayed) > opt.divergent_fraction * static_cast<double>(n_samples))
        throw HypothesisViolation("L_mu >= 0 suspected: running products did not decay in " +
                                  std::to_string(n_steps) + " steps");
    std::vector<double> norms(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        norms[i] = bank.sample(i).norm();
    auto mid = norms.begin() + static_cast<std::ptrdiff_t>(n_samples / 2);
    std::nth_element(norms.begin(), mid, norms.end());
    const double med = *mid;
    bank.truncation = worst == 0.0 ? 0.0 : (med > 0.0 ? worst / med : INFINITY);
    bank.under_converged = bank.truncation > opt.truncation_cutoff;
    return bank;
}

/// |R| for every sample.
inline std::vector<double> norm_statistic(const TailSampleBank& bank) {
    std::vector<double> out(bank.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = bank.sample(i).norm();
    return out;
}

/// <R, u> for every sample (not truncated at 0).
inline std::vector<double> projection_statistic(const TailSampleBank& bank, const Vec& u) {
    std::vector<double> out(bank.size());
    const std::size_t d = static_cast<std::size_t>(bank.dimension);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += bank.data[i * d + j] * u(static_cast<int>(j));
        out[i] = acc;
    }
    return out;
}

struct HillResult {
    double alpha = NAN;
    double ci_lo = NAN, ci_hi = NAN;
    std::size_t k = 0;
    std::vector<std::pair<std::size_t, double>> stability; // (k, alpha_hat) across k
    bool stable = true;
    std::string flag;
};

namespace detail {
/// Descending top (k+1) order statistics of the positive values.
inline std::vector<double> top_order_statistics(const std::vector<double>& x, std::size_t k) {
    std::vector<double> pos;
    pos.reserve(x.size());
    for (double v : x)
        if (v > 0.0)
            pos.push_back(v);
    if (pos.size() < k + 1)
        throw InvalidInput("fewer than k_order + 1 positive values (" + std::to_string(pos.size()) + ")");
    std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k + 1), pos.end(), std::greater<>());
    pos.resize(k + 1);
    return pos;
}

inline double hill_from_sorted(const std::vector<double>& top, std::size_t k) {
    const double lk = std::log(top[k]);
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        h += std::log(top[i]) - lk;
    return static_cast<double>(k) / h;
}
} // namespace detail

/// Hill estimator on the top k order statistics of the positive entries of x,
/// with CI alpha (1 +- 1.96/sqrt k) and a stability scan over k in [N/1000, N/10].
inline HillResult hill_estimator(const std::vector<double>& x, std::size_t k_order) {
    if (k_order < 2 || 2 * k_order >= x.size())
        throw InvalidInput("k_order must satisfy 2 <= k_order < N/2");
    const std::size_t n = x.size();
    const std::size_t k_max = std::max(k_order, n / 10);
    std::vector<double> top;
    try {
        top = detail::top_order_statistics(x, k_max);
    } catch (const InvalidInput&) {
        top = detail::top_order_statistics(x, k_order);
    }
    HillResult out;
    out.k = k_order;
    out.alpha = detail::hill_from_sorted(top, k_order);
    const double half = 1.96 / std::sqrt(static_cast<double>(k_order));
    out.ci_lo = out.alpha * (1.0 - half);
    out.ci_hi = out.alpha * (1.0 + half);
    const std::size_t k_lo = std::max<std::size_t>(10, n / 1000);
    const std::size_t k_hi = std::min(top.size() - 1, n / 10);
    double amin = INFINITY, amax = 0.0;
    for (int i = 0; i <= 8 && k_lo < k_hi; ++i) {
        const double t = i / 8.0;
        const auto k = static_cast<std::size_t>(std::round(std::exp((1 - t) * std::log(k_lo) + t * std::log(k_hi))));
        const double a = detail::hill_from_sorted(top, k);
        out.stability.emplace_back(k, a);
        amin = std::min(amin, a);
        amax = std::max(amax, a);
    }
    if (!out.stability.empty() && amax > 2.0 * amin) {
        out.stable = false;
        out.flag = "no power tail";
    }
    return out;
}

struct TailRow {
    double t = 0.0;
    double scaled = 0.0; // t^alpha P^{stat > t}
    std::size_t exceedances = 0;
};

struct TailTable {
    std::vector<TailRow> rows;
    double plateau = NAN;
    double ci_lo = NAN, ci_hi = NAN;
    double window_lo = NAN, window_hi = NAN;
};

inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
    std::vector<double> t;
    if (!(lo > 0.0) || !(hi > lo))
        return t;
    const double step = 1.0 / per_decade;
    for (double e = std::floor(std::log10(lo) * per_decade) / per_decade; e <= std::log10(hi) + 1e-12; e += step)
        t.push_back(std::pow(10.0, e));
    return t;
}

/// t^alpha P^{x > t} on a t grid and its plateau: the exceedance-weighted mean
/// over the largest decade whose upper end still has >= 100 exceedances.
/// The CI is a multinomial bootstrap of the sample (resampled bin counts).
inline TailTable empirical_tail(const std::vector<double>& x, double alpha, std::vector<double> t_grid = {},
                                std::size_t n_boot = 400, std::uint64_t seed = 1, std::size_t min_exceed = 100) {
    const std::size_t n = x.size();
    std::vector<double> pos;
    for (double v : x)
        if (v > 0.0)
            pos.push_back(v);
    std::sort(pos.begin(), pos.end());
    if (t_grid.empty() && !pos.empty())
        t_grid = log_grid(std::max(pos[pos.size() / 2], pos.back() * 1e-8), pos.back(), 10);
    TailTable out;
    if (pos.empty()) {
        // nothing above 0: the tail is identically zero
        for (double t : t_grid)
            out.rows.push_back({t, 0.0, 0});
        out.plateau = out.ci_lo = out.ci_hi = 0.0;
        return out;
    }
    auto exceed = [&](double t) {
        return static_cast<std::size_t>(pos.end() - std::upper_bound(pos.begin(), pos.end(), t));
    };
    for (double t : t_grid)
        out.rows.push_back({t, std::pow(t, alpha) * static_cast<double>(exceed(t)) / static_cast<double>(n), exceed(t)});
    int top = -1;
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        if (out.rows[i].exceedances >= min_exceed)
            top = static_cast<int>(i);
    if (top < 0)
        throw InvalidInput("insufficient exceedances at every t in the grid");
    const double t_hi = out.rows[static_cast<std::size_t>(top)].t;
    std::vector<std::size_t> win;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(top); ++i)
        if (out.rows[i].t >= t_hi / 10.0 * (1 - 1e-12))
            win.push_back(i);
    out.window_lo = out.rows[win.front()].t;
    out.window_hi = t_hi;

    auto plateau_of = [&](const std::vector<double>& counts) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < win.size(); ++j) {
            const double t = out.rows[win[j]].t;
            num += counts[j] * std::pow(t, alpha) * counts[j] / static_cast<double>(n);
            den += counts[j];
        }
        return den > 0.0 ? num / den : 0.0;
    };
    std::vector<double> counts(win.size());
    for (std::size_t j = 0; j < win.size(); ++j)
        counts[j] = static_cast<double>(out.rows[win[j]].exceedances);
    out.plateau = plateau_of(counts);

    // bins: (t_j, t_{j+1}] for the window and (t_last, inf); resample by sequential binomials
    std::vector<double> bin(win.size());
    for (std::size_t j = 0; j < win.size(); ++j)
        bin[j] = counts[j] - (j + 1 < win.size() ? counts[j + 1] : 0.0);
    std::vector<double> boots(n_boot);
    Engine rng = make_stream(seed, tag::bootstrap, 0);
    for (std::size_t b = 0; b < n_boot; ++b) {
        std::vector<double> rc(win.size());
        std::uint64_t left = n;
        double mass_left = static_cast<double>(n);
        for (std::size_t j = 0; j < win.size(); ++j) {
            const double pj = std::min(1.0, bin[j] / mass_left);
            const auto c = std::binomial_distribution<std::uint64_t>(left, pj)(rng);
            rc[j] = static_cast<double>(c);
            left -= c;
            mass_left -= bin[j];
        }
        for (std::size_t j = win.size(); j-- > 0;)
            if (j + 1 < win.size())
                rc[j] += rc[j + 1];
        boots[b] = plateau_of(rc);
    }
    std::sort(boots.begin(), boots.end());
    if (n_boot >= 2) {
        out.ci_lo = boots[static_cast<std::size_t>(0.025 * static_cast<double>(n_boot - 1))];
        out.ci_hi = boots[static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(n_boot - 1)))];
    }
    return out;
}

struct DirectionalProfile {
    std::vector<Vec> directions;
    std::vector<TailTable> tails;
    std::vector<double> ratios; // C^(u) / weight(u)
    double cv = NAN;
};

/// Plateau C^(u) per direction divided by weight(u) (typically *e^alpha(u));
/// the coefficient of variation of the ratios measures proportionality.
inline DirectionalProfile directional_profile(const TailSampleBank& bank, double alpha, const std::vector<Vec>& directions,
                                              const std::function<double(const Vec&)>& weight, std::size_t n_boot = 200,
                                              std::uint64_t seed = 1) {
    DirectionalProfile out;
    out.directions = directions;
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const auto stat = projection_statistic(bank, directions[i]);
        out.tails.push_back(empirical_tail(stat, alpha, {}, n_boot, mix64(seed + i)));
        out.ratios.push_back(out.tails.back().plateau / weight(directions[i]));
    }
    double m = 0.0;
    for (double r : out.ratios)
        m += r;
    m /= static_cast<double>(out.ratios.size());
    double v = 0.0;
    for (double r : out.ratios)
        v += (r - m) * (r - m);
    v /= std::max<double>(1.0, static_cast<double>(out.ratios.size()) - 1.0);
    out.cv = std::sqrt(v) / m;
    return out;
}

struct MellinRow {
    double s = 0.0;
    double scaled_moment = 0.0; // (alpha - s) mean(x_+^s)
    double top_share = 0.0;     // share of the moment carried by the top 0.1% of samples
    bool used = false;
};

struct MellinResult {
    std::vector<MellinRow> rows;
    double estimate = NAN; // alpha^{-1} lim (alpha - s) E x_+^s
    double ci_lo = NAN, ci_hi = NAN;
};

namespace detail {
// Least-squares polynomial in (s - at) evaluated at `at`: quadratic when four or
// more points are available, linear otherwise.
inline double poly_extrapolate(const std::vector<double>& s, const std::vector<double>& y, double at) {
    const int deg = s.size() >= 4 ? 2 : 1;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(s.size()), deg + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (int k = 0; k <= deg; ++k)
            a(r, k) = std::pow(s[i] - at, k);
        b(r) = y[i];
    }
    return a.colPivHouseholderQr().solve(b)(0);
}
} // namespace detail

/// Extrapolates (alpha - s) mean(x_+^s) to s = alpha. Exponents whose empirical
/// moment is dominated by the top 0.1% of the sample (share > max_share) are
/// dropped, along with every larger s; a quadratic least-squares fit through the
/// remaining points gives the limit.
/// The CI comes from the same rule applied to `n_batches` disjoint batches.
inline MellinResult mellin_profile(const std::vector<double>& x, double alpha, std::vector<double> s_grid = {},
                                   double max_share = 0.2, std::size_t n_batches = 20) {
    if (s_grid.empty())
        for (int i = 6; i <= 19; ++i)
            s_grid.push_back(alpha * i / 20.0);
    if (*std::max_element(s_grid.begin(), s_grid.end()) < 0.9 * alpha)
        throw InvalidInput("s grid must reach 0.9 alpha");
    for (double s : s_grid)
        if (!(s > 0.0 && s < alpha))
            throw InvalidInput("s grid must lie in (0, alpha)");
    std::sort(s_grid.begin(), s_grid.end());

    std::vector<double> pos;
    for (double v : x)
        pos.push_back(v > 0.0 ? v : 0.0);
    const std::size_t n = pos.size();
    std::vector<double> sorted = pos;
    const std::size_t n_top = std::max<std::size_t>(1, n / 1000);
    std::nth_element(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(n_top), sorted.end());
    const double top_threshold = *(sorted.end() - static_cast<std::ptrdiff_t>(n_top));

    MellinResult out;
    std::vector<double> su, yu;
    bool clipped = false;
    for (double s : s_grid) {
        double total = 0.0, top = 0.0;
        for (double v : pos) {
            if (v <= 0.0)
                continue;
            const double p = std::pow(v, s);
            total += p;
            if (v >= top_threshold)
                top += p;
        }
        MellinRow row;
        row.s = s;
        row.scaled_moment = (alpha - s) * total / static_cast<double>(n);
        row.top_share = total > 0.0 ? top / total : 0.0;
        clipped = clipped || row.top_share > max_share;
        row.used = !clipped;
        out.rows.push_back(row);
    }
    for (const auto& r : out.rows)
        if (r.used) {
            su.push_back(r.s);
            yu.push_back(r.scaled_moment);
        }
    if (su.size() < 2)
        throw InvalidInput("moments dominated by extremes at every s; lower the s grid");
    const std::vector<double>& fs = su;
    out.estimate = detail::poly_extrapolate(su, yu, alpha) / alpha;

    if (n_batches >= 2 && n >= 100 * n_batches) {
        const std::size_t bs = n / n_batches;
        std::vector<double> est(n_batches);
        for (std::size_t b = 0; b < n_batches; ++b) {
            std::vector<double> by;
            for (double s : fs) {
                double total = 0.0;
                for (std::size_t i = b * bs; i < (b + 1) * bs; ++i)
                    if (pos[i] > 0.0)
                        total += std::pow(pos[i], s);
                by.push_back((alpha - s) * total / static_cast<double>(bs));
            }
            est[b] = detail::poly_extrapolate(fs, by, alpha) / alpha;
        }
        double m = 0.0;
        for (double v : est)
            m += v;
        m /= static_cast<double>(n_batches);
        double var = 0.0;
        for (double v : est)
            var += (v - m) * (v - m);
        var /= static_cast<double>(n_batches - 1);
        const double half = 1.96 * std::sqrt(var / static_cast<double>(n_batches));
        out.ci_lo = out.estimate - half;
        out.ci_hi = out.estimate + half;
    }
    return out;
}

struct MomentRow {
    double beta = 0.0;
    double moment = NAN;          // mean |R|^beta over the bank
    double batch_spread = NAN;    // sd of batch means / mean
    std::vector<double> prefix;   // moments on the first N/100, N/10, N samples
    bool expected_finite = true;  // beta < alpha
    bool growing = false;         // prefix moments increase with N
};

inline std::vector<MomentRow> moment_check(const std::vector<double>& norms, double alpha,
                                           const std::vector<double>& beta_grid, std::size_t n_batches = 10) {
    std::vector<MomentRow> rows;
    const std::size_t n = norms.size();
    for (double beta : beta_grid) {
        MomentRow r;
        r.beta = beta;
        r.expected_finite = beta < alpha;
        auto moment_range = [&](std::size_t lo, std::size_t hi) {
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i)
                acc += beta == 0.0 ? 1.0 : std::pow(norms[i], beta);
            return acc / static_cast<double>(hi - lo);
        };
        r.moment = moment_range(0, n);
        const std::size_t bs = n / n_batches;
        if (bs > 0) {
            std::vector<double> bm(n_batches);
            for (std::size_t b = 0; b < n_batches; ++b)
                bm[b] = moment_range(b * bs, (b + 1) * bs);
            double m = 0.0, v = 0.0;
            for (double x : bm)
                m += x;
            m /= static_cast<double>(n_batches);
            for (double x : bm)
                v += (x - m) * (x - m);
            v /= static_cast<double>(n_batches - 1);
            r.batch_spread = std::sqrt(v) / m;
        }
        for (std::size_t len : {n / 100, n / 10, n})
            if (len > 0)
                r.prefix.push_back(moment_range(0, len));
        r.growing = r.prefix.size() == 3 && r.prefix[0] < r.prefix[1] && r.prefix[1] < r.prefix[2];
        rows.push_back(r);
    }
    return rows;
}

enum class TailCase { I, II_prime, II_double_prime, unknown };

inline std::string_view to_string(TailCase c) {
    switch (c) {
    case TailCase::I: return "I";
    case TailCase::II_prime: return "II'";
    case TailCase::II_double_prime: return "II''";
    case TailCase::unknown: return "unknown";
    }
    return "?";
}

struct TailCaseResult {
    TailCase tail_case = TailCase::unknown;
    double plus_share = NAN, minus_share = NAN; // of the largest 1% of |R|
};

/// Case I without an invariant cone; in case II the directions of the largest
/// 1% of samples are split between +Lambda_+ and -Lambda_+: both charged (>= 1%) is II'.
inline TailCaseResult classify_tail_case(const ConeResult& cone, const TailSampleBank& bank, double min_share = 0.01) {
    TailCaseResult out;
    if (cone.cone_case == ConeCase::unknown)
        throw InvalidInput("cone case unknown; tail case cannot be classified");
    if (cone.cone_case == ConeCase::I) {
        out.tail_case = TailCase::I;
        return out;
    }
    Vec c = Vec::Zero(bank.dimension);
    for (const auto& a : cone.positive_attractor)
        c += a;
    if (bank.dimension == 1)
        c = Vec::Ones(1);
    const auto norms = norm_statistic(bank);
    std::vector<double> sorted = norms;
    const std::size_t n_top = std::max<std::size_t>(1, norms.size() / 100);
    std::nth_element(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(n_top), sorted.end());
    const double thr = *(sorted.end() - static_cast<std::ptrdiff_t>(n_top));
    std::size_t plus = 0, minus = 0, total = 0;
    for (std::size_t i = 0; i < norms.size(); ++i)
        if (norms[i] >= thr) {
            ++total;
            (bank.sample(i).dot(c) > 0.0 ? plus : minus)++;
        }
    out.plus_share = static_cast<double>(plus) / static_cast<double>(total);
    out.minus_share = static_cast<double>(minus) / static_cast<double>(total);
    out.tail_case = std::min(out.plus_share, out.minus_share) >= min_share ? TailCase::II_prime : TailCase::II_double_prime;
    return out;
}

/// CSV persistence: '#' header lines (hash, seed, n_steps, truncation) then x0..x{d-1}.
inline void write_bank_csv(const TailSampleBank& bank, std::ostream& os) {
    os << "# ensemble_hash=" << bank.ensemble_hash << "\n# seed=" << bank.seed << "\n# n_steps=" << bank.n_steps
       << "\n# truncation=" << format_double(bank.truncation) << '\n';
    CsvWriter w(os);
    std::vector<std::string> cols;
    for (int j = 0; j < bank.dimension; ++j)
        cols.push_back("x" + std::to_string(j));
    w.header(cols);
    for (std::size_t i = 0; i < bank.size(); ++i) {
        for (int j = 0; j < bank.dimension; ++j)
            w.cell(bank.data[i * static_cast<std::size_t>(bank.dimension) + static_cast<std::size_t>(j)]);
        w.end_row();
    }
}

namespace detail {
inline constexpr char kBankMagic[8] = {'K', 'S', 'T', 'B', 'A', 'N', 'K', '1'};
template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is)
        throw InvalidInput("truncated sample bank");
    return v;
}
} // namespace detail

/// Flat binary: magic, d, N, seed, n_steps, truncation, hash length + bytes, N*d doubles (host byte order).
inline void write_bank_binary(const TailSampleBank& bank, std::ostream& os) {
    os.write(detail::kBankMagic, sizeof detail::kBankMagic);
    detail::put(os, static_cast<std::int32_t>(bank.dimension));
    detail::put(os, static_cast<std::uint64_t>(bank.size()));
    detail::put(os, bank.seed);
    detail::put(os, static_cast<std::int32_t>(bank.n_steps));
    detail::put(os, bank.truncation);
    detail::put(os, static_cast<std::uint32_t>(bank.ensemble_hash.size()));
    os.write(bank.ensemble_hash.data(), static_cast<std::streamsize>(bank.ensemble_hash.size()));
    os.write(reinterpret_cast<const char*>(bank.data.data()), static_cast<std::streamsize>(bank.data.size() * sizeof(double)));
}

inline TailSampleBank read_bank_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, detail::kBankMagic, sizeof magic) != 0)
        throw InvalidInput("not a sample bank file");
    TailSampleBank bank;
    bank.dimension = detail::get<std::int32_t>(is);
    const auto n = detail::get<std::uint64_t>(is);
    bank.seed = detail::get<std::uint64_t>(is);
    bank.n_steps = detail::get<std::int32_t>(is);
    bank.truncation = detail::get<double>(is);
    const auto hl = detail::get<std::uint32_t>(is);
    bank.ensemble_hash.resize(hl);
    is.read(bank.ensemble_hash.data(), hl);
    bank.data.resize(n * static_cast<std::size_t>(bank.dimension));
    is.read(reinterpret_cast<char*>(bank.data.data()), static_cast<std::streamsize>(bank.data.size() * sizeof(double)));
    if (!is)
        throw InvalidInput("truncated sample bank");
    return bank;
}

} // namespace kesten

#endif // KESTEN_RECURSION_HPP
