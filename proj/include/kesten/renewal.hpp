#ifndef KESTEN_RENEWAL_HPP
#define KESTEN_RENEWAL_HPP

#include "kesten/csv.hpp"
#include "kesten/ensemble.hpp"
#include "kesten/parallel.hpp"
#include "kesten/random.hpp"
#include "kesten/spectrum.hpp"
#include "kesten/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kesten {

namespace tag {
inline constexpr std::uint64_t expanding = 0x65787061;
inline constexpr std::uint64_t cramer_naive = 0x63726e76;
inline constexpr std::uint64_t cramer_tilted = 0x63727474;
inline constexpr std::uint64_t tilted_potential = 0x74706f74;
inline constexpr std::uint64_t dual_walk = 0x6475616c;
} // namespace tag

/// f(w) = 1{r_lo <= |w| < r_hi} 1{|<w/|w|, center>| >= cos_radius}. Without a
/// center the directional factor is 1.
struct AnnulusTest {
    std::string name;
    double r_lo = 1.0, r_hi = 2.0;
    std::optional<Vec> center;
    double cos_radius = -1.0;

    bool direction_ok(const Vec& x) const { return !center || std::abs(x.dot(*center)) >= cos_radius; }
    bool contains(const Vec& x, double log_norm) const {
        return log_norm >= std::log(r_lo) && log_norm < std::log(r_hi) && direction_ok(x);
    }
    /// Mass of the directional factor under a projective grid measure (total 1).
    double direction_mass(const GridMeasure& nu) const {
        double m = 0.0;
        for (std::size_t i = 0; i < nu.masses.size(); ++i)
            if (direction_ok(nu.grid->node(i)))
                m += nu.masses[i];
        return m;
    }
};

struct RenewalRow {
    std::string label; // test function name or t
    double measured = NAN, predicted = NAN, std_error = NAN;
    std::string flag;
};

struct RenewalReport {
    std::string regime; // "expanding" or "contracting-tilted"
    std::vector<RenewalRow> rows;
};

inline void write_renewal_csv(const RenewalReport& r, std::ostream& os) {
    CsvWriter w(os);
    w.header({"regime", "label", "measured", "predicted", "stderr", "flag"});
    for (const auto& row : r.rows) {
        w.cell(r.regime).cell(row.label).cell(row.measured).cell(row.predicted).cell(row.std_error).cell(row.flag);
        w.end_row();
    }
}

struct ExpandingOptions {
    std::size_t n_paths = 100000;
    int max_steps = 100000;
    double exit_margin = 15.0; // stop once log|S_k v0| exceeds log r_hi by this much
};

/// Mean number of visits sum_k f(S_k v0) per path for each annulus test, next
/// to the limit (log(r_hi/r_lo)) nu(directions) / L_mu. `nu` is the
/// projective stationary measure (s = 0); `L_mu` the Lyapunov exponent (> 0).
inline RenewalReport potential_profile_expanding(const LinearEnsemble& e, const Vec& v0,
                                                 const std::vector<AnnulusTest>& tests, double L_mu,
                                                 const GridMeasure* nu, std::uint64_t seed,
                                                 const ExpandingOptions& opt = {}) {
    if (!(L_mu > 0.0))
        throw HypothesisViolation("expanding renewal needs L_mu > 0");
    if (v0.norm() == 0.0)
        throw InvalidInput("v0 must be nonzero");
    double log_top = -INFINITY;
    for (const auto& t : tests)
        log_top = std::max(log_top, std::log(t.r_hi));
    const double exit_level = log_top + opt.exit_margin;
    const std::size_t m = tests.size();
    const std::size_t n_blocks = (opt.n_paths + kBlock - 1) / kBlock;
    std::vector<double> sum(n_blocks * m, 0.0), sum2(n_blocks * m, 0.0);
    std::vector<std::size_t> stuck(n_blocks, 0);
    const auto cum = e.cumulative();
    for_blocks(opt.n_paths, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        Engine rng = make_stream(seed, tag::expanding, b);
        std::vector<double> visits(m);
        for (std::size_t p = lo; p < hi; ++p) {
            std::fill(visits.begin(), visits.end(), 0.0);
            Vec x = v0 / v0.norm();
            double l = std::log(v0.norm());
            int k = 0;
            for (;; ++k) {
                for (std::size_t j = 0; j < m; ++j)
                    if (tests[j].contains(x, l))
                        visits[j] += 1.0;
                if (l > exit_level)
                    break;
                if (k >= opt.max_steps) {
                    ++stuck[b];
                    break;
                }
                const Action a = act(e.atoms[static_cast<std::size_t>(draw_index(cum, rng))].matrix, x);
                x = a.y;
                l += a.lognorm;
            }
            for (std::size_t j = 0; j < m; ++j) {
                sum[b * m + j] += visits[j];
                sum2[b * m + j] += visits[j] * visits[j];
            }
        }
    });
    RenewalReport rep;
    rep.regime = "expanding";
    std::size_t n_stuck = 0;
    for (auto s : stuck)
        n_stuck += s;
    const double n = static_cast<double>(opt.n_paths);
    for (std::size_t j = 0; j < m; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            s1 += sum[b * m + j];
            s2 += sum2[b * m + j];
        }
        RenewalRow row;
        row.label = tests[j].name;
        row.measured = s1 / n;
        row.std_error = std::sqrt(std::max(0.0, s2 / n - row.measured * row.measured) / std::max(1.0, n - 1.0));
        const double dir = nu ? tests[j].direction_mass(*nu) : 1.0;
        row.predicted = std::log(tests[j].r_hi / tests[j].r_lo) * dir / L_mu;
        if (n_stuck > 0)
            row.flag = std::to_string(n_stuck) + " paths hit max_steps";
        rep.rows.push_back(row);
    }
    return rep;
}

enum class CramerMethod { naive, tilted };

struct CramerRow {
    double t = 0.0;
    double A = NAN;         // t^alpha P{sup_n |S_n u| > t}
    double std_error = NAN;
    std::size_t hits = 0;   // paths that crossed t
    std::string flag;
};

struct CramerTable {
    Vec u;
    CramerMethod method = CramerMethod::naive;
    std::vector<CramerRow> rows;
    std::size_t n_paths = 0;
};

struct CramerOptions {
    std::size_t n_paths = 100000;
    int max_steps = 20000;
    double stop_depth = 25.0;     // naive: stop once alpha log|S_n u| < -stop_depth
    std::size_t min_hits = 30;    // naive: fewer crossings flags the entry
};

/// t^alpha P{sup_{n>=0} |S_n u| > t} on a t grid (n = 0 included, so t < 1
/// gives t^alpha). naive: plain simulation under mu. tilted: the q^alpha chain
/// run until log|S_n u| > log t, each crossing weighted by the exact likelihood
/// ratio e(u) prod_k N(x_k) / (e(x_T) |S_T u|^alpha), N the per-step normalizers.
inline CramerTable cramer_constant(const LinearEnsemble& e, const Vec& u, std::vector<double> t_grid, double alpha,
                                   CramerMethod method, const SpectralPoint* sp_alpha, std::uint64_t seed,
                                   const CramerOptions& opt = {}) {
    if (method == CramerMethod::tilted && !sp_alpha)
        throw InvalidInput("tilted Cramer estimate needs the spectral point at alpha");
    std::sort(t_grid.begin(), t_grid.end());
    const std::size_t m = t_grid.size();
    std::vector<double> log_t(m);
    for (std::size_t j = 0; j < m; ++j)
        log_t[j] = std::log(t_grid[j]);
    const std::size_t n_blocks = (opt.n_paths + kBlock - 1) / kBlock;
    std::vector<double> sum(n_blocks * m, 0.0), sum2(n_blocks * m, 0.0);
    std::vector<std::size_t> hits(n_blocks * m, 0), capped(n_blocks, 0);
    const Vec u0 = u / u.norm();
    const std::uint64_t tg = method == CramerMethod::naive ? tag::cramer_naive : tag::cramer_tilted;

    for_blocks(opt.n_paths, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        Engine rng = make_stream(seed, tg, b);
        TiltedSampler sampler(e, method == CramerMethod::tilted ? sp_alpha : nullptr);
        const double e_u = method == CramerMethod::tilted ? interpolate(sp_alpha->e, u0) : 1.0;
        for (std::size_t p = lo; p < hi; ++p) {
            Vec x = u0;
            double l = 0.0, log_norm_prod = 0.0;
            std::size_t next = 0;
            auto record = [&](double weight) {
                while (next < m && l > log_t[next]) {
                    sum[b * m + next] += weight;
                    sum2[b * m + next] += weight * weight;
                    ++hits[b * m + next];
                    ++next;
                }
            };
            auto weight_now = [&] {
                if (method == CramerMethod::naive)
                    return 1.0;
                return std::exp(std::log(e_u) + log_norm_prod - std::log(interpolate(sp_alpha->e, x)) - alpha * l);
            };
            record(weight_now());
            int k = 0;
            while (next < m) {
                if (method == CramerMethod::naive && alpha * l < -opt.stop_depth)
                    break;
                if (k++ >= opt.max_steps) {
                    ++capped[b];
                    break;
                }
                const auto st = sampler.step(x, rng);
                x = st.y;
                l += st.lognorm;
                if (method == CramerMethod::tilted)
                    log_norm_prod += std::log(st.normalizer);
                if (l > log_t[next])
                    record(weight_now());
            }
        }
    });

    CramerTable out;
    out.u = u0;
    out.method = method;
    out.n_paths = opt.n_paths;
    std::size_t n_capped = 0;
    for (auto c : capped)
        n_capped += c;
    const double n = static_cast<double>(opt.n_paths);
    for (std::size_t j = 0; j < m; ++j) {
        double s1 = 0.0, s2 = 0.0;
        std::size_t h = 0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            s1 += sum[b * m + j];
            s2 += sum2[b * m + j];
            h += hits[b * m + j];
        }
        CramerRow row;
        row.t = t_grid[j];
        const double scale = std::pow(t_grid[j], alpha);
        const double mean = s1 / n;
        row.A = scale * mean;
        row.std_error = scale * std::sqrt(std::max(0.0, s2 / n - mean * mean) / std::max(1.0, n - 1.0));
        row.hits = h;
        if (method == CramerMethod::naive && h < opt.min_hits)
            row.flag = "starved";
        if (n_capped > 0)
            row.flag += (row.flag.empty() ? "" : ";") + std::to_string(n_capped) + " paths hit max_steps";
        out.rows.push_back(row);
    }
    return out;
}

/// Mean of A over the rows of the top decade of t (unflagged rows only).
inline Estimate cramer_plateau(const CramerTable& tab) {
    double t_hi = 0.0;
    for (const auto& r : tab.rows)
        if (r.flag.empty())
            t_hi = std::max(t_hi, r.t);
    double num = 0.0, var = 0.0;
    int cnt = 0;
    for (const auto& r : tab.rows)
        if (r.flag.empty() && r.t >= t_hi / 10.0 * (1 - 1e-12)) {
            num += r.A;
            var = std::max(var, r.std_error * r.std_error);
            ++cnt;
        }
    if (cnt == 0)
        return {NAN, NAN};
    // rows share paths, so the errors are not averaged down
    return {num / cnt, std::sqrt(var)};
}

inline void write_cramer_csv(const std::vector<CramerTable>& tabs, const std::function<double(const Vec&)>& e_alpha,
                             std::ostream& os) {
    CsvWriter w(os);
    w.header({"method", "direction_index", "t", "A_hat", "stderr", "A_over_e_alpha", "hits", "flag"});
    for (std::size_t i = 0; i < tabs.size(); ++i) {
        const double ev = e_alpha(tabs[i].u);
        for (const auto& r : tabs[i].rows) {
            w.cell(tabs[i].method == CramerMethod::naive ? "naive" : "tilted").cell(i).cell(r.t).cell(r.A)
                .cell(r.std_error).cell(r.A / ev).cell(r.hits).cell(r.flag);
            w.end_row();
        }
    }
}

/// t^{-alpha} sum_k E f(S_k(t u)) for annulus tests by tilted sampling (each
/// visit weighted by the likelihood ratio at its time), next to
/// e^alpha(u)/L_mu(alpha) (nu^alpha x l^alpha)(f), l^alpha(dr) = dr / r^{alpha+1}.
inline RenewalReport tilted_potential_profile(const LinearEnsemble& e, const SpectralPoint& sp_alpha, double alpha,
                                              double L_alpha, const Vec& u, double t,
                                              const std::vector<AnnulusTest>& tests, std::uint64_t seed,
                                              std::size_t n_paths = 100000, int max_steps = 20000,
                                              double exit_margin = 15.0) {
    const std::size_t m = tests.size();
    double log_top = -INFINITY;
    for (const auto& f : tests)
        log_top = std::max(log_top, std::log(f.r_hi));
    const double exit_level = log_top + exit_margin;
    const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    std::vector<double> sum(n_blocks * m, 0.0), sum2(n_blocks * m, 0.0);
    std::vector<std::size_t> capped(n_blocks, 0);
    const Vec u0 = u / u.norm();
    const double e_u = interpolate(sp_alpha.e, u0);
    for_blocks(n_paths, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        Engine rng = make_stream(seed, tag::tilted_potential, b);
        TiltedSampler sampler(e, &sp_alpha);
        std::vector<double> acc(m);
        for (std::size_t p = lo; p < hi; ++p) {
            std::fill(acc.begin(), acc.end(), 0.0);
            Vec x = u0;
            double l = 0.0, log_prod = 0.0; // l = log|S_k u|
            for (int k = 0;; ++k) {
                const double lw = std::log(t) + l;
                double w = -1.0; // W_k t^{-alpha}, computed on the first hit
                for (std::size_t j = 0; j < m; ++j)
                    if (tests[j].contains(x, lw)) {
                        if (w < 0.0)
                            w = std::exp(std::log(e_u) + log_prod - std::log(interpolate(sp_alpha.e, x)) - alpha * l -
                                         alpha * std::log(t));
                        acc[j] += w;
                    }
                if (lw > exit_level)
                    break;
                if (k >= max_steps) {
                    ++capped[b];
                    break;
                }
                const auto st = sampler.step(x, rng);
                x = st.y;
                l += st.lognorm;
                log_prod += std::log(st.normalizer);
            }
            for (std::size_t j = 0; j < m; ++j) {
                sum[b * m + j] += acc[j];
                sum2[b * m + j] += acc[j] * acc[j];
            }
        }
    });
    RenewalReport rep;
    rep.regime = "contracting-tilted";
    std::size_t n_capped = 0;
    for (auto c : capped)
        n_capped += c;
    const double n = static_cast<double>(n_paths);
    for (std::size_t j = 0; j < m; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            s1 += sum[b * m + j];
            s2 += sum2[b * m + j];
        }
        RenewalRow row;
        row.label = tests[j].name;
        row.measured = s1 / n;
        row.std_error = std::sqrt(std::max(0.0, s2 / n - row.measured * row.measured) / std::max(1.0, n - 1.0));
        const double radial = (std::pow(tests[j].r_lo, -alpha) - std::pow(tests[j].r_hi, -alpha)) / alpha;
        row.predicted = e_u / L_alpha * tests[j].direction_mass(sp_alpha.nu) * radial;
        if (n_capped > 0)
            row.flag = std::to_string(n_capped) + " paths hit max_steps";
        rep.rows.push_back(row);
    }
    return rep;
}

struct DualWalkRecord {
    Vec u0;
    double p0 = 0.0;
    int n_steps = 0;
    Vec u_final;
    double p_final = 0.0;
    std::vector<int> ladder_epochs;          // tau_1 < tau_2 < ...
    std::vector<double> ladder_log_heights;  // log(p^{-1} p_tau |S'_tau u|)
    std::vector<double> ladder_p;            // p_tau
    bool sign_preserved = true;              // p_tau / p > 0 at every epoch
    double eps_moment = NAN;                 // mean |p_n|^eps after burn-in
    double eps_moment_cv = NAN;              // across 10 batches
    double mean_ladder_gap = NAN;
    double gamma_hat = NAN;                  // L_mu(alpha) * mean ladder gap
    double log_height_rate = NAN;            // (1/n) log ladder height at the last epoch
    int zero_events = 0;

    std::optional<int> first_ladder() const {
        if (ladder_epochs.empty())
            return std::nullopt;
        return ladder_epochs.front();
    }
};

/// Dual chain (u_n, p_n): atoms drawn from *q^alpha(u_n, .) (the tilt of the
/// transposed ensemble), u_{n+1} = g*.u_n, p_{n+1} = (p_n + <b, u_n>)/|g* u_n|.
/// Ladder epochs are the strict record times of r_n = p^{-1} p_n |S'_n u|, r_0 = 1,
/// which equals 1 + p^{-1} <R_n, u>.
inline DualWalkRecord dual_walk_simulate(const AffineEnsemble& ae, const SpectralPoint& sp_star_alpha, double L_alpha,
                                         const Vec& u0, double p0, int n_steps, std::uint64_t seed,
                                         std::uint64_t index = 0, double eps = 0.1) {
    if (p0 == 0.0)
        throw InvalidInput("p0 must be nonzero");
    const LinearEnsemble star = transpose(ae.linear_part());
    TiltedSampler sampler(star, &sp_star_alpha);
    Engine rng = make_stream(seed, tag::dual_walk, index);
    DualWalkRecord rec;
    rec.u0 = u0 / u0.norm();
    rec.p0 = p0;
    rec.n_steps = n_steps;
    Vec u = rec.u0;
    double p = p0, log_s = 0.0, record = 0.0; // record = log r at the last epoch
    const int burn = std::max(100, n_steps / 10);
    std::vector<double> moments;
    moments.reserve(static_cast<std::size_t>(std::max(0, n_steps - burn)));
    for (int n = 1; n <= n_steps; ++n) {
        const auto st = sampler.step(u, rng);
        const Vec& b = ae.atoms[static_cast<std::size_t>(st.atom)].translation;
        p = (p + b.dot(u)) / std::exp(st.lognorm);
        if (p == 0.0) {
            p = std::numeric_limits<double>::denorm_min();
            ++rec.zero_events;
        }
        u = st.y;
        log_s += st.lognorm;
        const double ratio = p / p0;
        if (ratio > 0.0) {
            const double log_r = std::log(ratio) + log_s;
            // rounding in log_s drifts by ~1e-16 per step; B = 0 must not produce records
            if (log_r > record + 1e-9) {
                rec.ladder_epochs.push_back(n);
                rec.ladder_log_heights.push_back(log_r);
                rec.ladder_p.push_back(p);
                record = log_r;
            }
        }
        if (n > burn)
            moments.push_back(std::pow(std::abs(p), eps));
    }
    rec.u_final = u;
    rec.p_final = p;
    for (double pt : rec.ladder_p)
        rec.sign_preserved = rec.sign_preserved && std::signbit(pt) == std::signbit(p0);
    if (moments.size() >= 10) {
        const std::size_t bs = moments.size() / 10;
        std::vector<double> bm(10, 0.0);
        for (std::size_t b = 0; b < 10; ++b) {
            for (std::size_t i = b * bs; i < (b + 1) * bs; ++i)
                bm[b] += moments[i];
            bm[b] /= static_cast<double>(bs);
        }
        double m = 0.0, v = 0.0;
        for (double x : bm)
            m += x;
        m /= 10.0;
        for (double x : bm)
            v += (x - m) * (x - m);
        rec.eps_moment = m;
        rec.eps_moment_cv = std::sqrt(v / 9.0) / m;
    }
    if (!rec.ladder_epochs.empty()) {
        const double k = static_cast<double>(rec.ladder_epochs.size());
        rec.mean_ladder_gap = rec.ladder_epochs.back() / k;
        rec.gamma_hat = L_alpha * rec.mean_ladder_gap;
        rec.log_height_rate = rec.ladder_log_heights.back() / k;
    }
    return rec;
}

} // namespace kesten

#endif // KESTEN_RENEWAL_HPP
