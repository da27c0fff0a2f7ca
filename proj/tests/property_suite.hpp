#pragma once

// Invariant checks shared by the Catch2 property tests and the acceptance binary.

#include "kesten/kesten.hpp"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace kprop {

using namespace kesten;

struct Check {
    std::string ensemble;
    std::string name;
    bool ok = false;
    std::string detail;
};

inline std::vector<std::string> shipped_ensembles(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& f : std::filesystem::directory_iterator(dir))
        if (f.path().extension() == ".json")
            out.push_back(f.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

inline GridPtr grid_for(int d, int resolution) {
    return DirectionGrid::build(d, d == 1 ? 1 : resolution, GridMode::projective);
}

inline std::string num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

/// k(0) = 1, log-convexity on a grid, k(mu) = k(mu*), eigen residuals, nu(e) = 1
/// and additivity of log|g x| along random words.
inline std::vector<Check> spectral_checks(const std::string& name, const LinearEnsemble& e, int resolution = 256,
                                          double tol = 1e-10) {
    std::vector<Check> out;
    auto add = [&](std::string what, bool ok, std::string detail) {
        out.push_back({name, std::move(what), ok, std::move(detail)});
    };
    const auto g = grid_for(e.dimension, resolution);
    const auto star = transpose(e);
    const std::vector<double> s_grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    std::vector<double> logk;
    double worst_res = 0.0, worst_norm = 0.0, worst_star = 0.0;
    bool converged = true;
    const SpectralPoint* warm = nullptr;
    std::optional<SpectralPoint> prev;
    for (double s : s_grid) {
        PowerOptions opt{.tol = tol};
        opt.warm = warm;
        prev = power_iterate(e, s, g, opt);
        warm = &*prev;
        converged = converged && prev->converged;
        worst_res = std::max({worst_res, prev->residual_e / tol, prev->residual_nu / tol});
        worst_norm = std::max({worst_norm, std::abs(prev->nu.integrate(prev->e) - 1.0), std::abs(prev->nu.total() - 1.0)});
        logk.push_back(std::log(prev->k));
        if (s == 0.0)
            add("k(0) = 1", std::abs(prev->k - 1.0) <= 10.0 * tol, "k(0) = " + num(prev->k));
        if (s == 0.5 || s == 1.0 || s == 2.0) {
            const auto sp_star = power_iterate(star, s, g, {.tol = tol, .with_dual = false});
            worst_star = std::max(worst_star, std::abs(sp_star.k - prev->k) / prev->k);
        }
    }
    double worst_convex = INFINITY;
    for (std::size_t i = 1; i + 1 < logk.size(); ++i)
        worst_convex = std::min(worst_convex, logk[i - 1] + logk[i + 1] - 2.0 * logk[i]);
    add("log k convex", worst_convex >= -1e-8, "min second difference " + num(worst_convex));
    add("k(mu) = k(mu*)", worst_star <= 1e-3, "max relative gap " + num(worst_star));
    add("eigen residual <= tol", converged && worst_res <= 1.0, "max residual/tol " + num(worst_res));
    add("nu(e) = 1", worst_norm <= 1e-9, "max deviation " + num(worst_norm));

    Engine rng = make_stream(11, 0xc0c, 0);
    const auto cum = e.cumulative();
    double worst_cocycle = 0.0;
    for (int w = 0; w < 32; ++w) {
        Vec x = random_direction(e.dimension, rng);
        const Vec x0 = x;
        Mat p = Mat::Identity(e.dimension, e.dimension);
        double sum = 0.0;
        for (int k = 0; k < 40; ++k) {
            const Mat& a = e.atoms[static_cast<std::size_t>(draw_index(cum, rng))].matrix;
            const auto ac = act(a, x);
            sum += ac.lognorm;
            x = ac.y;
            p = a * p;
        }
        const double direct = std::log((p * x0).norm());
        worst_cocycle = std::max(worst_cocycle, std::abs(direct - sum) / std::max(1.0, std::abs(direct)));
    }
    add("cocycle additivity", worst_cocycle <= 1e-10, "max relative error " + num(worst_cocycle));
    return out;
}

inline double alpha_of(const LinearEnsemble& e, int resolution = 256) {
    KFunction kf(e, grid_for(e.dimension, resolution));
    return solve_alpha(kf, 0.05, 2.0, 1e-10).alpha;
}

/// Case-I tail symmetry, ladder sign preservation and seed determinism for an
/// affine ensemble.
inline std::vector<Check> affine_checks(const std::string& name, const AffineEnsemble& ae, std::size_t n_samples = 400000,
                                        int resolution = 256) {
    std::vector<Check> out;
    auto add = [&](std::string what, bool ok, std::string detail) {
        out.push_back({name, std::move(what), ok, std::move(detail)});
    };
    const auto lin = ae.linear_part();
    const int d = ae.dimension;
    const double alpha = alpha_of(lin, resolution);
    const auto cone = classify_cone_case(lin, 1);

    set_thread_count(1);
    const auto bank = sample_stationary(ae, 3000, n_samples, 21);
    set_thread_count(3);
    const auto again = sample_stationary(ae, 3000, n_samples, 21);
    set_thread_count(0);
    std::ostringstream b1, b2;
    write_bank_binary(bank, b1);
    write_bank_binary(again, b2);
    add("seed determinism", b1.str() == b2.str(), "bank bytes across 1 and 3 threads");

    if (cone.cone_case == ConeCase::I) {
        Vec u = Vec::Zero(d);
        u(0) = 1.0;
        const auto plus = empirical_tail(projection_statistic(bank, u), alpha, {}, 200, 1);
        const auto minus = empirical_tail(projection_statistic(bank, -u), alpha, {}, 200, 2);
        const double width = (plus.ci_hi - plus.ci_lo) + (minus.ci_hi - minus.ci_lo);
        add("case-I tail symmetry", std::abs(plus.plateau - minus.plateau) <= width,
            "C(u) = " + num(plus.plateau) + ", C(-u) = " + num(minus.plateau) + ", combined CI width " + num(width));
    }

    const auto sp_star = power_iterate(transpose(lin), alpha, grid_for(d, resolution));
    bool signs = true;
    std::size_t epochs = 0;
    Engine rng = make_stream(5, 0x5e, 0);
    for (std::uint64_t i = 0; i < 64; ++i) {
        const Vec u0 = random_direction(d, rng);
        const double p0 = (i % 2 == 0 ? 1.0 : -1.0) * (0.1 + uniform01(rng));
        const auto rec = dual_walk_simulate(ae, sp_star, 1.0, u0, p0, 1000, 31, i);
        for (double pt : rec.ladder_p)
            signs = signs && pt * p0 > 0.0;
        signs = signs && rec.sign_preserved;
        epochs += rec.ladder_epochs.size();
    }
    add("ladder sign preservation", signs, std::to_string(epochs) + " epochs over 64 walks");

    const auto r1 = dual_walk_simulate(ae, sp_star, 1.0, Vec::Ones(d) / std::sqrt(d), 1.0, 500, 4, 2);
    const auto r2 = dual_walk_simulate(ae, sp_star, 1.0, Vec::Ones(d) / std::sqrt(d), 1.0, 500, 4, 2);
    add("dual walk determinism", r1.ladder_epochs == r2.ladder_epochs && r1.p_final == r2.p_final, "");
    return out;
}

} // namespace kprop
