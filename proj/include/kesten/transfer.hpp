#ifndef KESTEN_TRANSFER_HPP
#define KESTEN_TRANSFER_HPP

#include "kesten/csv.hpp"
#include "kesten/ensemble.hpp"
#include "kesten/projective.hpp"

#include <cmath>
#include <algorithm>
#include <complex>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kesten {

/// Discretized P^s on a direction grid (P^s on P^{d-1}, P~^s on S^{d-1}):
///   (P^s f)(x_i) = sum_j w_j |g_j x_i|^s f(g_j . x_i),
/// with f(g_j . x_i) read through the grid interpolation stencil. The images
/// g_j . x_i do not depend on s, so stencils and log-norms are computed once.
/// An optional node mask restricts the operator to a sub-grid (cone restriction).
class TransferOperator {
public:
    TransferOperator(const LinearEnsemble& e, GridPtr grid, std::vector<char> mask = {})
        : grid_(std::move(grid)), mask_(std::move(mask)), weights_(e.weights()) {
        if (e.dimension != grid_->dimension())
            throw InvalidInput("ensemble dimension does not match grid dimension");
        const std::size_t n = grid_->size();
        const std::size_t m = e.atoms.size();
        if (mask_.empty())
            mask_.assign(n, 1);
        lognorm_.resize(n * m);
        stencil_.resize(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask_[i])
                continue;
            for (std::size_t j = 0; j < m; ++j) {
                const Action a = act(e.atoms[j].matrix, grid_->node(i));
                lognorm_[i * m + j] = a.lognorm;
                stencil_[i * m + j] = restricted_stencil(a.y);
            }
        }
    }

    const GridPtr& grid() const { return grid_; }
    std::size_t atoms() const { return weights_.size(); }
    const std::vector<char>& mask() const { return mask_; }
    double lognorm(std::size_t node, std::size_t atom) const { return lognorm_[node * atoms() + atom]; }
    const Stencil& image_stencil(std::size_t node, std::size_t atom) const { return stencil_[node * atoms() + atom]; }

    /// w_j |g_j x_i|^s for every (node, atom) pair.
    std::vector<double> factors(double s) const {
        std::vector<double> f(lognorm_.size(), 0.0);
        const std::size_t m = atoms();
        for (std::size_t k = 0; k < f.size(); ++k)
            if (mask_[k / m])
                f[k] = weights_[k % m] * std::exp(s * lognorm_[k]);
        return f;
    }

    void apply(const std::vector<double>& fac, const std::vector<double>& f, std::vector<double>& out) const {
        const std::size_t n = grid_->size(), m = atoms();
        out.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask_[i])
                continue;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const Stencil& st = stencil_[i * m + j];
                double v = 0.0;
                for (int k = 0; k < st.size; ++k)
                    v += st.weight[k] * f[st.index[k]];
                acc += fac[i * m + j] * v;
            }
            out[i] = acc;
        }
    }

    /// Exact transpose of apply(): <P f, sigma> = <f, P* sigma> on the grid.
    void apply_adjoint(const std::vector<double>& fac, const std::vector<double>& sigma,
                       std::vector<double>& out) const {
        const std::size_t n = grid_->size(), m = atoms();
        out.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask_[i] || sigma[i] == 0.0)
                continue;
            for (std::size_t j = 0; j < m; ++j) {
                const Stencil& st = stencil_[i * m + j];
                const double mass = fac[i * m + j] * sigma[i];
                for (int k = 0; k < st.size; ++k)
                    out[st.index[k]] += st.weight[k] * mass;
            }
        }
    }

    GridFunction apply(double s, const GridFunction& f) const {
        GridFunction out{grid_, {}};
        apply(factors(s), f.values, out.values);
        return out;
    }
    GridMeasure apply_adjoint(double s, const GridMeasure& sigma) const {
        GridMeasure out{grid_, {}};
        apply_adjoint(factors(s), sigma.masses, out.masses);
        return out;
    }

private:
    Stencil restricted_stencil(const Vec& y) const {
        Stencil st = grid_->stencil(y);
        Stencil out;
        double total = 0.0;
        for (int k = 0; k < st.size; ++k)
            if (mask_[st.index[k]]) {
                out.index[out.size] = st.index[k];
                out.weight[out.size] = st.weight[k];
                total += st.weight[k];
                ++out.size;
            }
        if (out.size > 0) {
            for (int k = 0; k < out.size; ++k)
                out.weight[k] /= total;
            return out;
        }
        // the image left the sub-grid: snap to the closest active node
        double best = 1e300;
        for (std::size_t i = 0; i < grid_->size(); ++i)
            if (mask_[i]) {
                const double dd = distance(grid_->node(i), y, grid_->mode());
                if (dd < best) {
                    best = dd;
                    out.index[0] = static_cast<int>(i);
                }
            }
        out.size = 1;
        out.weight[0] = 1.0;
        return out;
    }

    GridPtr grid_;
    std::vector<char> mask_;
    std::vector<double> weights_;
    std::vector<double> lognorm_;
    std::vector<Stencil> stencil_;
};

/// (P^s f)(x_node) on f's grid.
inline GridFunction apply_ps(const LinearEnsemble& e, double s, const GridFunction& f) {
    return TransferOperator(e, f.grid).apply(s, f);
}

/// Adjoint push-forward: mass m at x goes to g_j . x with weight w_j |g_j x|^s,
/// spread over the interpolation stencil.
inline GridMeasure apply_ps_adjoint(const LinearEnsemble& e, double s, const GridMeasure& sigma) {
    return TransferOperator(e, sigma.grid).apply_adjoint(s, sigma);
}

enum class SpectralMode { projective, sphere, sphere_cone_restricted };

inline std::string_view to_string(SpectralMode m) {
    switch (m) {
    case SpectralMode::projective: return "projective";
    case SpectralMode::sphere: return "sphere";
    case SpectralMode::sphere_cone_restricted: return "sphere-cone-restricted";
    }
    return "?";
}

/// Solved eigen-problem at exponent s: P^s e = k e, (P^s)* nu = k nu,
/// nu(1) = 1, nu(e) = 1. For the transposed ensemble the same type holds
/// *e^s and *nu^s.
struct SpectralPoint {
    double s = 0.0;
    double k = 1.0;
    GridFunction e;
    GridMeasure nu;
    std::optional<GridMeasure> nu_star; // eigenmeasure of the transposed ensemble
    std::optional<GridFunction> e_star;
    double p = 1.0; // int int |<x, y>|^s dnu(x) d*nu(y); 1 when the dual was not solved
    int iterations = 0;
    double residual_e = 0.0;
    double residual_nu = 0.0;
    bool converged = true;
    SpectralMode mode = SpectralMode::projective;
    std::string warning;
};

struct PowerOptions {
    double tol = 1e-10;
    int max_iter = 200000;
    bool with_dual = true;            // also solve the transposed ensemble and compute p(s)
    const SpectralPoint* warm = nullptr; // starting iterate (same grid)
    std::vector<char> mask;          // cone restriction (sphere grids)
};

namespace detail {
inline double p_of_s(double s, const GridMeasure& nu, const GridMeasure& nu_star) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nu.masses.size(); ++i) {
        if (nu.masses[i] == 0.0)
            continue;
        double row = 0.0;
        for (std::size_t j = 0; j < nu_star.masses.size(); ++j) {
            if (nu_star.masses[j] == 0.0)
                continue;
            const double c = std::abs(nu.grid->node(i).dot(nu_star.grid->node(j)));
            row += nu_star.masses[j] * (s == 0.0 ? 1.0 : std::pow(c, s));
        }
        acc += nu.masses[i] * row;
    }
    return acc;
}
} // namespace detail

/// Alternating power iteration on f (via P^s) and sigma (via (P^s)*) until
/// both residuals fall below tol. k is the Rayleigh quotient <P e, nu>/<e, nu>.
/// For d = 1 on the projective grid k(s) = sum_i w_i |a_i|^s in closed form.
inline SpectralPoint power_iterate(const TransferOperator& op, const LinearEnsemble& e, double s,
                                   const PowerOptions& opt = {}) {
    const GridPtr& grid = op.grid();
    SpectralPoint sp;
    sp.s = s;
    sp.mode = grid->mode() == GridMode::projective ? SpectralMode::projective
              : op.mask().end() != std::find(op.mask().begin(), op.mask().end(), 0)
                  ? SpectralMode::sphere_cone_restricted
                  : SpectralMode::sphere;
    const std::size_t n = grid->size();

    if (e.dimension == 1 && grid->mode() == GridMode::projective) {
        double k = 0.0;
        for (const auto& a : e.atoms)
            k += a.weight * std::pow(std::abs(a.matrix(0, 0)), s);
        sp.k = k;
        sp.e = GridFunction::constant(grid, 1.0);
        sp.nu = GridMeasure{grid, {1.0}};
        if (opt.with_dual) {
            sp.nu_star = sp.nu;
            sp.e_star = sp.e;
        }
        sp.p = 1.0;
        return sp;
    }

    const auto& mask = op.mask();
    const auto fac = op.factors(s);
    std::vector<double> f(n), sigma(n), pf, ps;
    const bool warm = opt.warm && opt.warm->e.grid == grid;
    double active = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = mask[i] ? (warm ? opt.warm->e.values[i] : 1.0) : 0.0;
        sigma[i] = mask[i] ? (warm ? opt.warm->nu.masses[i] : grid->weight(i)) : 0.0;
        active += sigma[i];
    }
    if (active <= 0.0)
        throw InvalidInput("power iteration on an empty sub-grid");

    double k = 0.0, res_e = 1e300, res_nu = 1e300;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        op.apply(fac, f, pf);
        op.apply_adjoint(fac, sigma, ps);
        double num = 0.0, den = 0.0, fmax = 0.0, smass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += pf[i] * sigma[i];
            den += f[i] * sigma[i];
            fmax = std::max(fmax, f[i]);
            smass += sigma[i];
        }
        k = num / den;
        res_e = 0.0;
        res_nu = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            res_e = std::max(res_e, std::abs(pf[i] - k * f[i]));
            res_nu += std::abs(ps[i] - k * sigma[i]);
        }
        res_e /= k * fmax;
        res_nu /= k * smass;
        if (res_e < opt.tol && res_nu < opt.tol)
            break;
        const double pmax = *std::max_element(pf.begin(), pf.end());
        double ptot = 0.0;
        for (double v : ps)
            ptot += v;
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = pf[i] / pmax;
            sigma[i] = ps[i] / ptot;
        }
    }
    sp.converged = res_e < opt.tol && res_nu < opt.tol;
    if (!sp.converged)
        sp.warning = "power iteration did not converge in " + std::to_string(opt.max_iter) + " iterations";
    sp.iterations = it;
    sp.k = k;
    sp.residual_e = res_e;
    sp.residual_nu = res_nu;
    double total = 0.0;
    for (double v : sigma)
        total += v;
    for (auto& v : sigma)
        v /= total;
    double nue = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        nue += sigma[i] * f[i];
    for (auto& v : f)
        v /= nue;
    sp.e = GridFunction{grid, std::move(f)};
    sp.nu = GridMeasure{grid, std::move(sigma)};

    if (opt.with_dual) {
        PowerOptions dual = opt;
        dual.with_dual = false;
        dual.warm = nullptr;
        const LinearEnsemble star = transpose(e);
        const TransferOperator op_star(star, grid, opt.mask);
        const SpectralPoint sps = power_iterate(op_star, star, s, dual);
        sp.nu_star = sps.nu;
        sp.e_star = sps.e;
        sp.p = detail::p_of_s(s, sp.nu, sps.nu);
        if (!sps.converged) {
            sp.converged = false;
            sp.warning += (sp.warning.empty() ? "" : "; ") + std::string("dual iteration did not converge");
        }
    }
    return sp;
}

inline SpectralPoint power_iterate(const LinearEnsemble& e, double s, const GridPtr& grid, const PowerOptions& opt = {}) {
    return power_iterate(TransferOperator(e, grid, opt.mask), e, s, opt);
}

/// max_x |p(s) e^s(x) - int |<x, y>|^s d*nu^s(y)| / max e^s, an independent
/// structural check of the eigen-solve. `sp_star` is the transposed solve.
inline double cross_check_es(const SpectralPoint& sp, const SpectralPoint& sp_star) {
    const auto& grid = sp.e.grid;
    const auto& star = sp_star.nu;
    double worst = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        double integral = 0.0;
        for (std::size_t j = 0; j < star.masses.size(); ++j) {
            const double c = std::abs(grid->node(i).dot(star.grid->node(j)));
            integral += star.masses[j] * (sp.s == 0.0 ? 1.0 : std::pow(c, sp.s));
        }
        worst = std::max(worst, std::abs(sp.p * sp.e.values[i] - integral));
    }
    return worst / sp.e.max();
}

/// One-step law of the tilted chain at x:
///   q^s(x, g_i) = w_i |g_i x|^s e^s(g_i . x) / (normalizer * e^s(x)),
/// where the normalizer equals k(s) up to discretization error.
struct QsKernel {
    std::vector<double> probabilities;
    std::vector<Vec> images;
    std::vector<double> lognorms;
    double normalizer = 1.0;
};

inline QsKernel qs_kernel(const LinearEnsemble& e, const SpectralPoint& sp, const Vec& x) {
    QsKernel q;
    const double ex = interpolate(sp.e, x);
    double total = 0.0;
    for (const auto& a : e.atoms) {
        const Action act_x = act(a.matrix, x);
        const double raw = a.weight * std::exp(sp.s * act_x.lognorm) * interpolate(sp.e, act_x.y);
        q.probabilities.push_back(raw);
        q.images.push_back(act_x.y);
        q.lognorms.push_back(act_x.lognorm);
        total += raw;
    }
    for (auto& p : q.probabilities)
        p /= total;
    q.normalizer = total / ex;
    return q;
}

/// Cone-restricted solves on the sphere in case II.
struct ExtremalMeasures {
    GridMeasure pi_plus, pi_minus;
    GridMeasure nu_plus, nu_minus;
    GridMeasure nu_star_plus;
    GridFunction e_plus, e_minus;
    std::vector<char> mask_plus;
    double p = 1.0;
    double k = 1.0;
};

namespace detail {
/// Sphere nodes inside the spherical cap around the attractor sample, widened by `margin` radians.
inline std::vector<char> cap_mask(const DirectionGrid& grid, const std::vector<Vec>& attractor, double margin) {
    if (attractor.empty())
        throw InvalidInput("invariant cone not identified");
    Vec c = Vec::Zero(grid.dimension());
    for (const auto& a : attractor)
        c += a;
    c /= c.norm();
    double radius = 0.0;
    for (const auto& a : attractor)
        radius = std::max(radius, std::acos(std::clamp(a.dot(c), -1.0, 1.0)));
    std::vector<char> mask(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        mask[i] = std::acos(std::clamp(grid.node(i).dot(c), -1.0, 1.0)) <= radius + margin;
    return mask;
}

inline std::vector<double> reflect(const DirectionGrid& grid, const std::vector<double>& v) {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const int a = grid.antipode(i);
        if (a < 0)
            throw InvalidInput("grid has no antipode map (use an even resolution)");
        out[static_cast<std::size_t>(a)] = v[i];
    }
    return out;
}
} // namespace detail

/// Case II: solves P~^s restricted to a cap around the positive attractor
/// Lambda_+ (and the transposed problem around Lambda_+(T*)), reflects to get
/// the minus objects, and builds e_+^s from *nu_+^s via <u, u'>_+^s.
inline ExtremalMeasures sphere_extremal_measures(const LinearEnsemble& e, double s, const GridPtr& sphere,
                                                 const ConeResult& cone, const ConeResult& cone_star,
                                                 const PowerOptions& base = {}) {
    if (sphere->mode() != GridMode::sphere)
        throw InvalidInput("sphere_extremal_measures needs a sphere grid");
    if (cone.cone_case != ConeCase::II || cone_star.cone_case != ConeCase::II)
        throw InvalidInput("invariant cone not identified (cone case is not II)");
    const double margin = sphere->dimension() == 2 ? 2.0 * 2.0 * std::numbers::pi / sphere->size()
                                                   : 4.0 / std::sqrt(static_cast<double>(sphere->size()));
    ExtremalMeasures out;
    out.mask_plus = detail::cap_mask(*sphere, cone.positive_attractor, margin);

    std::vector<Vec> star_attr = cone_star.positive_attractor;
    Vec c = Vec::Zero(e.dimension), cs = Vec::Zero(e.dimension);
    for (const auto& a : cone.positive_attractor)
        c += a;
    for (const auto& a : star_attr)
        cs += a;
    if (c.dot(cs) < 0.0)
        for (auto& a : star_attr)
            a = -a;
    const auto mask_star = detail::cap_mask(*sphere, star_attr, margin);

    PowerOptions opt = base;
    opt.with_dual = false;
    opt.mask = out.mask_plus;
    const SpectralPoint plus = power_iterate(e, s, sphere, opt);
    opt.mask = mask_star;
    const LinearEnsemble star = transpose(e);
    const SpectralPoint plus_star = power_iterate(star, s, sphere, opt);
    out.k = plus.k;

    out.nu_plus = plus.nu;
    out.nu_minus = GridMeasure{sphere, detail::reflect(*sphere, plus.nu.masses)};
    out.nu_star_plus = plus_star.nu;
    out.p = detail::p_of_s(s, plus.nu, plus_star.nu);

    const std::size_t n = sphere->size();
    std::vector<double> ep(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double m = plus_star.nu.masses[j];
            if (m == 0.0)
                continue;
            const double c2 = sphere->node(i).dot(sphere->node(j));
            if (c2 > 0.0)
                acc += m * (s == 0.0 ? 1.0 : std::pow(c2, s));
        }
        ep[i] = acc / out.p;
    }
    out.e_plus = GridFunction{sphere, ep};
    out.e_minus = GridFunction{sphere, detail::reflect(*sphere, ep)};

    std::vector<double> pi(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pi[i] = (out.e_plus.values[i] + out.e_minus.values[i]) * out.nu_plus.masses[i];
        total += pi[i];
    }
    for (auto& v : pi)
        v /= total;
    out.pi_plus = GridMeasure{sphere, pi};
    out.pi_minus = GridMeasure{sphere, detail::reflect(*sphere, pi)};
    return out;
}

/// Diagnostic for z = s + it: growth rate of power iteration with the complex
/// kernel |g x|^{s+it}, relative to k(s). Values < 1 indicate r(P^z) < k(s).
inline double complex_spectral_ratio(const TransferOperator& op, double s, double t, double k_s, int iterations = 400) {
    using C = std::complex<double>;
    const std::size_t n = op.grid()->size(), m = op.atoms();
    const auto fac = op.factors(s);
    std::vector<C> f(n, C(1.0, 0.0)), g(n);
    double log_growth = 0.0;
    const int tail = iterations / 2;
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            C acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const Stencil& st = op.image_stencil(i, j);
                C v = 0.0;
                for (int q = 0; q < st.size; ++q)
                    v += st.weight[q] * f[st.index[q]];
                acc += fac[i * m + j] * std::polar(1.0, t * op.lognorm(i, j)) * v;
            }
            g[i] = acc;
        }
        double norm = 0.0;
        for (const auto& v : g)
            norm = std::max(norm, std::abs(v));
        if (norm == 0.0)
            return 0.0;
        if (it >= iterations - tail)
            log_growth += std::log(norm);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = g[i] / norm;
    }
    return std::exp(log_growth / tail) / k_s;
}

/// Node table (node_index, e_value, nu_mass) and scalar block.
inline void write_spectral_point(const SpectralPoint& sp, std::ostream& nodes, std::ostream& scalars) {
    CsvWriter w(nodes);
    w.header({"node_index", "e_value", "nu_mass"});
    for (std::size_t i = 0; i < sp.e.values.size(); ++i) {
        w.cell(i).cell(sp.e.values[i]).cell(sp.nu.masses[i]);
        w.end_row();
    }
    CsvWriter sw(scalars);
    sw.header({"key", "value"});
    auto row = [&](const char* k, double v) {
        sw.cell(k).cell(v);
        sw.end_row();
    };
    row("s", sp.s);
    row("k", sp.k);
    row("p", sp.p);
    row("residual_e", sp.residual_e);
    row("residual_nu", sp.residual_nu);
    row("iterations", sp.iterations);
    row("converged", sp.converged ? 1.0 : 0.0);
}

} // namespace kesten

#endif // KESTEN_TRANSFER_HPP
