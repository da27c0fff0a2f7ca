#ifndef KESTEN_PROJECTIVE_HPP
#define KESTEN_PROJECTIVE_HPP

#include "kesten/csv.hpp"
#include "kesten/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <vector>

namespace kesten {

enum class GridMode { sphere, projective };

inline std::string_view to_string(GridMode m) { return m == GridMode::sphere ? "sphere" : "projective"; }

/// Interpolation weights over at most three grid nodes.
struct Stencil {
    std::array<int, 3> index{};
    std::array<double, 3> weight{};
    int size = 0;
};

/// sphere: chord |x - y|; projective: min(|x - y|, |x + y|).
inline double distance(const Vec& x, const Vec& y, GridMode mode) {
    const double a = (x - y).norm();
    return mode == GridMode::sphere ? a : std::min(a, (x + y).norm());
}

class DirectionGrid;
using GridPtr = std::shared_ptr<const DirectionGrid>;

/// Discretization of S^{d-1} or P^{d-1} (d <= 3) with equal quadrature weights.
/// d = 2: uniform angles (2 pi k / N on the sphere, pi k / N projectively).
/// d = 3: Fibonacci lattice on the upper hemisphere; the sphere grid adds the
/// antipodes, so the projective grid is its antipodal quotient.
class DirectionGrid {
public:
    static constexpr int kNeighbors = 6;

    static GridPtr build(int d, int resolution, GridMode mode) {
        if (d < 1 || d > 3)
            throw InvalidInput("grids support d in {1, 2, 3}, got d = " + std::to_string(d));
        if (resolution < 1)
            throw InvalidInput("grid resolution must be positive");
        auto g = std::shared_ptr<DirectionGrid>(new DirectionGrid(d, mode));
        if (d == 1) {
            g->push(1.0);
            if (mode == GridMode::sphere)
                g->push(-1.0);
        } else if (d == 2) {
            const double span = mode == GridMode::sphere ? 2.0 * std::numbers::pi : std::numbers::pi;
            g->step_ = span / resolution;
            for (int k = 0; k < resolution; ++k) {
                Vec x(2);
                x << std::cos(k * g->step_), std::sin(k * g->step_);
                g->nodes_.push_back(x);
            }
        } else {
            const int half = mode == GridMode::sphere ? std::max(1, resolution / 2) : resolution;
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (int i = 0; i < half; ++i) {
                const double z = 1.0 - (i + 0.5) / half;
                const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                Vec x(3);
                x << r * std::cos(i * golden), r * std::sin(i * golden), z;
                g->nodes_.push_back(x);
            }
            if (mode == GridMode::sphere)
                for (int i = 0; i < half; ++i)
                    g->nodes_.push_back(-g->nodes_[i]);
        }
        g->finish();
        return g;
    }

    int dimension() const { return dim_; }
    GridMode mode() const { return mode_; }
    std::size_t size() const { return nodes_.size(); }
    const Vec& node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<int>& neighbors(std::size_t i) const { return neighbors_[i]; }

    /// Index of the node antipodal to node i (sphere mode), else -1.
    int antipode(std::size_t i) const { return antipode_[i]; }

    int nearest(const Vec& x) const {
        if (dim_ == 1)
            return (mode_ == GridMode::sphere && x(0) < 0.0) ? 1 : 0;
        if (dim_ == 2) {
            const Stencil s = stencil(x);
            return s.size == 1 || s.weight[0] >= s.weight[1] ? s.index[0] : s.index[1];
        }
        int best = 0;
        double bd = 1e300;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double dd = distance(nodes_[i], x, mode_);
            if (dd < bd) {
                bd = dd;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    /// Interpolation stencil at unit vector x: angular-linear for d = 2,
    /// inverse-distance over the 3 nearest nodes for d = 3. Exact at nodes.
    Stencil stencil(const Vec& x) const {
        Stencil s;
        if (dim_ == 1) {
            s.size = 1;
            s.index[0] = nearest(x);
            s.weight[0] = 1.0;
            return s;
        }
        if (dim_ == 2) {
            const double span = step_ * static_cast<double>(nodes_.size());
            double th = std::atan2(x(1), x(0));
            th = std::fmod(th, span);
            if (th < 0.0)
                th += span;
            const double pos = th / step_;
            double base = std::floor(pos);
            double frac = pos - base;
            const int n = static_cast<int>(nodes_.size());
            int i0 = static_cast<int>(base) % n;
            if (frac < 1e-12) {
                s.size = 1;
                s.index[0] = i0;
                s.weight[0] = 1.0;
                return s;
            }
            if (frac > 1.0 - 1e-12) {
                s.size = 1;
                s.index[0] = (i0 + 1) % n;
                s.weight[0] = 1.0;
                return s;
            }
            s.size = 2;
            s.index = {i0, (i0 + 1) % n, 0};
            s.weight = {1.0 - frac, frac, 0.0};
            return s;
        }
        std::array<std::pair<double, int>, 3> best;
        best.fill({1e300, 0});
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double dd = distance(nodes_[i], x, mode_);
            if (dd < best[2].first) {
                best[2] = {dd, static_cast<int>(i)};
                std::sort(best.begin(), best.end());
            }
        }
        if (best[0].first < 1e-12) {
            s.size = 1;
            s.index[0] = best[0].second;
            s.weight[0] = 1.0;
            return s;
        }
        double total = 0.0;
        s.size = 3;
        for (int k = 0; k < 3; ++k) {
            s.index[k] = best[k].second;
            s.weight[k] = 1.0 / best[k].first;
            total += s.weight[k];
        }
        for (auto& w : s.weight)
            w /= total;
        return s;
    }

    /// CSV: node_index, x0..x{d-1}, quadrature_weight.
    void write_csv(std::ostream& os) const {
        CsvWriter w(os);
        std::vector<std::string> cols{"node_index"};
        for (int k = 0; k < dim_; ++k)
            cols.push_back("x" + std::to_string(k));
        cols.push_back("quadrature_weight");
        w.header(cols);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            w.cell(i);
            for (int k = 0; k < dim_; ++k)
                w.cell(nodes_[i](k));
            w.cell(weights_[i]);
            w.end_row();
        }
    }

private:
    DirectionGrid(int d, GridMode mode) : dim_(d), mode_(mode) {}

    void push(double v) {
        Vec x(1);
        x(0) = v;
        nodes_.push_back(x);
    }

    void finish() {
        const std::size_t n = nodes_.size();
        weights_.assign(n, 1.0 / static_cast<double>(n));
        antipode_.assign(n, -1);
        if (mode_ == GridMode::sphere) {
            if (dim_ == 2 && n % 2 == 0)
                for (std::size_t i = 0; i < n; ++i)
                    antipode_[i] = static_cast<int>((i + n / 2) % n);
            else if (dim_ != 2)
                for (std::size_t i = 0; i < n; ++i)
                    antipode_[i] = static_cast<int>(dim_ == 1 ? 1 - i : (i + n / 2) % n);
        }
        neighbors_.resize(n);
        const std::size_t k = std::min<std::size_t>(kNeighbors, n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (dim_ == 2) {
                for (std::size_t j = 1; j <= k; ++j)
                    neighbors_[i].push_back(static_cast<int>((i + (j % 2 ? (j + 1) / 2 : n - j / 2)) % n));
                continue;
            }
            std::vector<std::pair<double, int>> dist;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i)
                    dist.emplace_back(distance(nodes_[i], nodes_[j], mode_), static_cast<int>(j));
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            for (std::size_t j = 0; j < k; ++j)
                neighbors_[i].push_back(dist[j].second);
        }
    }

    int dim_;
    GridMode mode_;
    double step_ = 0.0;
    std::vector<Vec> nodes_;
    std::vector<double> weights_;
    std::vector<int> antipode_;
    std::vector<std::vector<int>> neighbors_;
};

/// Real function sampled at grid nodes.
struct GridFunction {
    GridPtr grid;
    std::vector<double> values;

    static GridFunction constant(GridPtr g, double c) {
        const auto n = g->size();
        return {std::move(g), std::vector<double>(n, c)};
    }
    double max() const { return *std::max_element(values.begin(), values.end()); }
    double min() const { return *std::min_element(values.begin(), values.end()); }
};

/// Nonnegative masses at grid nodes.
struct GridMeasure {
    GridPtr grid;
    std::vector<double> masses;

    static GridMeasure quadrature(GridPtr g) {
        std::vector<double> m(g->size());
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = g->weight(i);
        return {std::move(g), std::move(m)};
    }
    double total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
    /// Integral of f against this measure.
    double integrate(const GridFunction& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i)
            acc += masses[i] * f.values[i];
        return acc;
    }
};

inline double interpolate(const GridFunction& f, const Vec& x) {
    const Stencil s = f.grid->stencil(x);
    double acc = 0.0;
    for (int k = 0; k < s.size; ++k)
        acc += s.weight[k] * f.values[s.index[k]];
    return acc;
}

struct Action {
    Vec y;          // g.x = g x / |g x|
    double lognorm; // log |g x|
};

inline Action act(const Mat& g, const Vec& x) {
    Vec gx = g * x;
    const double n = gx.norm();
    if (!(n >= 1e-300))
        throw NonConvergence("|g x| underflow in act()");
    return {gx / n, std::log(n)};
}

/// log|g(x ^ y)| - 2 log|g x| for the flag xi = (x, x ^ y), with x ^ y
/// normalized to unit length.
inline double contact_cocycle(const Mat& g, const Vec& x, const Vec& y) {
    auto wedge_norm = [](const Vec& a, const Vec& b) {
        return std::sqrt(std::max(0.0, a.squaredNorm() * b.squaredNorm() - a.dot(b) * a.dot(b)));
    };
    const double w = wedge_norm(x, y);
    if (w < 1e-12)
        throw InvalidInput("degenerate flag: |x ^ y| < 1e-12");
    const Vec gx = g * x;
    const Vec gy = g * y;
    return std::log(wedge_norm(gx, gy) / w) - 2.0 * std::log(gx.norm() / x.norm());
}

} // namespace kesten

#endif // KESTEN_PROJECTIVE_HPP
