// kesten: command-line driver for the spectral, tail, renewal and dual-walk pipelines.

#include "kesten/kesten.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace kesten;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int threads = 0;
    std::optional<int> resolution;
    std::optional<std::size_t> samples, paths;
    std::optional<int> steps;
    std::optional<double> s_min, s_max;
    std::optional<int> s_count;
    std::optional<double> alpha;
    std::optional<double> t;
    int directions = 16;
    std::string method = "both";
    bool no_mc = false;
    bool write_bank = false;
};

/// Everything a command needs, resolved from the config file and the flags.
struct RunConfig {
    Json doc;
    std::string hash;
    int dimension = 1;
    int resolution = 256;
    double s_min = 0.0, s_max = 2.0;
    int s_count = 21;
    double s_infinity = INFINITY;
    std::size_t samples = 1000000, paths = 100000;
    int steps = 3000;
    std::optional<std::uint64_t> seed;
    bool affine = false;
    double tol = 1e-10;
    int max_iter = 200000;

    std::uint64_t require_seed() const {
        if (!seed)
            throw InvalidInput("this command is stochastic: pass --seed or set run.seed in the config");
        return *seed;
    }
    PowerOptions power(bool with_dual = true) const {
        PowerOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.with_dual = with_dual;
        return o;
    }
    GridPtr grid() const {
        return DirectionGrid::build(dimension, dimension == 1 ? 1 : resolution, GridMode::projective);
    }
    std::vector<double> s_grid() const {
        std::vector<double> s(static_cast<std::size_t>(s_count));
        for (int i = 0; i < s_count; ++i)
            s[static_cast<std::size_t>(i)] = s_count == 1 ? s_min : s_min + (s_max - s_min) * i / (s_count - 1);
        return s;
    }
};

template <class T>
T positive(const Json& run, const char* key, T fallback) {
    if (!run.contains(key))
        return fallback;
    if (!run[key].is_number() || !(run[key].get<double>() > 0.0))
        throw InvalidInput(std::string("run.") + key + " must be a positive number");
    return run[key].get<T>();
}

RunConfig resolve(const Flags& f) {
    RunConfig c;
    c.doc = read_json_file(f.config);
    c.hash = content_hash(c.doc);
    c.dimension = linear_from_json(c.doc).dimension;
    c.affine = has_translations(c.doc);
    const Json run = c.doc.value("run", Json::object());
    if (!run.is_object())
        throw InvalidInput("'run' must be an object");
    c.resolution = f.resolution.value_or(positive<int>(run, "resolution", c.resolution));
    c.samples = f.samples.value_or(positive<std::size_t>(run, "samples", c.samples));
    c.paths = f.paths.value_or(positive<std::size_t>(run, "paths", c.paths));
    c.steps = f.steps.value_or(positive<int>(run, "steps", c.steps));
    c.s_infinity = positive<double>(run, "s_infinity", c.s_infinity);
    c.tol = positive<double>(run, "tol", c.tol);
    c.max_iter = positive<int>(run, "max_iter", c.max_iter);
    if (run.contains("seed")) {
        if (!run["seed"].is_number_unsigned())
            throw InvalidInput("run.seed must be a non-negative integer");
        c.seed = run["seed"].get<std::uint64_t>();
    }
    if (f.seed)
        c.seed = f.seed;
    if (run.contains("s_grid")) {
        const auto& g = run["s_grid"];
        if (!g.is_object())
            throw InvalidInput("run.s_grid must be an object {min, max, count}");
        if (g.contains("min"))
            c.s_min = detail::number_at(g["min"], "run.s_grid.min");
        if (g.contains("max"))
            c.s_max = detail::number_at(g["max"], "run.s_grid.max");
        if (g.contains("count")) {
            if (!g["count"].is_number_integer())
                throw InvalidInput("run.s_grid.count must be an integer");
            c.s_count = g["count"].get<int>();
        }
    }
    c.s_min = f.s_min.value_or(c.s_min);
    c.s_max = f.s_max.value_or(c.s_max);
    c.s_count = f.s_count.value_or(c.s_count);
    if (c.s_count < 1)
        throw InvalidInput("s grid needs at least one point");
    if (c.s_min < 0.0 || c.s_max < c.s_min || (c.s_count > 1 && c.s_max == c.s_min))
        throw InvalidInput("s grid must satisfy 0 <= min < max");
    if (c.s_max >= c.s_infinity)
        throw InvalidInput("s grid reaches " + format_double(c.s_max) + ", beyond s_infinity = " +
                           format_double(c.s_infinity));
    if (c.resolution < 8)
        throw InvalidInput("resolution must be at least 8");
    return c;
}

class Manifest {
public:
    Manifest(std::string command, fs::path out) : out_(std::move(out)) {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = KESTEN_VERSION;
        doc_["outputs"] = Json::array();
        doc_["warnings"] = Json::array();
        doc_["timings_s"] = Json::object();
    }
    Json& doc() { return doc_; }

    std::ofstream open(const std::string& file, const std::string& description) {
        doc_["outputs"].push_back({{"file", file}, {"description", description}});
        std::ofstream os(out_ / file, std::ios::binary);
        if (!os)
            throw InvalidInput("cannot write '" + (out_ / file).string() + "'");
        return os;
    }
    void write_json(const std::string& file, const std::string& description, const Json& j) {
        auto os = open(file, description);
        os << j.dump(2) << '\n';
    }
    void warn(const std::string& w) {
        doc_["warnings"].push_back(w);
        std::cerr << "warning: " << w << '\n';
    }
    template <class F>
    auto timed(const std::string& phase, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Stamp {
            Manifest* m;
            std::string phase;
            std::chrono::steady_clock::time_point t0;
            ~Stamp() {
                m->doc_["timings_s"][phase] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        } stamp{this, phase, t0};
        return f();
    }
    void finish(int exit_code, const std::string& error) {
        doc_["exit_code"] = exit_code;
        doc_["status"] = exit_code == 0 ? "ok" : "error";
        if (!error.empty())
            doc_["error"] = error;
        std::ofstream os(out_ / "manifest.json", std::ios::binary);
        os << doc_.dump(2) << '\n';
    }

private:
    fs::path out_;
    Json doc_;
};

Json vec_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

/// Probe directions: d = 1 gives {+1, -1}; d = 2 spreads n over the circle;
/// d > 2 draws n uniform directions from the seed.
std::vector<Vec> probe_directions(int d, int n, std::uint64_t seed, bool half_circle) {
    std::vector<Vec> out;
    if (d == 1) {
        out.push_back(Vec::Constant(1, 1.0));
        if (!half_circle)
            out.push_back(Vec::Constant(1, -1.0));
        return out;
    }
    if (d == 2) {
        const double span = half_circle ? M_PI : 2.0 * M_PI;
        for (int i = 0; i < n; ++i) {
            Vec u(2);
            const double th = span * (i + 0.5) / n;
            u << std::cos(th), std::sin(th);
            out.push_back(u);
        }
        return out;
    }
    Engine rng = make_stream(seed, 0x70726f62, 0);
    for (int i = 0; i < n; ++i)
        out.push_back(random_direction(d, rng));
    return out;
}

double solve_alpha_for(const LinearEnsemble& e, const RunConfig& c, const Flags& f) {
    if (f.alpha) {
        if (!(*f.alpha > 0.0) || *f.alpha >= c.s_infinity)
            throw InvalidInput("--alpha must lie in (0, s_infinity)");
        return *f.alpha;
    }
    KFunction kf(e, c.grid(), c.power(false));
    return solve_alpha(kf, 0.05, std::min(2.0, 0.5 * c.s_infinity), 1e-10, 64).alpha;
}

double lyapunov_at(const LinearEnsemble& e, const RunConfig& c, double s) {
    KFunction kf(e, c.grid(), c.power(false));
    return lyapunov_finite_diff(kf, s);
}

void cmd_validate(const RunConfig& c, Manifest& m) {
    const auto lin = linear_from_json(c.doc);
    ValidationReport rep = m.timed("validate", [&] { return validate_full(lin, c.seed.value_or(1)); });
    if (c.affine) {
        const auto aff = validate_affine(affine_from_json(c.doc));
        rep.evidence.insert(rep.evidence.end(), aff.evidence.begin(), aff.evidence.end());
    }
    Json j;
    j["irreducibility"] = to_string(rep.irreducibility);
    j["proximality"] = to_string(rep.proximality);
    if (c.dimension == 1)
        j["nonarithmetic"] = to_string(rep.nonarithmetic);
    j["cone_case"] = to_string(rep.cone_case);
    j["atoms"] = Json::array();
    for (const auto& a : rep.atoms)
        j["atoms"].push_back({{"norm", a.norm}, {"inverse_norm", a.inverse_norm}, {"gamma", a.gamma}});
    j["evidence"] = rep.evidence;
    m.write_json("validation.json", "hypothesis checks and per-atom norms", j);
    for (auto [name, v] : {std::pair{"irreducibility", rep.irreducibility}, {"proximality", rep.proximality}})
        if (v != Verdict::pass)
            m.warn(std::string(name) + ": " + std::string(to_string(v)));
    if (c.dimension == 1 && rep.nonarithmetic != Verdict::pass)
        m.warn("nonarithmetic: " + std::string(to_string(rep.nonarithmetic)));
}

void cmd_spectrum(const RunConfig& c, const Flags& f, Manifest& m) {
    const auto e = linear_from_json(c.doc);
    validate_linear(e);
    CurveOptions opt;
    opt.tilted_mc = !f.no_mc;
    opt.gap = !f.no_mc;
    opt.rho = !f.no_mc;
    if (!f.no_mc)
        opt.seed = c.require_seed();
    const auto grid = c.grid();
    const auto curve = m.timed("curve", [&] { return spectral_curve(e, c.s_grid(), grid, opt, c.power(false)); });
    {
        auto os = m.open("curve.csv", "k(s) and Lyapunov exponents on the s grid");
        write_curve_csv(curve, os);
    }
    std::string stalled;
    for (const auto& sp : curve.points)
        if (!sp.converged)
            stalled += (stalled.empty() ? "" : ", ") + format_double(sp.s);
    if (!stalled.empty())
        throw NonConvergence("power iteration did not reach tol at s = " + stalled);
    Json j;
    j["L_mu_0"] = curve.L_mu_0;
    j["resolution"] = c.dimension == 1 ? 1 : c.resolution;
    try {
        const double alpha = m.timed("alpha", [&] { return solve_alpha_for(e, c, f); });
        KFunction kf(e, grid, c.power(false));
        const double L_alpha = lyapunov_finite_diff(kf, alpha);
        j["alpha"] = alpha;
        j["L_mu_alpha"] = L_alpha;
        j["k_prime_alpha"] = L_alpha * kf(alpha);
        const auto sp = power_iterate(e, alpha, grid, c.power());
        std::ofstream nodes = m.open("eigen_alpha.csv", "e^alpha and nu^alpha on the grid");
        std::ostringstream scalars;
        write_spectral_point(sp, nodes, scalars);
        j["p_alpha"] = sp.p;
    } catch (const HypothesisViolation& err) {
        j["alpha"] = nullptr;
        m.warn(std::string("no tail index: ") + err.what());
    }
    m.write_json("spectrum.json", "alpha, L_mu(0), L_mu(alpha), k'(alpha)", j);
}

void cmd_tails(const RunConfig& c, const Flags& f, Manifest& m) {
    if (!c.affine)
        throw InvalidInput("tails needs an affine ensemble (atoms with 'translation')");
    const auto ae = affine_from_json(c.doc);
    validate_affine(ae);
    const std::uint64_t seed = c.require_seed();
    const auto lin = ae.linear_part();
    const double L0 = lyapunov_at(lin, c, 0.0);
    if (!(L0 < 0.0))
        throw HypothesisViolation("L_mu = " + format_double(L0) + " >= 0: no stationary law");
    const double alpha = m.timed("alpha", [&] { return solve_alpha_for(lin, c, f); });
    const auto bank = m.timed("sample", [&] { return sample_stationary(ae, c.steps, c.samples, seed); });
    if (bank.under_converged)
        m.warn("bank under-converged: truncation diagnostic " + format_double(bank.truncation));
    if (f.write_bank) {
        auto os = m.open("bank.bin", "stationary samples (binary)");
        write_bank_binary(bank, os);
    }
    const auto norms = norm_statistic(bank);
    const std::size_t k = std::max<std::size_t>(10, std::min<std::size_t>(10000, bank.size() / 100));
    const auto hill = hill_estimator(norms, k);
    if (!hill.stable)
        m.warn("Hill estimate unstable across k: " + hill.flag);

    const auto star = power_iterate(transpose(lin), alpha, c.grid(), c.power());
    const auto dirs = probe_directions(c.dimension, f.directions, seed, false);
    Json per = Json::array();
    std::vector<double> ratios;
    auto summary = m.open("tails.csv", "per-direction tail constants");
    auto table = m.open("tail_table.csv", "t^alpha P{<R,u> > t} per direction");
    CsvWriter ws(summary), wt(table);
    ws.header({"direction_index", "u", "C_hat", "ci_lo", "ci_hi", "window_lo", "window_hi", "mellin", "mellin_ci_lo",
               "mellin_ci_hi", "e_star_alpha", "C_over_e_star"});
    wt.header({"direction_index", "t", "scaled_tail", "exceedances"});
    m.timed("directions", [&] {
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            const auto stat = projection_statistic(bank, dirs[i]);
            TailTable tab;
            try {
                tab = empirical_tail(stat, alpha, {}, 200, mix64(seed + i));
            } catch (const InvalidInput& err) {
                m.warn("direction " + std::to_string(i) + ": " + err.what());
            }
            MellinResult mel;
            try {
                mel = mellin_profile(stat, alpha);
            } catch (const InvalidInput& err) {
                m.warn("direction " + std::to_string(i) + " Mellin: " + err.what());
            }
            const double ev = interpolate(star.e, dirs[i]);
            const double ratio = tab.plateau / ev;
            if (std::isfinite(ratio))
                ratios.push_back(ratio);
            std::ostringstream u;
            for (int j = 0; j < dirs[i].size(); ++j)
                u << (j ? " " : "") << format_double(dirs[i](j));
            ws.cell(i).cell(u.str()).cell(tab.plateau).cell(tab.ci_lo).cell(tab.ci_hi).cell(tab.window_lo)
                .cell(tab.window_hi).cell(mel.estimate).cell(mel.ci_lo).cell(mel.ci_hi).cell(ev).cell(ratio);
            ws.end_row();
            for (const auto& r : tab.rows) {
                wt.cell(i).cell(r.t).cell(r.scaled).cell(r.exceedances);
                wt.end_row();
            }
            per.push_back({{"u", vec_json(dirs[i])}, {"C_hat", number_or_null(tab.plateau)},
                           {"mellin", number_or_null(mel.estimate)}});
        }
        return 0;
    });
    double mean = 0.0, var = 0.0;
    for (double r : ratios)
        mean += r;
    mean /= std::max<std::size_t>(1, ratios.size());
    for (double r : ratios)
        var += (r - mean) * (r - mean);
    const double cv = ratios.size() > 1 ? std::sqrt(var / static_cast<double>(ratios.size() - 1)) / mean : NAN;

    const auto cone = classify_cone_case(lin, seed);
    Json j;
    j["cone_case"] = to_string(cone.cone_case);
    j["alpha_spectral"] = alpha;
    j["L_mu_0"] = L0;
    j["alpha_hill"] = {{"value", hill.alpha}, {"ci", {hill.ci_lo, hill.ci_hi}}, {"k", hill.k}, {"stable", hill.stable}};
    j["directions"] = per;
    // C(u) / *e^alpha(u) is constant only in case I; in case II one side may vanish
    j["proportionality_cv"] = number_or_null(cone.cone_case == ConeCase::I ? cv : NAN);
    try {
        j["case"] = to_string(classify_tail_case(cone, bank).tail_case);
    } catch (const InvalidInput& err) {
        j["case"] = "unknown";
        m.warn(err.what());
    }
    j["truncation"] = bank.truncation;
    m.write_json("tails.json", "tail report", j);
}

std::vector<AnnulusTest> annulus_tests(const Json& run, double lo, double ratio, int n) {
    std::vector<AnnulusTest> tests;
    if (run.contains("annuli")) {
        for (const auto& a : run["annuli"]) {
            AnnulusTest t;
            t.name = a.value("name", "f" + std::to_string(tests.size()));
            t.r_lo = detail::number_at(a.at("r_lo"), "annuli.r_lo");
            t.r_hi = detail::number_at(a.at("r_hi"), "annuli.r_hi");
            if (!(t.r_lo > 0.0 && t.r_hi >= t.r_lo))
                throw InvalidInput("annulus '" + t.name + "' needs 0 < r_lo <= r_hi");
            tests.push_back(t);
        }
        return tests;
    }
    double r = lo;
    for (int i = 0; i < n; ++i, r *= ratio)
        tests.push_back({"annulus_" + std::to_string(i), r, r * ratio, std::nullopt, -1.0});
    return tests;
}

void cmd_renewal(const RunConfig& c, const Flags& f, Manifest& m) {
    const auto e = linear_from_json(c.doc);
    validate_linear(e);
    const std::uint64_t seed = c.require_seed();
    const Json run = c.doc.value("run", Json::object());
    const double L0 = lyapunov_at(e, c, 0.0);
    Vec u = Vec::Zero(c.dimension);
    u(0) = 1.0;
    RenewalReport rep;
    Json j;
    j["L_mu_0"] = L0;
    if (L0 > 0.0) {
        const auto tests = annulus_tests(run, 1e3, 2.0, 4);
        const auto nu = power_iterate(e, 0.0, c.grid(), c.power()).nu;
        rep = m.timed("simulate", [&] {
            return potential_profile_expanding(e, u, tests, L0, &nu, seed, {.n_paths = c.paths, .max_steps = 100000});
        });
    } else {
        const auto tests = annulus_tests(run, 1.0, 2.0, 3);
        const double alpha = solve_alpha_for(e, c, f);
        const auto sp = power_iterate(e, alpha, c.grid(), c.power());
        const double La = lyapunov_at(e, c, alpha);
        const double t = f.t.value_or(1e-4);
        if (!(t > 0.0))
            throw InvalidInput("--t must be positive");
        j["alpha"] = alpha;
        j["L_mu_alpha"] = La;
        j["t"] = t;
        rep = m.timed("simulate",
                      [&] { return tilted_potential_profile(e, sp, alpha, La, u, t, tests, seed, c.paths); });
    }
    if (e.dimension == 1 && check_nonarithmetic_1d(e).verdict == Verdict::fail)
        m.warn("arithmetic ensemble: the pointwise renewal limit does not apply; compare averages only");
    for (const auto& r : rep.rows)
        if (!r.flag.empty())
            m.warn(r.label + ": " + r.flag);
    {
        auto os = m.open("renewal.csv", "measured vs predicted potential per test function");
        write_renewal_csv(rep, os);
    }
    j["regime"] = rep.regime;
    m.write_json("renewal.json", "renewal summary", j);
}

void cmd_cramer(const RunConfig& c, const Flags& f, Manifest& m) {
    const auto e = linear_from_json(c.doc);
    validate_linear(e);
    const std::uint64_t seed = c.require_seed();
    const double L0 = lyapunov_at(e, c, 0.0);
    if (!(L0 < 0.0))
        throw HypothesisViolation("L_mu = " + format_double(L0) + " >= 0: sup_n |S_n u| is not a rare event");
    if (f.method != "both" && f.method != "naive" && f.method != "tilted")
        throw InvalidInput("--method must be naive, tilted or both");
    const double alpha = solve_alpha_for(e, c, f);
    const auto sp = power_iterate(e, alpha, c.grid(), c.power());
    const auto dirs = probe_directions(c.dimension, f.directions, seed, true);
    const std::vector<double> ts = log_grid(1.0, 100.0, 3);
    std::vector<CramerTable> tabs;
    Json per = Json::array();
    std::vector<double> ratios;
    m.timed("simulate", [&] {
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            Json d{{"u", vec_json(dirs[i])}};
            for (auto method : {CramerMethod::naive, CramerMethod::tilted}) {
                const bool tilted = method == CramerMethod::tilted;
                if (f.method != "both" && f.method != (tilted ? "tilted" : "naive"))
                    continue;
                const auto tab = cramer_constant(e, dirs[i], ts, alpha, method, tilted ? &sp : nullptr,
                                                 mix64(seed + 2 * i + (tilted ? 1 : 0)), {.n_paths = c.paths});
                const auto pl = cramer_plateau(tab);
                d[tilted ? "tilted" : "naive"] = {{"A", number_or_null(pl.value)},
                                                  {"stderr", number_or_null(pl.std_error)}};
                if (tilted || f.method == "naive")
                    ratios.push_back(pl.value / interpolate(sp.e, dirs[i]));
                tabs.push_back(tab);
            }
            per.push_back(d);
        }
        return 0;
    });
    {
        auto os = m.open("cramer.csv", "t^alpha P{sup_n |S_n u| > t} per direction and method");
        write_cramer_csv(tabs, [&](const Vec& x) { return interpolate(sp.e, x); }, os);
    }
    double mean = 0.0, var = 0.0;
    for (double r : ratios)
        mean += r;
    mean /= std::max<std::size_t>(1, ratios.size());
    for (double r : ratios)
        var += (r - mean) * (r - mean);
    Json j;
    j["alpha"] = alpha;
    j["directions"] = per;
    j["A_over_e_alpha_mean"] = number_or_null(mean);
    j["A_over_e_alpha_cv"] =
        number_or_null(ratios.size() > 1 ? std::sqrt(var / static_cast<double>(ratios.size() - 1)) / mean : NAN);
    m.write_json("cramer.json", "Cramer constant summary", j);
}

void cmd_dualwalk(const RunConfig& c, const Flags& f, Manifest& m) {
    if (!c.affine)
        throw InvalidInput("dualwalk needs an affine ensemble (atoms with 'translation')");
    const auto ae = affine_from_json(c.doc);
    validate_affine(ae);
    const std::uint64_t seed = c.require_seed();
    const auto lin = ae.linear_part();
    const double alpha = solve_alpha_for(lin, c, f);
    const double La = lyapunov_at(lin, c, alpha);
    const auto sp_star = power_iterate(transpose(lin), alpha, c.grid(), c.power());
    Vec mean_b = Vec::Zero(c.dimension);
    for (const auto& a : ae.atoms)
        mean_b += a.weight * a.translation;
    Engine rng = make_stream(seed, 0x73746172, 0);
    auto os = m.open("dualwalk.csv", "one row per start: ladder statistics");
    CsvWriter w(os);
    w.header({"index", "p0", "first_ladder", "n_epochs", "mean_gap", "gamma_hat", "log_height_rate", "eps_moment",
              "eps_moment_cv", "sign_preserved", "zero_events"});
    std::size_t finite = 0, signs = 0;
    double rate = 0.0, gamma = 0.0;
    m.timed("simulate", [&] {
        for (std::size_t i = 0; i < c.paths; ++i) {
            const Vec u0 = c.dimension == 1 ? Vec::Constant(1, 1.0) : random_direction(c.dimension, rng);
            const double sign = mean_b.dot(u0) < 0.0 ? -1.0 : 1.0;
            const double p0 = sign * (0.1 + 1.9 * uniform01(rng));
            const auto rec = dual_walk_simulate(ae, sp_star, La, u0, p0, c.steps, seed, i);
            const auto first = rec.first_ladder();
            if (first) {
                ++finite;
                rate += rec.log_height_rate;
                gamma += rec.gamma_hat;
            }
            signs += rec.sign_preserved ? 1 : 0;
            w.cell(i).cell(p0).cell(first ? std::to_string(*first) : std::string()).cell(rec.ladder_epochs.size())
                .cell(rec.mean_ladder_gap).cell(rec.gamma_hat).cell(rec.log_height_rate).cell(rec.eps_moment)
                .cell(rec.eps_moment_cv).cell(rec.sign_preserved ? 1 : 0).cell(rec.zero_events);
            w.end_row();
        }
        return 0;
    });
    Json j;
    j["alpha"] = alpha;
    j["L_mu_alpha"] = La;
    j["starts"] = c.paths;
    j["tau_finite"] = finite;
    j["sign_preserved"] = signs;
    j["mean_log_height_rate"] = number_or_null(finite ? rate / static_cast<double>(finite) : NAN);
    j["mean_gamma_hat"] = number_or_null(finite ? gamma / static_cast<double>(finite) : NAN);
    m.write_json("dualwalk.json", "dual walk summary", j);
}

int run(const std::string& command, const Flags& f) {
    fs::path out(f.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!fs::is_directory(out)) {
        std::cerr << "error: cannot create output directory '" << f.out << "'\n";
        return 2;
    }
    Manifest m(command, out);
    Json echo{{"config_path", f.config}, {"out", f.out}, {"threads", f.threads}};
    if (f.seed)
        echo["seed"] = *f.seed;
    m.doc()["flags"] = echo;
    set_thread_count(f.threads);
    int code = 0;
    std::string error;
    try {
        const RunConfig c = resolve(f);
        m.doc()["config"] = c.doc;
        m.doc()["ensemble_hash"] = c.hash;
        if (c.seed)
            m.doc()["seed"] = *c.seed;
        m.doc()["resolved"] = {{"resolution", c.resolution}, {"samples", c.samples}, {"paths", c.paths},
                               {"steps", c.steps}, {"s_grid", {c.s_min, c.s_max, c.s_count}}};
        if (command == "validate")
            cmd_validate(c, m);
        else if (command == "spectrum")
            cmd_spectrum(c, f, m);
        else if (command == "tails")
            cmd_tails(c, f, m);
        else if (command == "renewal")
            cmd_renewal(c, f, m);
        else if (command == "cramer")
            cmd_cramer(c, f, m);
        else
            cmd_dualwalk(c, f, m);
    } catch (const InvalidInput& err) {
        code = 2;
        error = err.what();
    } catch (const HypothesisViolation& err) {
        code = 3;
        error = err.what();
    } catch (const NonConvergence& err) {
        code = 1;
        error = err.what();
    } catch (const std::exception& err) {
        code = 1;
        error = err.what();
    }
    if (!error.empty())
        std::cerr << "error: " << error << '\n';
    m.finish(code, error);
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral theory of random matrix products and affine recursions"};
    app.set_version_flag("--version", std::string(KESTEN_VERSION));
    app.require_subcommand(1);
    Flags f;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "structural and hypothesis checks"},
        {"spectrum", "k(s) curve, alpha and Lyapunov exponents"},
        {"tails", "stationary samples, Hill, tail constants, Mellin, tail case"},
        {"renewal", "potential kernel against the renewal limit"},
        {"cramer", "t^alpha P{sup |S_n u| > t}, naive and tilted"},
        {"dualwalk", "dual ladder walk statistics"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", f.config, "ensemble JSON with optional 'run' block")->required();
        sub->add_option("--seed", f.seed, "64-bit seed");
        sub->add_option("--out", f.out, "output directory")->capture_default_str();
        sub->add_option("--threads", f.threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
        sub->add_option("--resolution", f.resolution, "grid resolution for d >= 2");
        sub->add_option("--samples", f.samples, "stationary samples");
        sub->add_option("--paths", f.paths, "Monte Carlo paths or dual-walk starts");
        sub->add_option("--steps", f.steps, "steps per sample or walk");
        sub->add_option("--s-min", f.s_min);
        sub->add_option("--s-max", f.s_max);
        sub->add_option("--s-count", f.s_count);
        sub->add_option("--alpha", f.alpha, "skip the root solve and use this tail index");
        if (name == "renewal")
            sub->add_option("--t", f.t, "scale for the tilted potential (small)");
        if (name == "tails" || name == "cramer")
            sub->add_option("--directions", f.directions, "probe directions for d >= 2")->check(CLI::PositiveNumber);
        if (name == "cramer")
            sub->add_option("--method", f.method, "naive, tilted or both")->capture_default_str();
        if (name == "spectrum")
            sub->add_flag("--no-mc", f.no_mc, "skip Monte Carlo columns (tilted L, gap, rho)");
        if (name == "tails")
            sub->add_flag("--write-bank", f.write_bank, "also write the samples as bank.bin");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : 2;
    }
    return run(app.get_subcommands().front()->get_name(), f);
}
