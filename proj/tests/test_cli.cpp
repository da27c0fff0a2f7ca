#include "helpers.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kt;
namespace fs = std::filesystem;

namespace {
fs::path scratch() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / ("kesten_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

int run(const std::string& args) {
    const std::string cmd = std::string(KESTEN_CLI_PATH) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string ensemble(const std::string& name) { return std::string(KESTEN_ENSEMBLE_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Json json_at(const fs::path& p) { return Json::parse(slurp(p)); }

fs::path write_config(const std::string& name, const Json& doc) {
    const fs::path p = scratch() / (name + ".json");
    std::ofstream(p) << doc.dump();
    return p;
}
} // namespace

TEST_CASE("validate") {
    const auto out = scratch() / "validate";
    CHECK(run("validate --config " + ensemble("kesten_1d") + " --out " + out.string()) == 0);
    const auto v = json_at(out / "validation.json");
    CHECK(v["nonarithmetic"] == "pass");
    CHECK(v["proximality"] == "pass");
    CHECK(json_at(out / "manifest.json")["status"] == "ok");

    auto lattice = load("arithmetic_1d");
    lattice["atoms"][1]["matrix"] = Json::array({0.5});
    const auto lat_out = scratch() / "lattice";
    CHECK(run("validate --config " + write_config("lattice", lattice).string() + " --out " + lat_out.string()) == 0);
    CHECK(json_at(lat_out / "validation.json")["nonarithmetic"] == "fail");
    CHECK(json_at(lat_out / "manifest.json")["warnings"].dump().find("nonarithmetic") != std::string::npos);

    auto bad = load("ip_2d");
    bad["atoms"][1]["matrix"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0})});
    const auto bad_out = scratch() / "bad";
    CHECK(run("validate --config " + write_config("bad", bad).string() + " --out " + bad_out.string()) == 2);
    const auto man = json_at(bad_out / "manifest.json");
    CHECK(man["exit_code"] == 2);
    CHECK(man["error"].get<std::string>().find("atom 1") != std::string::npos);

    CHECK(run("validate --out " + bad_out.string()) == 2);
    CHECK(run("validate --config /nonexistent.json --out " + bad_out.string()) == 2);
}

TEST_CASE("spectrum") {
    const auto out = scratch() / "spectrum";
    CHECK(run("spectrum --config " + ensemble("kesten_1d") + " --no-mc --out " + out.string()) == 0);
    const auto s = json_at(out / "spectrum.json");
    CHECK(s["alpha"].get<double>() == Catch::Approx(1.0).margin(1e-8));
    CHECK(s["L_mu_alpha"].get<double>() == Catch::Approx(0.8 * std::log(2.0) - 0.2 * std::log(3.0)).margin(1e-10));

    const auto sim = scratch() / "similarity";
    CHECK(run("spectrum --config " + ensemble("similarity_2d") + " --no-mc --resolution 256 --out " + sim.string()) == 0);
    std::istringstream csv(slurp(sim / "curve.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("s,k,log_k,", 0) == 0);
    int rows = 0;
    while (std::getline(csv, line)) {
        const double s = std::stod(line.substr(0, line.find(',')));
        const double k = std::stod(line.substr(line.find(',') + 1));
        CHECK(k == Catch::Approx(0.4 * std::pow(2.0, s) + 0.6 * std::pow(1.0 / 3.0, s)).epsilon(1e-3));
        ++rows;
    }
    CHECK(rows == load("similarity_2d")["run"]["s_grid"].value("count", 21));

    // Monte Carlo columns make the command stochastic
    CHECK(run("spectrum --config " + ensemble("kesten_1d") + " --out " + out.string()) == 2);

    auto capped = load("ip_2d");
    capped["run"] = {{"s_infinity", 1.5}};
    const auto cap_out = scratch() / "capped";
    CHECK(run("spectrum --config " + write_config("capped", capped).string() + " --no-mc --out " +
              cap_out.string()) == 2);
    CHECK(json_at(cap_out / "manifest.json")["error"].get<std::string>().find("s_infinity") != std::string::npos);
    CHECK(run("spectrum --config " + write_config("capped", capped).string() + " --no-mc --s-max 1.2 --out " +
              cap_out.string()) == 0);

    auto starved = load("ip_2d");
    starved["run"] = {{"max_iter", 2}};
    const auto st_out = scratch() / "starved";
    CHECK(run("spectrum --config " + write_config("starved", starved).string() + " --no-mc --s-count 3 --out " +
              st_out.string()) == 1);
    const auto man = json_at(st_out / "manifest.json");
    CHECK(man["status"] == "error");
    CHECK(fs::exists(st_out / "curve.csv"));
}

TEST_CASE("tails and reproducibility") {
    const auto a = scratch() / "tails_a", b = scratch() / "tails_b";
    const std::string args = "tails --config " + ensemble("kesten_1d") + " --samples 200000 --seed 9 ";
    CHECK(run(args + "--threads 1 --out " + a.string()) == 0);
    CHECK(run(args + "--threads 4 --out " + b.string()) == 0);
    for (const char* f : {"tails.csv", "tail_table.csv", "tails.json"})
        CHECK(slurp(a / f) == slurp(b / f));
    const auto t = json_at(a / "tails.json");
    const auto ci = t["alpha_hill"]["ci"];
    CHECK(ci[0].get<double>() <= 1.0);
    CHECK(ci[1].get<double>() >= 1.0);
    CHECK(t["case"] == "II''");
    const auto man = json_at(a / "manifest.json");
    CHECK(man["ensemble_hash"].get<std::string>().size() == 16);
    CHECK(man["outputs"].size() == 3);

    const auto c = scratch() / "tails_c";
    CHECK(run("tails --config " + ensemble("kesten_1d") + " --samples 200000 --seed 10 --out " + c.string()) == 0);
    CHECK(slurp(a / "tails.csv") != slurp(c / "tails.csv"));

    auto fixed = load("kesten_1d");
    for (auto& atom : fixed["atoms"])
        atom["translation"] = Json::array({0.0});
    const auto fx = scratch() / "fixed";
    CHECK(run("tails --config " + write_config("fixed", fixed).string() + " --seed 1 --out " + fx.string()) == 2);
    CHECK(json_at(fx / "manifest.json")["error"].get<std::string>().find("fixed point") != std::string::npos);

    auto up = load("ip_2d_expanding");
    up["atoms"][0]["translation"] = Json::array({1.0, 0.0});
    up["atoms"][1]["translation"] = Json::array({0.0, 1.0});
    const auto ux = scratch() / "expanding";
    CHECK(run("tails --config " + write_config("up", up).string() + " --seed 1 --samples 1000 --out " + ux.string()) ==
          3);
    CHECK(json_at(ux / "manifest.json")["exit_code"] == 3);

    CHECK(run("tails --config " + ensemble("kesten_1d") + " --out " + c.string()) == 2);
    CHECK(run("tails --config " + ensemble("ip_2d") + " --seed 1 --out " + c.string()) == 2);
}

TEST_CASE("renewal, cramer and dual walk commands") {
    const auto r = scratch() / "renewal";
    CHECK(run("renewal --config " + ensemble("deterministic_1d") + " --seed 1 --paths 100 --out " + r.string()) == 0);
    std::istringstream csv(slurp(r / "renewal.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "regime,label,measured,predicted,stderr,flag");
    while (std::getline(csv, line))
        CHECK(line.find("expanding,annulus_") == 0);

    const auto c = scratch() / "cramer";
    CHECK(run("cramer --config " + ensemble("ip_2d") + " --seed 1 --paths 5000 --directions 2 --out " + c.string()) ==
          0);
    const auto cj = json_at(c / "cramer.json");
    CHECK(cj["directions"].size() == 2);
    CHECK(cj["directions"][0]["tilted"]["A"].get<double>() > 0.0);
    CHECK(run("cramer --config " + ensemble("ip_2d_expanding") + " --seed 1 --out " + c.string()) == 3);
    CHECK(run("cramer --config " + ensemble("ip_2d") + " --seed 1 --method magic --out " + c.string()) == 2);

    const auto d = scratch() / "dual";
    CHECK(run("dualwalk --config " + ensemble("kesten_1d") + " --seed 1 --paths 200 --steps 500 --out " + d.string()) ==
          0);
    const auto dj = json_at(d / "dualwalk.json");
    CHECK(dj["tau_finite"] == 200);
    CHECK(dj["sign_preserved"] == 200);

    CHECK(run("frobnicate") == 2);
    CHECK(run("--version") == 0);
}
