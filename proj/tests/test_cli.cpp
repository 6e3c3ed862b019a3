#include "commands.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;

    [[nodiscard]] json parsed() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "gpreg");
    std::ostringstream out, err;
    const int code = gpreg::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("gpreg_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("analyze") {
    const auto m = run({"analyze", "matern(nu=2.5)"});
    REQUIRE(m.code == 0);
    const auto j = m.parsed();
    CHECK(j["per_axis"][0]["order"] == 2.5);
    CHECK(j["per_axis"][0]["order_exact"] == "5/2");
    CHECK(j["per_axis"][0]["sharp"] == true);
    CHECK(j["sobolev_order"] == 2);
    CHECK(j["derivation"].is_array());

    const auto w = run({"analyze", "--kernel", "wiener()"});
    REQUIRE(w.code == 0);
    CHECK(w.parsed()["per_axis"][0]["order"] == 0.5);
    CHECK(w.parsed()["per_axis"][0]["sharp"] == true);

    const auto se = run({"analyze", "se()"});
    CHECK(se.parsed()["per_axis"][0]["order"] == "inf");
    CHECK(se.parsed()["sobolev_order"] == "inf");

    const auto bad = run({"analyze", "matern(nu=-1)"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("nu") != std::string::npos);

    const auto csv = run({"analyze", "tensor(wiener(), se())", "--format", "csv"});
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("kernel,axis,order", 0) == 0);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"analyze"}).code == 2);
    CHECK(run({"analyze", "se()", "--bogus"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"verify", "se()", "--tol", "-1"}).code == 2);
    CHECK(run({"sample", "se()", "--profile", "lab"}).code == 2);
    CHECK(run({"sample", "se()", "--alpha", "x"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("verify") {
    const auto m = run({"verify", "matern(nu=1.5)"});
    CHECK(m.code == 0);
    const auto j = m.parsed();
    CHECK(j["verdict"] == "pass");
    CHECK(std::abs(j["detected"]["order"].get<double>() - 1.5) <= 0.15);
    CHECK(j["detected"]["n"] == 1);
    CHECK(j["detected"]["scales"].size() >= 4);

    const auto se = run({"verify", "se()", "--max-order", "3"});
    CHECK(se.code == 0);
    CHECK(se.parsed()["detected"]["note"].get<std::string>().find("smooth to probed order") != std::string::npos);

    const auto m1 = run({"verify", "matern(nu=1)"});
    CHECK(m1.code == 0);
    CHECK(m1.parsed()["verdict"] == "log-flagged");

    const auto t = run({"verify", "tensor(wendland(d=1,n=0), wendland(d=1,n=1))"});
    CHECK(t.code == 0);
    CHECK(t.parsed()["detected"].is_array());
    CHECK(t.parsed()["detected"].size() == 2);

    const auto w = run({"verify", "wiener()"});
    CHECK(w.parsed()["probes"].size() == 8);

    // --tol narrows the plain tolerance; the log-corrected one never drops below its default.
    CHECK(run({"verify", "matern(nu=1)", "--tol", "0.001"}).code == 0);
    CHECK(run({"verify", "matern(nu=0.5)", "--tol", "1e-9"}).code == 1);
}

TEST_CASE("sample golden file") {
    TempDir dir;
    const fs::path out = dir.path / "se.csv";
    const auto r = run({"sample", "se()", "--grid", "0:4:65", "--count", "3", "--seed", "42", "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(out) == slurp(fs::path(GPREG_TEST_DATA_DIR) / "golden" / "se_seed42_65x3.csv"));
    const auto meta = json::parse(slurp(dir.path / "se.json"));
    CHECK(meta["kernel"] == "se()");
    CHECK(meta["seed"] == 42);
    CHECK(meta["grid"] == "0:4:65");
    CHECK(meta.contains("jitter_used"));
    CHECK(meta["alpha"] == json::array({0}));
    for (const auto& entry : fs::directory_iterator(dir.path)) {
        CHECK(entry.path().extension() != ".tmp");
    }
    // Same flags, same bytes on standard output.
    const auto a = run({"sample", "se()", "--grid", "0:4:65", "--count", "3", "--seed", "42"});
    CHECK(a.out == slurp(out));
}

TEST_CASE("sample errors and 2-D schema") {
    const auto w = run({"sample", "wiener()", "--grid", "0:1:65"});
    CHECK(w.code == 3);
    CHECK(w.err.find("error") != std::string::npos);
    const auto gate = run({"sample", "matern(nu=0.5)", "--alpha", "1", "--grid", "0:1:65"});
    CHECK(gate.code == 3);
    const auto t = run({"sample", "tensor(wendland(d=1,n=0), wendland(d=1,n=1))", "--grid", "0:1:64,0:1:64"});
    REQUIRE(t.code == 0);
    CHECK(t.out.rfind("x,y,s0\n", 0) == 0);
    CHECK(std::count(t.out.begin(), t.out.end(), '\n') == 64 * 64 + 1);
}

TEST_CASE("estimate") {
    const auto m = run({"estimate", "matern(nu=0.5)", "--grid", "0:1:4097", "--count", "200", "--seed", "42"});
    REQUIRE(m.code == 0);
    const auto j = m.parsed();
    CHECK(j["status"] == "point");
    CHECK(j["axis"] == "x");
    CHECK(j["m_used"] == 1);
    CHECK(std::abs(j["s_hat"].get<double>() - 0.5) <= 0.1);
    CHECK(j["lags"].size() >= 4);
    CHECK(j.contains("slope"));
    CHECK(j.contains("r2"));

    TempDir dir;
    const fs::path constant = dir.path / "constant.csv";
    {
        std::ofstream out(constant);
        out << "x";
        for (int s = 0; s < 50; ++s) {
            out << ",s" << s;
        }
        out << '\n';
        for (int i = 0; i < 257; ++i) {
            out << i / 256.0;
            for (int s = 0; s < 50; ++s) {
                out << ",1.5";
            }
            out << '\n';
        }
    }
    const auto c = run({"estimate", "--samples", constant.string()});
    REQUIRE(c.code == 0);
    CHECK(c.parsed()["status"] == "degenerate");
    CHECK(c.parsed()["s_hat"].is_null());
    CHECK(c.parsed()["kernel"] == "unknown");

    CHECK(run({"estimate", "se()", "--samples", constant.string()}).code == 2);
    CHECK(run({"estimate", "--samples", (dir.path / "missing.csv").string()}).code == 3);
    CHECK(run({"estimate"}).code == 2);
}

TEST_CASE("estimate reads sample files with their sidecar") {
    TempDir dir;
    const fs::path out = dir.path / "w.csv";
    REQUIRE(run({"sample", "wiener()", "--grid", "1:2:1025", "--count", "60", "--out", out.string()}).code == 0);
    const auto e = run({"estimate", "--samples", out.string()});
    REQUIRE(e.code == 0);
    CHECK(e.parsed()["kernel"] == "wiener()");
    CHECK(std::abs(e.parsed()["s_hat"].get<double>() - 0.5) <= 0.1);
}

TEST_CASE("estimate on the tensor pipeline") {
    const auto r = run({"estimate", "tensor(wendland(d=1,n=0), wendland(d=1,n=1))", "--profile", "desk"});
    REQUIRE(r.code == 0);
    const auto j = r.parsed();
    REQUIRE(j.is_array());
    CHECK(j[0]["axis"] == "x");
    CHECK(j[1]["axis"] == "y");
    CHECK(std::abs(j[0]["s_hat"].get<double>() - 0.5) <= 0.12);
    CHECK(std::abs(j[1]["s_hat"].get<double>() - 1.5) <= 0.2);
}

TEST_CASE("report") {
    TempDir dir;
    const std::string kernel = "tensor(wendland(d=1,n=0), wendland(d=1,n=1))";
    const auto r = run({"report", kernel, "--grid", "0:1:64,0:1:64", "--count", "60", "--out", dir.path.string()});
    REQUIRE(r.code == 0);
    const auto j = r.parsed();
    const auto v = run({"verify", kernel}).parsed();
    CHECK(j["verify"]["verdict"] == v["verdict"]);
    CHECK(j["verify"]["detected"] == v["detected"]);
    CHECK(j["analyze"] == run({"analyze", kernel}).parsed());
    CHECK(j["estimate"].size() == 2);

    const std::string surface = slurp(dir.path / "kernel_surface.csv");
    CHECK(surface.rfind("x,y,k\n", 0) == 0);
    CHECK(std::count(surface.begin(), surface.end(), '\n') == 64 * 64 + 1);
    const std::string path = slurp(dir.path / "sample_path.csv");
    CHECK(path.rfind("x,y,f\n", 0) == 0);
    CHECK(std::count(path.begin(), path.end(), '\n') == 64 * 64 + 1);

    TempDir dir2;
    const auto ns = run({"report", "matern(nu=1.5)", "--no-sample", "--out", dir2.path.string()});
    REQUIRE(ns.code == 0);
    CHECK(ns.parsed()["estimate"]["skipped"] == true);
    CHECK(ns.parsed()["estimate"]["reason"].get<std::string>().find("--no-sample") != std::string::npos);
    CHECK(fs::exists(dir2.path / "kernel_surface.csv"));
    CHECK_FALSE(fs::exists(dir2.path / "sample_path.csv"));
}
