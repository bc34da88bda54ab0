#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
    std::string cmd = env + (env.empty() ? "" : " ") + std::string(PSJS_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string write(const std::string& name, const std::string& text) {
    auto dir = std::filesystem::temp_directory_path() / "psjs_cli_tests";
    std::filesystem::create_directories(dir);
    auto path = (dir / name).string();
    std::ofstream(path) << text;
    return path;
}

const char* kEx1 =
    "states: q r\n"
    "start: X\n"
    "X -> <X X> : 0.5\n"
    "X -> q : 0.3\n"
    "X -> r : 0.2\n"
    "<q r> -> X : 1\n";

} // namespace

TEST_CASE("term prints the termination table") {
    auto r = run("term " + write("ex1.psjs", kEx1) + " --from X");
    CHECK(r.code == 0);
    CHECK(r.out.find("[q]") != std::string::npos);
    CHECK(r.out.find("0.309922928614") != std::string::npos);
    CHECK(r.out.find("converged yes") != std::string::npos);
}

TEST_CASE("kleene and newton agree through the cli") {
    auto path = write("ex1.psjs", kEx1);
    auto a = nlohmann::json::parse(run("term " + path + " --format json --method kleene --tol 1e-13").out);
    auto b = nlohmann::json::parse(run("term " + path + " --format json --method newton").out);
    CHECK(a["schema"] == "psjs-cli/1");
    double x = a["result"]["values"]["X"]["q"], y = b["result"]["values"]["X"]["q"];
    CHECK(std::abs(x - y) < 1e-10);
}

TEST_CASE("invalid models exit with code 2") {
    auto r = run("validate " + write("bad.psjs", "states: q\nX -> q : 0.5\n"));
    CHECK(r.code == 2);
    CHECK(r.out.find("sum to 1/2") != std::string::npos);
    CHECK(run("term " + write("bad.psjs", "states: q\nX -> q : 0.5\n")).code == 2);
    CHECK(run("term " + write("syntax.psjs", "states: q\nX -> : 1\n")).code == 2);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("frobnicate").code == 1);
    CHECK(run("term").code == 1);
    CHECK(run("term /nonexistent/model.psjs").code == 1);
    CHECK(run("term " + write("ex1.psjs", kEx1) + " --format yaml").code == 1);
    CHECK(run("term " + write("ex1.psjs", kEx1) + " --bogus").code == 1);
    CHECK(run("casestudy gametree --variant minimax --p-sweep 0.1").code == 1);
}

TEST_CASE("strict mode reports unconverged results") {
    auto path = write("ex1.psjs", kEx1);
    CHECK(run("term " + path + " --method kleene --tol 1e-12").code == 0);
    auto r = run("expect " + write("par.psjs", "states: q\nstart: X\nX -> <X X> : 1/2\nX -> q : 1/2\n<q q> -> q : 1\n") +
                 " --kind time --to q --max-k 128 --strict");
    CHECK(r.code == 3);
}

TEST_CASE("replay reports the run measures") {
    auto r = run("simulate " + write("ex1.psjs", kEx1) + " --replay 0,1,0,2,1 --format json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out)["result"];
    CHECK(j["time"] == 3);
    CHECK(j["work"] == 5);
    CHECK(j["space"] == 3);
    CHECK(j["probability"] == "9/2000");
}

TEST_CASE("simulation output does not depend on the thread count") {
    auto path = write("ex1.psjs", kEx1);
    auto a = run("simulate " + path + " --runs 5000 --seed 11 --max-space 100 --format json", "PSJS_THREADS=1");
    auto b = run("simulate " + path + " --runs 5000 --seed 11 --max-space 100 --format json", "PSJS_THREADS=4");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    auto c = run("simulate " + path + " --runs 5000 --seed 12 --max-space 100 --format json", "PSJS_THREADS=1");
    CHECK(a.out != c.out);
}

TEST_CASE("every subcommand emits schema-versioned json") {
    auto path = write("ex1.psjs", kEx1);
    for (std::string args : {"validate " + path, "term " + path, "space " + path, "dist " + path + " --to q --max-k 8",
                             "expect " + path, "expect " + path + " --kind time --to q", "finite " + path,
                             "simulate " + path + " --runs 200 --max-space 100", "serialise " + path,
                             "normalise " + path, std::string("casestudy divcon --p-sweep 0.5 --n-max 2")}) {
        auto r = run(args + " --format json");
        CHECK_MESSAGE(r.code == 0, args);
        auto j = nlohmann::json::parse(r.out, nullptr, false);
        REQUIRE_MESSAGE(!j.is_discarded(), args);
        CHECK(j["schema"] == "psjs-cli/1");
    }
}

TEST_CASE("dist csv has the pmf columns") {
    auto r = run("dist " + write("ex1.psjs", kEx1) + " --to q --max-k 4 --format csv");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("k,mass,cdf,tail\n", 0) == 0);
    auto at = r.out.find("\n4,");
    REQUIRE(at != std::string::npos);
    CHECK(std::stod(r.out.substr(at + 3)) == doctest::Approx(0.009).epsilon(1e-12));
}

TEST_CASE("serialise round trip file outputs") {
    auto path = write("ex1.psjs", kEx1);
    auto dir = std::filesystem::temp_directory_path() / "psjs_cli_tests";
    auto out = (dir / "ex1.ppds").string(), map = (dir / "ex1.map.json").string();
    CHECK(run("serialise " + path + " -o " + out + " --map " + map).code == 0);
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().rfind("control: _box", 0) == 0);
    std::ifstream mi(map);
    auto j = nlohmann::json::parse(mi);
    CHECK(j.contains("box"));
}

TEST_CASE("casestudy gametree seq sweep prints the expected-work row") {
    auto dir = (std::filesystem::temp_directory_path() / "psjs_cli_tests" / "models").string();
    auto r = run("casestudy gametree --variant seq --p-sweep 0:0.3:0.05 --models-dir " + dir);
    REQUIRE(r.code == 0);
    std::stringstream ss(r.out);
    std::string line;
    std::getline(ss, line);
    CHECK(line.rfind("variant,p,EW,ET_lb,ET_converged,pct_vs_seq", 0) == 0);
    const double expect[] = {1.00, 1.43, 1.96, 2.63, 3.50, 4.68, 6.33};
    int i = 0;
    while (std::getline(ss, line)) {
        std::stringstream ls(line);
        std::string variant, p, ew;
        std::getline(ls, variant, ',');
        std::getline(ls, p, ',');
        std::getline(ls, ew, ',');
        REQUIRE(i < 7);
        CHECK(variant == "seq");
        CHECK(std::round(std::stod(ew) * 100) / 100 == doctest::Approx(expect[i]));
        ++i;
    }
    CHECK(i == 7);
    CHECK(std::filesystem::exists(dir + "/gametree_seq_p3_10.psjs"));
    CHECK(run("validate " + dir + "/gametree_seq_p3_10.psjs").code == 0);
}
