#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string("FBSDE_CACHE_DIR=") +
                      (std::filesystem::temp_directory_path() / "fbsde-test-cache").string() + " " + FBSDE_CLI + " " +
                      args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string spec(const char* name) { return std::string(FBSDE_SPECS) + "/" + name; }

} // namespace

TEST_CASE("psi at two", "[cli]") {
    Run r = run("psi --p 2");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(std::abs(j["result"]["psi1"].get<double>() - 1.0) < 1e-12);
    CHECK(std::abs(j["result"]["psi2"].get<double>() - 1.0) < 1e-12);
    CHECK(j.contains("meta"));
}

TEST_CASE("classify the zero model", "[cli]") {
    Run r = run("classify " + spec("zero.json"));
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["result"]["verdict"] == "SolvableAllT");
}

TEST_CASE("dominate the quadratic box", "[cli]") {
    Run r = run("dominate " + spec("quadratic.json") + " --T 2");
    REQUIRE(r.code == 0);
    json ev = json::parse(r.out)["result"]["event"];
    CHECK(ev["kind"] == "BlowUp");
    CHECK(std::abs(ev["t_star"].get<double>() - 1.0) < 1e-3);
}

TEST_CASE("envelope keys", "[cli]") {
    Run r = run("envelope " + spec("case_one_box.json") + " --y 0.5 --y -0.5");
    REQUIRE(r.code == 0);
    json res = json::parse(r.out)["result"];
    CHECK(res["F_upper"].size() == 2);
    CHECK(res["F_lower"].size() == 2);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run("").code == 2);
    CHECK(run("psi --q 3").code == 2);
    CHECK(run("nonsense").code == 2);
}

TEST_CASE("runtime errors exit with 1 and report the kind", "[cli]") {
    Run r = run("classify /nonexistent/spec.json");
    CHECK(r.code == 1);
    json j = json::parse(r.out);
    CHECK(j["result"]["error"]["kind"] == "IoError");
    Run p = run("pmax --c1 1 --c3 1");
    CHECK(p.code == 1);
}

TEST_CASE("reports are stable apart from meta", "[cli]") {
    Run a = run("classify " + spec("quadratic.json") + " --T 2");
    Run b = run("classify " + spec("quadratic.json") + " --T 2");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    json ja = json::parse(a.out), jb = json::parse(b.out);
    ja.erase("meta");
    jb.erase("meta");
    CHECK(ja.dump() == jb.dump());
}

TEST_CASE("solve uses the cache deterministically", "[cli]") {
    Run a = run("solve " + spec("heat.json") + " --dt 0.05 --dx 0.1 --band 1");
    Run b = run("solve " + spec("heat.json") + " --dt 0.05 --dx 0.1 --band 1");
    Run c = run("solve " + spec("heat.json") + " --dt 0.05 --dx 0.1 --band 1 --no-cache");
    REQUIRE(a.code == 0);
    json ja = json::parse(a.out), jb = json::parse(b.out), jc = json::parse(c.out);
    for (json* j : {&ja, &jb, &jc}) j->erase("meta");
    CHECK(ja.dump() == jb.dump());
    CHECK(ja.dump() == jc.dump());
}
