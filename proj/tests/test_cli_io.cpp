// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bops/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>
#include <unistd.h>

using namespace bops;
using io::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out, err;
};

std::string data(const std::string& name) { return std::string(BOPS_DATA_DIR) + "/" + name; }

RunResult run(const std::string& args) {
    auto err_path = std::filesystem::temp_directory_path() / ("bops_cli_err_" + std::to_string(::getpid()));
    std::string cmd = std::string(BOPS_CLI_PATH) + " " + args + " 2>" + err_path.string();
    RunResult r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
    int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = io::read_file(err_path.string());
    std::filesystem::remove(err_path);
    return r;
}

cplx cval(const json& j) { return io::parse_complex(j, "test"); }

}  // namespace

TEST_CASE("complex values and lists") {
    CHECK(io::parse_complex(json(1.5), "x") == cplx(1.5, 0.0));
    CHECK(io::parse_complex(json::parse("[0.6, -0.8]"), "x") == cplx(0.6, -0.8));
    CHECK_THROWS_AS(io::parse_complex(json::parse("[1, 2, 3]"), "x"), InputError);
    CHECK_THROWS_AS(io::parse_complex(json("1"), "x"), InputError);
    CHECK_THROWS_AS(io::parse_complex_list(json(1.0), "x"), InputError);
    CHECK(io::to_json(cplx(2.0, -1.0)) == json::parse("[2.0, -1.0]"));
    CHECK_THROWS_AS(io::parse_text("{\"factors\": [", "weight"), InputError);
}

TEST_CASE("weight JSON round trip and errors") {
    auto j = json::parse(R"({"factors": [{"kind": "conjugated", "zero": 0.5, "exponent": 0.3},
                                         {"kind": "outer", "zero": [2.0, 0.0], "exponent": [0.4, 0.0]},
                                         {"kind": "monomial", "exponent": 1}],
                             "rational_mod": {"alphas": [3.0]}})");
    auto w = io::weight_from_json(j);
    REQUIRE(w.factors.size() == 3);
    CHECK(w.factors[2].kind == FactorKind::monomial);
    REQUIRE(w.rational_mod.has_value());
    auto back = io::weight_from_json(io::weight_to_json(w));
    for (cplx z : {cplx(0.3, 0.4), cplx(-0.9, 0.1)}) CHECK(evaluate_weight(back, z) == evaluate_weight(w, z));

    CHECK_THROWS_AS(io::weight_from_json(json::parse(R"({"factors": [{"kind": "sideways", "zero": 2, "exponent": 1}]})")), InputError);
    CHECK_THROWS_AS(io::weight_from_json(json::parse(R"({"factors": [{"kind": "outer", "zero": 2}]})")), InputError);
    CHECK_THROWS_AS(io::weight_from_json(json::parse(R"({"factors": [{"kind": "outer", "exponent": 2}]})")), InputError);
    CHECK_THROWS_AS(io::weight_from_json(json::parse(R"({"factors": 3})")), InputError);
    CHECK_THROWS_AS(io::weight_from_json(json::parse("[]")), InputError);

    FourierTable t{-1, 1, {0.25, 1.0, 0.25}, 0.0};
    auto t2 = io::fourier_from_json(io::fourier_to_json(t));
    CHECK(t2.k_min == -1);
    CHECK(t2.coeffs == t.coeffs);
    CHECK_THROWS_AS(io::fourier_from_json(json::parse(R"({"k_min": 1, "k_max": 2, "coeffs": [1, 2]})")), InputError);
    CHECK_THROWS_AS(io::fourier_from_json(json::parse(R"({"k_min": -1, "k_max": 1, "coeffs": [1]})")), InputError);
}

TEST_CASE("transformation requests") {
    auto s = io::shift_from_json(json::parse(R"({"alphas": [2], "beta_stars": [[0.2, 0.1]]})"));
    CHECK(s.alphas == std::vector<cplx>{2.0});
    CHECK(s.beta_stars == std::vector<cplx>{cplx(0.2, 0.1)});
    CHECK_THROWS_AS(io::shift_from_json(json::parse(R"({"gammas": [2]})")), InputError);
    CHECK_THROWS_AS(io::shift_from_json(json::parse(R"({"alphas": [[0.6, 0.8]]})")), DomainError);

    auto one = io::schlesinger_from_json(json::parse(R"({"j": 2, "direction": -1})"));
    REQUIRE(one.size() == 1);
    CHECK(one[0].j == 2);
    CHECK(one[0].direction == -1);
    CHECK(io::schlesinger_from_json(json::parse(R"([{"j": 1, "direction": 1}, {"j": 2, "direction": 1}])")).size() == 2);
    CHECK_THROWS_AS(io::schlesinger_from_json(json::parse(R"({"j": 1, "direction": 2})")), InputError);
    CHECK_THROWS_AS(io::schlesinger_from_json(json::parse(R"({"j": 1})")), InputError);
    CHECK_THROWS_AS(io::schlesinger_from_json(json::parse("[]")), InputError);
}

TEST_CASE("CSV helpers") {
    CHECK(io::csv_escape("plain") == "plain");
    CHECK(io::csv_escape("a,b") == "\"a,b\"");
    CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(io::csv_number(0.5) == "0.5");
}

TEST_CASE("compute on the Lebesgue weight") {
    auto r = run("compute --weight " + data("lebesgue.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["command"] == "compute");
    CHECK(j["n_max"] == 8);
    const auto& rows = j["table"]["rows"];
    REQUIRE(rows.size() == 9);
    for (const auto& row : rows) {
        CHECK(std::abs(cval(row[1]) - 1.0) < 1e-12);
        CHECK(std::abs(cval(row[2]) - 1.0) < 1e-12);
    }
}

TEST_CASE("compute on a simple pole outside the disk") {
    auto r = run("compute --weight " + data("pole_at_2.json") + " --nmax 4");
    REQUIRE(r.code == 0);
    auto rows = json::parse(r.out)["table"]["rows"];
    CHECK(std::abs(cval(rows[1][4]) + 0.5) < 1e-12);
    CHECK(std::abs(cval(rows[2][4])) < 1e-12);

    auto csv = run("compute --weight " + data("pole_at_2.json") + " --nmax 2 --format csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("n,I_re,I_im,kappa_re,kappa_im,r_re,r_im,rbar_re,rbar_im\n", 0) == 0);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 4);
}

TEST_CASE("input errors exit with code 2") {
    auto bad = run("compute --weight " + data("malformed.json"));
    CHECK(bad.code == 2);
    auto err = json::parse(bad.err);
    CHECK(err["error"]["code"] == 2);
    CHECK(err["error"]["kind"] == "input");
    CHECK(run("compute --weight /nonexistent/weight.json").code == 2);
    CHECK(run("compute --nmax").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("verify --suite nonsense").code == 2);
    CHECK(run("verify --tol -1").code == 2);
}

TEST_CASE("transform") {
    auto k = run("transform --weight " + data("lebesgue.json") + " --shift '{\"alphas\":[2]}'");
    CHECK(k.code == 0);
    auto j = json::parse(k.out);
    CHECK(j["status"] == "pass");
    CHECK(j["max_diff"].get<double>() < 1e-10);

    auto s = run("transform --weight " + data("test_weight.json") + " --schlesinger '{\"j\":2,\"direction\":1}'");
    CHECK(s.code == 0);
    CHECK(json::parse(s.out)["status"] == "pass");

    CHECK(run("transform --weight " + data("lebesgue.json") + " --shift '{\"alphas\":[[0.6,0.8]]}'").code == 2);
    CHECK(run("transform --weight " + data("lebesgue.json")).code == 2);
}

TEST_CASE("verify") {
    auto core = run("verify --weight " + data("lebesgue.json") + " --suite core");
    CHECK(core.code == 0);
    CHECK(json::parse(core.out)["status"] == "pass");

    auto hm = run("verify --weight " + data("lebesgue.json") + " --suite hirota");
    CHECK(hm.code == 2);
    CHECK(json::parse(hm.err)["error"]["kind"] == "input");

    auto all = run("verify --weight " + data("test_weight.json") + " --suite all");
    CHECK(all.code == 0);
    auto rep = json::parse(all.out);
    CHECK(rep["status"] == "pass");
    CHECK(rep["summary"]["failed"] == 0);
    CHECK(rep.contains("hirota"));

    auto tight = run("verify --weight " + data("test_weight.json") + " --suite core --tol 1e-300");
    CHECK(tight.code == 5);
    CHECK(json::parse(tight.err)["error"]["message"].get<std::string>().find("first failing check") != std::string::npos);

    auto relaxed = run("verify --weight " + data("test_weight.json") + " --suite core --tol 1e-300 --tol-map '{\"core\": 1}'");
    CHECK(relaxed.code == 0);

    auto csv = run("verify --weight " + data("lebesgue.json") + " --suite core --nmax 3 --format csv");
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("check,n,j,k,z_re,z_im,samples,residual,tol,pass\n", 0) == 0);
}
