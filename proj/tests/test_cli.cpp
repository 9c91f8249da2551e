#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "doctest.h"

using namespace maxperiodic;
using namespace maxperiodic::app;
namespace fs = std::filesystem;

namespace {

json base() {
    return json::parse(R"({"version": 1, "branch_points": [-2, -1, 0.5, 2], "divisor": {"source": "solve", "section": 1}})");
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("maxperiodic_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("schema: unknown keys and bad values are rejected") {
        CHECK_NOTHROW(parse_config(base()));
        json j = base();
        j["branch_pionts"] = json::array();
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["mesh"] = {{"h", 0.05}, {"hh", 1}};
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["version"] = 2;
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j.erase("version");
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["tolerances"] = {{"abel", -1e-7}};
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["mesh"] = {{"h", 0.03}};
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["eps0"] = 0;
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["genus"] = 0;
        CHECK_THROWS_AS(parse_config(j), ValidationError);
        j = base();
        j["divisor"] = {{"source", "explicit"}, {"section", 1}};
        CHECK_THROWS_AS(parse_config(j), ValidationError);
    }

    TEST_CASE("config hash is canonical") {
        json a = json::parse(R"({"version": 1, "eps0": 1, "q0": [0, 0, 0]})");
        json b = json::parse(R"({"q0": [0, 0, 0], "eps0": 1, "version": 1})");
        CHECK(config_hash(a) == config_hash(b));
        b["eps0"] = -1;
        CHECK(config_hash(a) != config_hash(b));
        CHECK(config_hash(a).size() == 16);
    }

    TEST_CASE("csv quoting") {
        CHECK(csv_field("plain") == "plain");
        CHECK(csv_field("a,b") == "\"a,b\"");
        CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    }

    TEST_CASE("validate: accepts a good config, rejects sorted/slit violations") {
        json j = base();
        j["output"] = {{"directory", scratch("validate").string()}};
        CHECK(cmd_validate(parse_config(j)).report["valid"] == true);
        j["branch_points"] = {-1, -2, 0.5, 2};
        CHECK_THROWS_AS(cmd_validate(parse_config(j)), ValidationError);
        j["branch_points"] = {-2, -1, 1.5, 2};
        CHECK_THROWS_AS(cmd_validate(parse_config(j)), ValidationError);
        j["branch_points"] = {-2, -1, 0.5, 2};
        j["genus"] = 2;
        CHECK_THROWS_AS(cmd_validate(parse_config(j)), ValidationError);
    }

    TEST_CASE("periods: CSV carries the hash and imaginary periods") {
        json j = base();
        fs::path out = scratch("periods");
        j["output"] = {{"directory", out.string()}};
        Config cfg = parse_config(j);
        Outcome o = cmd_periods(cfg);
        CHECK(o.code == 0);
        std::string csv = slurp(out / "periods.csv");
        CHECK(csv.rfind("config_hash,", 0) == 0);
        CHECK(csv.find("\r\n" + cfg.hash + ",eta1,") != std::string::npos);
        CHECK(o.report["Pi"][0][0][0].get<double>() == 0.0);
    }

    TEST_CASE("spinors: four sections in a reproducible order") {
        json j = base();
        j["output"] = {{"directory", scratch("spinors").string()}};
        Config cfg = parse_config(j);
        Outcome a = cmd_spinors(cfg), b = cmd_spinors(cfg);
        CHECK(a.report["sections"].size() == 4);
        CHECK(a.report.dump() == b.report.dump());
    }

    TEST_CASE("build: replicas scale the OBJ vertex count and the report is deterministic") {
        auto count = [](const std::string& obj) {
            size_t v = 0, f = 0;
            std::istringstream is(obj);
            for (std::string line; std::getline(is, line);) {
                if (line.rfind("v ", 0) == 0) ++v;
                if (line.rfind("f ", 0) == 0) ++f;
            }
            return std::pair{v, f};
        };
        json j = base();
        j["mesh"] = {{"h", 0.1}, {"refinements", 2}};
        fs::path o1 = scratch("build1"), o2 = scratch("build2");
        j["output"] = {{"directory", o1.string()}, {"replicas", 1}};
        Outcome a = cmd_build(parse_config(j));
        j["output"] = {{"directory", o2.string()}, {"replicas", 3}};
        Outcome b = cmd_build(parse_config(j));
        auto [v1, f1] = count(slurp(o1 / "surface.obj"));
        auto [v3, f3] = count(slurp(o2 / "surface.obj"));
        CHECK(v3 == 3 * v1);
        CHECK(f3 > 2 * f1);
        CHECK(a.report["s2"].size() == 7);
        json ra = a.report, rb = b.report;
        for (json* r : {&ra, &rb}) {
            r->erase("timing");
            r->erase("config_hash");
        }
        CHECK(ra.dump() == rb.dump());
        CHECK(slurp(o1 / "flux.csv").find(a.report["config_hash"].get<std::string>()) != std::string::npos);
    }

    TEST_CASE("build: e1 height normalization") {
        json j = base();
        j["mesh"] = {{"h", 0.1}, {"refinements", 2}};
        j["normalize_e1_height"] = true;
        j["output"] = {{"directory", scratch("norm").string()}};
        Outcome o = cmd_build(parse_config(j));
        CHECK(std::abs(o.report["ends"]["E1"]["height"].get<double>()) < 1e-6);
        CHECK(o.report["normalization"]["e1_height"] == true);
    }

    TEST_CASE("build: explicit non-spinor divisor is an obstruction") {
        json j = base();
        j["divisor"] = {{"source", "explicit"}, {"points", {{0.3, 0.7}}}};
        j["output"] = {{"directory", scratch("obstruction").string()}};
        try {
            cmd_build(parse_config(j));
            FAIL("expected an obstruction");
        } catch (const ObstructionError& e) {
            CHECK(e.residual > 1e-3);
        }
    }

    TEST_CASE("exit codes from the front end") {
        fs::path dir = scratch("exit");
        fs::create_directories(dir);
        auto write = [&](const std::string& name, const json& j) {
            fs::path p = dir / name;
            std::ofstream(p) << j.dump();
            return p.string();
        };
        std::ostringstream log;
        json bad = base();
        bad["branch_points"] = {-2, -1, 1.5, 2};
        CHECK(main_entry("validate", write("bad.json", bad), (dir / "o1").string(), std::nullopt, false, log) == 2);
        json spin = base();
        spin["divisor"] = {{"source", "explicit"}, {"points", {{0.3, 0.7}}}};
        CHECK(main_entry("build", write("spin.json", spin), (dir / "o2").string(), std::nullopt, false, log) == 3);
        json err = json::parse(slurp(dir / "o2" / "error.json"));
        CHECK(err["exit_code"] == 3);
        CHECK(err["residual"].get<double>() > 0);
        CHECK(main_entry("validate", (dir / "missing.json").string(), (dir / "o3").string(), std::nullopt, false, log) == 2);
        CHECK(main_entry("validate", write("ok.json", base()), (dir / "o4").string(), std::nullopt, false, log) == 0);
    }

    TEST_CASE("moduli scan flags a degenerate grid point without failing") {
        json j = base();
        j["moduli_scan"] = {{"points", {{{"end_point", {0.0, 0.0}}}, {{"section", 0}}}}};
        fs::path out = scratch("scan");
        j["output"] = {{"directory", out.string()}};
        Outcome o = cmd_moduli_scan(parse_config(j));
        CHECK(o.report["points"][0]["status"] == "ok");
        CHECK(o.report["points"][0]["rank"] == 7);
        CHECK(o.report["points"][1]["status"] == "degenerate");
        CHECK(o.code == 0);
        CHECK(slurp(out / "moduli_scan.csv").find("degenerate") != std::string::npos);
    }
}
