#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "forest/io.hpp"

using namespace forest;
using nlohmann::json;

namespace {

const char* kFig2Doc = R"({"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parse_config: defaults on a minimal document") {
    const RunConfig cfg = parse_config(kFig2Doc);
    CHECK(cfg.params.rho == 5.0);
    CHECK(cfg.params.a == 2.0);
    CHECK(cfg.params.b == 1.0);
    CHECK(cfg.params.c == 2.5);
    CHECK(cfg.params.f == 4.0);
    CHECK(cfg.params.h == 1.0);
    CHECK(cfg.params.sigma == 0.5);
    CHECK(cfg.init.u == 2.0);
    CHECK(cfg.init.v == 1.0);
    CHECK(cfg.solver.scheme == Scheme::StrongTaylor15);
    CHECK(cfg.solver.dt == 1e-3);
    CHECK(cfg.solver.clamp == ClampPolicy::ClampToZero);
    CHECK(cfg.n_paths == 1);
}

TEST_CASE("parse_config: explicit solver settings") {
    const RunConfig cfg = parse_config(R"({"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,
        "sigma":0.5,"u0":2,"v0":1,"scheme":"Milstein","dt":0.01,"t_end":7,
        "clamp":"RejectPath","n_paths":32,"master_seed":42,"out":"results"})");
    CHECK(cfg.solver.scheme == Scheme::Milstein);
    CHECK(cfg.solver.dt == 0.01);
    CHECK(cfg.solver.t_end == 7.0);
    CHECK(cfg.solver.clamp == ClampPolicy::RejectPath);
    CHECK(cfg.n_paths == 32);
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.outputs == "results");
}

TEST_CASE("parse_config: errors name the offending key") {
    auto message = [](const std::string& doc) {
        try {
            parse_config(doc);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"rho":-5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1})")
              .find("rho") != std::string::npos);
    CHECK(message(R"({"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1})")
              .find("rho") != std::string::npos);
    CHECK(message(R"({"rh0":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1})")
              .find("rh0") != std::string::npos);
    CHECK(message(R"({"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":-1,"v0":1})")
              .find("u0") != std::string::npos);
    CHECK(message(R"({"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1,
                     "scheme":"Heun"})").find("scheme") != std::string::npos);
    CHECK(message(R"({"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5,"u0":2,"v0":1,
                     "n_paths":2.5})").find("n_paths") != std::string::npos);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
}

TEST_CASE("report_to_json: schema and values for a sustainable configuration") {
    const ModelParams p = make_params(5, 2, 1, 2.5, 4, 1, 0.5);
    const json j = report_to_json(classify_regime(p, 2.0));
    CHECK(j.at("verdict") == "Sustainable");
    CHECK(j.at("sustainability").at("holds") == true);
    CHECK(j.at("sustainability").at("kappa_lo").get<double>() == doctest::Approx(2.125));
    CHECK(j.at("sustainability").at("kappa_hi").get<double>() == doctest::Approx(10.0 / 2.25));
    CHECK(j.at("sustainability").at("kappa").is_number());
    CHECK(j.at("sustainability").at("epsilon").get<double>() > 0.0);
    CHECK(j.at("decline").at("expectation") == false);
    CHECK(j.at("decline").at("branch") == "none");
    CHECK(j.at("decline").contains("h_threshold"));
    CHECK(j.at("hypothesis1").at("holds") == false);
    CHECK(j.at("hypothesis1").contains("inf"));
    CHECK(j.at("hypothesis1").contains("argmin"));
    CHECK(j.at("hypothesis2").at("holds") == false);
    CHECK(j.at("hypothesis2").at("sup_f1").is_null());  // empty interval
    CHECK(j.at("hypothesis2").at("inf_f2").is_null());
    CHECK(j.at("large_noise") == false);
    CHECK_FALSE(j.contains("inconsistent"));
}

TEST_CASE("report_to_json: declining configuration") {
    const ModelParams p = make_params(7, 3, 4, 5, 6, 2, 4);
    const json j = report_to_json(classify_regime(p, 4.0));
    CHECK(j.at("verdict") == "DeclineAlmostSure");
    CHECK(j.at("sustainability").at("holds") == false);
    CHECK(j.at("sustainability").at("kappa_lo").is_null());
    CHECK(j.at("hypothesis1").at("holds") == true);
    CHECK(j.at("hypothesis2").at("sup_f1").is_number());
    CHECK(j.at("large_noise") == true);
}

TEST_CASE("csv writers: headers, shape, and full double precision") {
    const auto dir = std::filesystem::temp_directory_path() / "forest_io_test";
    std::filesystem::remove_all(dir);

    Trajectory traj;
    traj.times = {0.0, 0.1, 0.2};
    traj.states = {{2.0, 1.0}, {1.5, 1.25}, {1.0 / 3.0, 0.1}};
    const auto tpath = dir / "traj.csv";
    write_trajectory_csv(traj, tpath);
    const std::string text = slurp(tpath);
    CHECK(text.rfind("t,u,v\n", 0) == 0);
    CHECK(text.find("0.33333333333333331") != std::string::npos);

    EnsembleStats st;
    st.times = {0.0, 1.0};
    st.mean_u = {2.0, 1.0};
    st.se_u = {0.0, 0.5};
    st.mean_v = {1.0, 3.0};
    st.se_v = {0.0, 0.25};
    const auto epath = dir / "ens.csv";
    write_ensemble_csv(st, epath);
    CHECK(slurp(epath) == "t,mean_u,se_u,mean_v,se_v\n0,2,0,1,0\n1,1,0.5,3,0.25\n");

    const State pts[] = {{1.0, 2.0}, {3.0, 4.0}};
    const auto ppath = dir / "pts.csv";
    write_points_csv(pts, ppath);
    CHECK(slurp(ppath) == "u,v\n1,2\n3,4\n");

    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep csv: one row per grid cell") {
    const ModelParams p = make_params(5, 2, 1, 2.5, 4, 1, 0.5);
    const SweepResult sw = sweep(p, {"h", 0.5, 4.0, 3}, {"sigma", 0.5, 0.5, 1}, 2.0);
    const auto dir = std::filesystem::temp_directory_path() / "forest_io_test";
    const auto path = dir / "sweep.csv";
    write_sweep_csv(sw, path);
    const std::string text = slurp(path);
    std::size_t lines = 0;
    for (char ch : text) lines += ch == '\n';
    CHECK(lines == 4);  // header + 3x1 grid
    CHECK(text.rfind("axis1_value,axis2_value,verdict,", 0) == 0);
    CHECK(text.find("Sustainable") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("params json round trip") {
    const ModelParams p = make_params(5, 2, 1, 2.5, 4, 1, 0.5);
    const ModelParams q = params_from_json(params_to_json(p));
    CHECK(q.rho == p.rho);
    CHECK(q.sigma == p.sigma);
    CHECK_THROWS_AS(params_from_json(json{{"rho", 5}}), ConfigError);
}
