#pragma once

// Configuration ingestion (strict JSON), regime-report serialization, and
// CSV export at full double precision.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forest/analysis.hpp"
#include "forest/model.hpp"
#include "forest/regime.hpp"
#include "forest/sde.hpp"

namespace forest {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ModelParams params{};
    State init{};
    SolverConfig solver{};
    std::uint64_t master_seed = 20140925;
    std::size_t n_paths = 1;
    std::string outputs = ".";
};

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config: missing required key '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError("config: key '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "EulerMaruyama") return Scheme::EulerMaruyama;
    if (name == "Milstein") return Scheme::Milstein;
    if (name == "StrongTaylor15") return Scheme::StrongTaylor15;
    if (name == "DeterministicRK4") return Scheme::DeterministicRK4;
    throw ConfigError("config: key 'scheme' must be one of EulerMaruyama, Milstein, "
                      "StrongTaylor15, DeterministicRK4; got '" + name + "'");
}

inline ClampPolicy parse_clamp(const std::string& name) {
    if (name == "ClampToZero") return ClampPolicy::ClampToZero;
    if (name == "RejectPath") return ClampPolicy::RejectPath;
    throw ConfigError("config: key 'clamp' must be ClampToZero or RejectPath; got '" + name + "'");
}

}  // namespace detail

inline nlohmann::json params_to_json(const ModelParams& p) {
    return {{"rho", p.rho}, {"a", p.a}, {"b", p.b}, {"c", p.c},
            {"f", p.f}, {"h", p.h}, {"sigma", p.sigma}};
}

inline ModelParams params_from_json(const nlohmann::json& j) {
    ModelParams p{};
    p.rho = detail::require_number(j, "rho");
    p.a = detail::require_number(j, "a");
    p.b = detail::require_number(j, "b");
    p.c = detail::require_number(j, "c");
    p.f = detail::require_number(j, "f");
    p.h = detail::require_number(j, "h");
    p.sigma = detail::require_number(j, "sigma");
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return p;
}

// Strict parse: unknown keys are rejected, all invariants enforced here.
inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: document must be a JSON object");

    static const std::vector<std::string> known = {
        "rho", "a", "b", "c", "f", "h", "sigma", "u0", "v0",
        "scheme", "dt", "t_end", "clamp", "n_paths", "master_seed", "out"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const auto& k : known) if (k == key) { ok = true; break; }
        if (!ok) throw ConfigError("config: unknown key '" + key + "'");
    }

    RunConfig cfg;
    cfg.params = params_from_json(j);
    cfg.init.u = detail::require_number(j, "u0");
    cfg.init.v = detail::require_number(j, "v0");
    if (cfg.init.u < 0.0) throw ConfigError("config: key 'u0' must be >= 0");
    if (cfg.init.v < 0.0) throw ConfigError("config: key 'v0' must be >= 0");

    if (j.contains("scheme")) {
        if (!j.at("scheme").is_string()) throw ConfigError("config: key 'scheme' must be a string");
        cfg.solver.scheme = detail::parse_scheme(j.at("scheme").get<std::string>());
    }
    if (j.contains("dt")) cfg.solver.dt = detail::require_number(j, "dt");
    if (j.contains("t_end")) cfg.solver.t_end = detail::require_number(j, "t_end");
    if (j.contains("clamp")) {
        if (!j.at("clamp").is_string()) throw ConfigError("config: key 'clamp' must be a string");
        cfg.solver.clamp = detail::parse_clamp(j.at("clamp").get<std::string>());
    }
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (j.contains("n_paths")) {
        const double n = detail::require_number(j, "n_paths");
        if (n < 1 || n != std::floor(n)) throw ConfigError("config: key 'n_paths' must be a positive integer");
        cfg.n_paths = static_cast<std::size_t>(n);
    }
    if (j.contains("master_seed")) {
        if (!j.at("master_seed").is_number_integer() && !j.at("master_seed").is_number_unsigned())
            throw ConfigError("config: key 'master_seed' must be an integer");
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("out")) {
        if (!j.at("out").is_string()) throw ConfigError("config: key 'out' must be a string");
        cfg.outputs = j.at("out").get<std::string>();
    }
    return cfg;
}

inline nlohmann::json report_to_json(const RegimeReport& r) {
    nlohmann::json sus = {{"holds", r.sustainability.holds}};
    if (r.sustainability.kappa_interval) {
        sus["kappa_lo"] = r.sustainability.kappa_interval->lo;
        sus["kappa_hi"] = r.sustainability.kappa_interval->hi;
    } else {
        sus["kappa_lo"] = nullptr;
        sus["kappa_hi"] = nullptr;
    }
    sus["kappa"] = r.sustainability.kappa_witness
                       ? nlohmann::json(*r.sustainability.kappa_witness) : nlohmann::json(nullptr);
    sus["epsilon"] = r.sustainability.epsilon_witness
                         ? nlohmann::json(*r.sustainability.epsilon_witness) : nlohmann::json(nullptr);

    nlohmann::json out = {
        {"verdict", to_string(r.verdict)},
        {"sustainability", sus},
        {"decline", {{"expectation", r.decline_expectation.fires},
                     {"branch", to_string(r.decline_expectation.branch)},
                     {"h_threshold", r.decline_expectation.h_threshold}}},
        {"hypothesis1", {{"holds", r.hypothesis1.holds},
                         {"inf", r.hypothesis1.inf_value},
                         {"argmin", r.hypothesis1.argmin}}},
        {"hypothesis2", {{"holds", r.hypothesis2.holds},
                         {"sup_f1", r.hypothesis2.interval_empty
                                        ? nlohmann::json(nullptr) : nlohmann::json(r.hypothesis2.sup_f1)},
                         {"inf_f2", r.hypothesis2.interval_empty
                                        ? nlohmann::json(nullptr) : nlohmann::json(r.hypothesis2.inf_f2)}}},
        {"large_noise", r.large_noise}};
    if (r.inconsistent) out["inconsistent"] = true;
    return out;
}

namespace detail {

class CsvFile {
public:
    explicit CsvFile(const std::filesystem::path& path) {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        file_ = std::fopen(path.string().c_str(), "wb");
        if (!file_) throw std::runtime_error("cannot open output file: " + path.string());
    }
    ~CsvFile() { if (file_) std::fclose(file_); }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void header(const std::string& line) { std::fprintf(file_, "%s\n", line.c_str()); }
    void row(std::span<const double> values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            std::fprintf(file_, i + 1 < values.size() ? "%.17g," : "%.17g\n", values[i]);
    }

private:
    std::FILE* file_ = nullptr;
};

}  // namespace detail

inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    detail::CsvFile csv(path);
    csv.header("t,u,v");
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        csv.row(std::array{traj.times[i], traj.states[i].u, traj.states[i].v});
}

inline void write_series_csv(const Series& s, const std::filesystem::path& path,
                             const std::string& value_name = "value") {
    detail::CsvFile csv(path);
    csv.header("t," + value_name);
    for (std::size_t i = 0; i < s.times.size(); ++i)
        csv.row(std::array{s.times[i], s.values[i]});
}

inline void write_ensemble_csv(const EnsembleStats& st, const std::filesystem::path& path) {
    detail::CsvFile csv(path);
    csv.header("t,mean_u,se_u,mean_v,se_v");
    for (std::size_t i = 0; i < st.times.size(); ++i)
        csv.row(std::array{st.times[i], st.mean_u[i], st.se_u[i], st.mean_v[i], st.se_v[i]});
}

inline void write_points_csv(std::span<const State> points, const std::filesystem::path& path) {
    detail::CsvFile csv(path);
    csv.header("u,v");
    for (const auto& s : points) csv.row(std::array{s.u, s.v});
}

inline void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::FILE* file = std::fopen(path.string().c_str(), "wb");
    if (!file) throw std::runtime_error("cannot open output file: " + path.string());
    std::fprintf(file, "axis1_value,axis2_value,verdict,sustainable,kappa_lo,kappa_hi,kappa,"
                       "epsilon,decline_expectation,decline_branch,h_threshold,"
                       "hyp1_holds,hyp1_inf,hyp1_argmin,hyp2_holds,hyp2_sup_f1,hyp2_inf_f2,"
                       "large_noise\n");
    const auto& g = sweep;
    for (std::size_t i = 0; i < g.axis1_values.size(); ++i) {
        for (std::size_t j = 0; j < g.axis2_values.size(); ++j) {
            const RegimeReport& r = g.at(static_cast<int>(i), static_cast<int>(j));
            const auto& s = r.sustainability;
            std::fprintf(file, "%.17g,%.17g,%s,%d,%.17g,%.17g,%.17g,%.17g,%d,%s,%.17g,"
                               "%d,%.17g,%.17g,%d,%.17g,%.17g,%d\n",
                         g.axis1_values[i], g.axis2_values[j], to_string(r.verdict),
                         s.holds ? 1 : 0,
                         s.kappa_interval ? s.kappa_interval->lo : std::nan(""),
                         s.kappa_interval ? s.kappa_interval->hi : std::nan(""),
                         s.kappa_witness ? *s.kappa_witness : std::nan(""),
                         s.epsilon_witness ? *s.epsilon_witness : std::nan(""),
                         r.decline_expectation.fires ? 1 : 0,
                         to_string(r.decline_expectation.branch),
                         r.decline_expectation.h_threshold,
                         r.hypothesis1.holds ? 1 : 0, r.hypothesis1.inf_value,
                         r.hypothesis1.argmin,
                         r.hypothesis2.holds ? 1 : 0, r.hypothesis2.sup_f1,
                         r.hypothesis2.inf_f2,
                         r.large_noise ? 1 : 0);
        }
    }
    std::fclose(file);
}

}  // namespace forest
