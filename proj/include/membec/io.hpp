#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "membec/coherent.hpp"
#include "membec/constants.hpp"
#include "membec/grid.hpp"
#include "membec/schedule.hpp"
#include "membec/thermal.hpp"

namespace membec::io {

using nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string outcome_token(int g) {
    switch (g) {
        case 1: return "p1";
        case 0: return "z0";
        case -1: return "m1";
    }
    throw std::invalid_argument("outcome label must be -1, 0 or +1");
}

inline std::string sequence_token(const std::vector<int>& outcomes) {
    if (outcomes.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (i) s += '-';
        s += outcome_token(outcomes[i]);
    }
    return s;
}

// Shortest %.17g rendering: full double round trip, locale-independent here
// because the CLI never touches the global locale.
inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct ScanConfig {
    int outcome = 0;
    double tmin_pi = 0.4;
    double tmax_pi = 2.2;
    double step_pi = 0.02;
    int ngrid = 241;
};

struct RunConfig {
    ExperimentParams params;
    std::optional<double> A_over_xzp;          // backaction override, units of x_zp
    std::optional<double> nbar_override;       // thermal occupation override
    std::optional<double> OmL_over_omega;      // Larmor frequency override, units of omega_m
    std::vector<double> times_s;               // empty when the schedule was given as angles
    std::vector<double> thetas;
    std::vector<int> outcomes;
    std::string initial_type = "thermal";
    double a0 = 0, b0 = 0;
    GridSpec grid;
    bool has_grid = false;
    ScanConfig scan;
    std::vector<double> sweep;
    int oracle_n_max = 0;
    int path_cap = default_path_cap;
    std::string raw;  // exact file bytes, hashed into output names
};

namespace detail {

inline const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument(std::string("missing required field '") + key + "' in " + where);
    return *it;
}

inline double number(const json& j, const char* key, const char* where) {
    const json& v = require(j, key, where);
    if (!v.is_number())
        throw std::invalid_argument(std::string("field '") + key + "' in " + where + " must be a number");
    return v.get<double>();
}

inline int outcome_label(const json& v) {
    if (!v.is_number_integer()) throw std::invalid_argument("outcome labels must be integers");
    int g = v.get<int>();
    if (g < -1 || g > 1) throw std::invalid_argument("outcome labels must be -1, 0 or +1");
    return g;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    const json& p = detail::require(j, "params", "config");
    cfg.params.omega_m = detail::number(p, "omega_m", "params");
    cfg.params.mass = detail::number(p, "mass", "params");
    cfg.params.mu_m = detail::number(p, "mu_m", "params");
    cfg.params.temperature = detail::number(p, "temperature", "params");
    cfg.params.B0 = detail::number(p, "B0", "params");
    cfg.params.x0 = detail::number(p, "x0", "params");
    cfg.params.N_atoms = detail::number(p, "N_atoms", "params");
    cfg.params.g_F = detail::number(p, "g_F", "params");
    cfg.params.validate();

    if (auto it = j.find("overrides"); it != j.end()) {
        const json& o = *it;
        if (o.contains("A_over_xzp")) cfg.A_over_xzp = detail::number(o, "A_over_xzp", "overrides");
        if (o.contains("nbar")) {
            cfg.nbar_override = detail::number(o, "nbar", "overrides");
            if (*cfg.nbar_override < 0) throw std::invalid_argument("nbar override must be >= 0");
        }
        if (o.contains("OmegaL0_over_omega"))
            cfg.OmL_over_omega = detail::number(o, "OmegaL0_over_omega", "overrides");
    }

    if (auto it = j.find("schedule"); it != j.end()) {
        const json& s = *it;
        const json& out = detail::require(s, "outcomes", "schedule");
        if (!out.is_array()) throw std::invalid_argument("schedule.outcomes must be an array");
        for (const auto& v : out) cfg.outcomes.push_back(detail::outcome_label(v));
        bool has_times = s.contains("times"), has_thetas = s.contains("thetas");
        if (has_times == has_thetas)
            throw std::invalid_argument("schedule needs exactly one of 'times' (s) or 'thetas'");
        const json& iv = has_times ? s["times"] : s["thetas"];
        if (!iv.is_array()) throw std::invalid_argument("schedule intervals must be an array");
        for (const auto& v : iv) {
            if (!v.is_number()) throw std::invalid_argument("schedule intervals must be numbers");
            double t = v.get<double>();
            if (!(t > 0) || !std::isfinite(t))
                throw std::invalid_argument("schedule intervals must be positive and finite");
            if (has_times) {
                cfg.times_s.push_back(t);
                cfg.thetas.push_back(cfg.params.omega_m * t);
            } else {
                cfg.thetas.push_back(t);
            }
        }
        if (cfg.thetas.size() != cfg.outcomes.size())
            throw std::invalid_argument("schedule needs one outcome per interval");
    }

    if (auto it = j.find("initial"); it != j.end()) {
        const json& s = *it;
        cfg.initial_type = detail::require(s, "type", "initial").get<std::string>();
        if (cfg.initial_type != "thermal" && cfg.initial_type != "coherent")
            throw std::invalid_argument("initial.type must be 'thermal' or 'coherent'");
        if (cfg.initial_type == "coherent") {
            cfg.a0 = detail::number(s, "a0", "initial");
            cfg.b0 = detail::number(s, "b0", "initial");
        }
    }

    if (auto it = j.find("grid"); it != j.end()) {
        const json& g = *it;
        cfg.has_grid = true;
        if (g.contains("nu")) cfg.grid.nu = g["nu"].get<int>();
        if (g.contains("nv")) cfg.grid.nv = g["nv"].get<int>();
        if (g.contains("pad")) cfg.grid.pad_widths = detail::number(g, "pad", "grid");
        if (cfg.grid.nu < 2 || cfg.grid.nv < 2)
            throw std::invalid_argument("grid must have at least 2 points per axis");
        if (g.contains("range")) {
            const json& r = g["range"];
            if (!r.is_array() || r.size() != 4)
                throw std::invalid_argument("grid.range must be [umin, umax, vmin, vmax]");
            cfg.grid.has_range = true;
            cfg.grid.umin = r[0].get<double>();
            cfg.grid.umax = r[1].get<double>();
            cfg.grid.vmin = r[2].get<double>();
            cfg.grid.vmax = r[3].get<double>();
            if (!(cfg.grid.umin < cfg.grid.umax) || !(cfg.grid.vmin < cfg.grid.vmax))
                throw std::invalid_argument("grid.range must be ordered");
        }
    }

    if (auto it = j.find("scan"); it != j.end()) {
        const json& s = *it;
        if (s.contains("outcome")) cfg.scan.outcome = detail::outcome_label(s["outcome"]);
        if (s.contains("tmin_pi")) cfg.scan.tmin_pi = detail::number(s, "tmin_pi", "scan");
        if (s.contains("tmax_pi")) cfg.scan.tmax_pi = detail::number(s, "tmax_pi", "scan");
        if (s.contains("step_pi")) cfg.scan.step_pi = detail::number(s, "step_pi", "scan");
        if (s.contains("ngrid")) cfg.scan.ngrid = s["ngrid"].get<int>();
        if (!(cfg.scan.tmin_pi > 0) || !(cfg.scan.tmax_pi >= cfg.scan.tmin_pi) ||
            !(cfg.scan.step_pi > 0) || cfg.scan.ngrid < 2)
            throw std::invalid_argument("scan range must be positive and ordered");
    }

    if (auto it = j.find("sweep"); it != j.end()) {
        if (!it->is_array()) throw std::invalid_argument("sweep must be an array of multipliers");
        for (const auto& v : *it) {
            double m = v.get<double>();
            if (!(m > 0)) throw std::invalid_argument("sweep multipliers must be positive");
            cfg.sweep.push_back(m);
        }
    }

    if (auto it = j.find("oracle"); it != j.end()) {
        if (it->contains("n_max")) cfg.oracle_n_max = (*it)["n_max"].get<int>();
        if (cfg.oracle_n_max < 0) throw std::invalid_argument("oracle.n_max must be >= 0");
    }

    if (auto it = j.find("path_cap"); it != j.end()) {
        cfg.path_cap = it->get<int>();
        if (cfg.path_cap < 1) throw std::invalid_argument("path_cap must be >= 1");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string raw = ss.str();
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        cfg = parse_config(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config schema violation: ") + e.what());
    }
    cfg.raw = std::move(raw);
    return cfg;
}

// Derived quantities with the scaled-instance overrides applied. Overrides
// replace the geometric values; everything downstream of them is recomputed
// through the same expressions as the primary derivation.
inline DerivedParams effective_derived(const PhysicalConstants& c, const RunConfig& cfg) {
    DerivedParams d = derive_params(c, cfg.params);
    if (cfg.A_over_xzp) {
        d.A = *cfg.A_over_xzp * d.x_zp;
        d.A_sa = d.A / cfg.params.N_atoms;
        d.delta_Omega = cfg.params.mass * cfg.params.omega_m * cfg.params.omega_m * d.A * d.A /
                        (2 * c.hbar);
    }
    if (cfg.nbar_override) {
        d.nbar = *cfg.nbar_override;
        d.eta = d.nbar == 0 ? std::numeric_limits<double>::infinity()
                            : 0.5 * std::log1p(1.0 / d.nbar);
    }
    if (cfg.OmL_over_omega) d.Omega_L0 = *cfg.OmL_over_omega * cfg.params.omega_m;
    return d;
}

inline json params_json(const ExperimentParams& e) {
    return json{{"omega_m", e.omega_m}, {"mass", e.mass},       {"mu_m", e.mu_m},
                {"temperature", e.temperature}, {"B0", e.B0},   {"x0", e.x0},
                {"N_atoms", e.N_atoms}, {"g_F", e.g_F}};
}

inline json overrides_json(const RunConfig& cfg) {
    json o = json::object();
    if (cfg.A_over_xzp) o["A_over_xzp"] = *cfg.A_over_xzp;
    if (cfg.nbar_override) o["nbar"] = *cfg.nbar_override;
    if (cfg.OmL_over_omega) o["OmegaL0_over_omega"] = *cfg.OmL_over_omega;
    return o;
}

inline json derived_json(const DerivedParams& d) {
    json j{{"x_zp", d.x_zp},
           {"B_c", d.B_c},
           {"B_vprime", d.B_vprime},
           {"A_sa", d.A_sa},
           {"A", d.A},
           {"Omega_L0", d.Omega_L0},
           {"delta_Omega", d.delta_Omega},
           {"nbar", d.nbar},
           {"A_tilde", d.A_tilde()},
           {"OmegaL0_over_omega", d.OmL_tilde()},
           {"visibility_ratio", visibility_ratio(d)}};
    j["eta"] = d.zero_temperature() ? json("inf") : json(d.eta);
    return j;
}

inline json schedule_json(const RunConfig& cfg) {
    // Keep exactly one of times/thetas as the primary key so the summary can
    // be fed back through parse_config unchanged.
    json s{{"outcomes", cfg.outcomes}};
    if (!cfg.times_s.empty()) {
        s["times"] = cfg.times_s;
        s["thetas_effective"] = cfg.thetas;
    } else {
        s["thetas"] = cfg.thetas;
    }
    return s;
}

// Summary skeleton shared by all modes. "params" and "overrides" round-trip
// through parse_config so a summary is itself a valid config document.
inline json summary_base(const std::string& mode, const RunConfig& cfg, const DerivedParams& d,
                         bool deterministic) {
    json j{{"mode", mode},
           {"config_hash", hash_hex(cfg.raw)},
           {"deterministic", deterministic},
           {"params", params_json(cfg.params)},
           {"derived", derived_json(d)}};
    json o = overrides_json(cfg);
    if (!o.empty()) j["overrides"] = o;
    if (!cfg.thetas.empty()) j["schedule"] = schedule_json(cfg);
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

// Phase-space grid as CSV in SI units (x in m, p in kg m/s, w in 1/(J s)).
// Outer loop over x so each block of nv rows shares one x value.
inline std::string wigner_csv(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const Eigen::MatrixXd& w, const DerivedParams& d,
                              const PhysicalConstants& c = {}) {
    double p_zp = d.mass * d.omega_m * d.x_zp;
    double wscale = 2.0 / c.hbar;
    std::string s = "x,p,w\n";
    s.reserve(s.size() + static_cast<std::size_t>(u.size()) * v.size() * 72);
    for (Eigen::Index i = 0; i < u.size(); ++i)
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            s += g17(u[i] * d.x_zp);
            s += ',';
            s += g17(v[j] * p_zp);
            s += ',';
            s += g17(w(i, j) * wscale);
            s += '\n';
        }
    return s;
}

inline std::string functionals_csv(const std::vector<double>& thetas) {
    std::string s = "path,X,P,phi\n";
    for (const auto& path : enumerate_paths(thetas.size())) {
        auto f = path_functionals(thetas, path);
        std::string tok;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) tok += '-';
            tok += outcome_token(path[i]);
        }
        s += tok + ',' + g17(f.X) + ',' + g17(f.P) + ',' + g17(f.phi) + '\n';
    }
    return s;
}

inline std::string branches_csv(const std::vector<CoherentBranch>& branches) {
    std::string s = "path,re_amp,im_amp,a,b,Theta\n";
    for (const auto& br : branches) {
        std::string tok;
        for (std::size_t i = 0; i < br.path.size(); ++i) {
            if (i) tok += '-';
            tok += outcome_token(br.path[i]);
        }
        s += tok + ',' + g17(br.amp.real()) + ',' + g17(br.amp.imag()) + ',' + g17(br.a) + ',' +
             g17(br.b) + ',' + g17(br.Theta) + '\n';
    }
    return s;
}

}  // namespace membec::io
