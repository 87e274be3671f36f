#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plaque/bifurcation.hpp"
#include "plaque/model.hpp"
#include "plaque/modes.hpp"
#include "plaque/steady.hpp"

namespace plaque {

using json = nlohmann::ordered_json;

/// Malformed or incomplete configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text that reads back to the same double.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& text, const std::string& what) {
    const char* b = text.c_str();
    char* end = nullptr;
    double v = std::strtod(b, &end);
    if (end == b || *end != '\0' || !std::isfinite(v)) throw ConfigError("bad numeric value '" + text + "' for " + what);
    return v;
}

inline int parse_int(const std::string& text, const std::string& what) {
    const char* b = text.c_str();
    char* end = nullptr;
    long v = std::strtol(b, &end, 10);
    if (end == b || *end != '\0') throw ConfigError("bad integer value '" + text + "' for " + what);
    return static_cast<int>(v);
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Contents of a key=value parameter file.
struct ConfigFile {
    ModelParams params;
    std::optional<int> N;
    std::optional<std::string> scheme;
};

/// Parses key=value lines; '#' starts a comment. All parameter keys are required.
inline ConfigFile parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    ConfigFile cfg;
    for (const auto& f : param_fields) {
        auto it = kv.find(f.name);
        if (it == kv.end()) throw ConfigError(std::string("missing required key '") + f.name + "'");
        cfg.params.*(f.member) = parse_double(it->second, f.name);
        kv.erase(it);
    }
    if (auto it = kv.find("N"); it != kv.end()) {
        cfg.N = parse_int(it->second, "N");
        kv.erase(it);
    }
    if (auto it = kv.find("scheme"); it != kv.end()) {
        cfg.scheme = it->second;
        kv.erase(it);
    }
    if (!kv.empty()) throw ConfigError("unknown key '" + kv.begin()->first + "'");
    return cfg;
}

inline ConfigFile load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

inline std::string format_config(const ModelParams& p) {
    std::string out;
    for (const auto& f : param_fields) out += std::string(f.name) + " = " + num(p.*(f.member)) + "\n";
    return out;
}

/// FNV-1a over the canonical key=value listing of all parameters.
inline std::string params_hash(const ModelParams& p) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : format_config(p)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json params_json(const ModelParams& p) {
    json j;
    for (const auto& f : param_fields) j[f.name] = p.*(f.member);
    j["L0"] = p.L0();
    return j;
}

inline std::string steady_csv(const SteadyState& s) {
    std::string out = "# params_hash=" + params_hash(s.params) + ",rho4=" + num(s.rho4) + ",J1=" + num(s.J1) + "\n";
    out += "r,Lstar,Hstar,Fstar,pstar\n";
    for (int i = 0; i < s.grid.N; ++i)
        out += num(s.grid.r(i)) + "," + num(s.Lstar(i)) + "," + num(s.Hstar(i)) + "," + num(s.Fstar(i)) + "," +
               num(s.pstar(i)) + "\n";
    return out;
}

inline json steady_json(const SteadyState& s) {
    auto ac = asymptotic_coefficients(s.params);
    json j;
    j["params_hash"] = params_hash(s.params);
    j["N"] = s.grid.N;
    j["scheme"] = scheme_name(s.grid.scheme);
    j["rho4"] = s.rho4;
    j["rho4_leading"] = ac.rho4_leading;
    j["mu_c"] = ac.mu_c;
    j["residual_norm"] = s.residual_norm;
    j["phi_residual"] = s.phi_residual;
    j["p2_inner"] = s.p2_inner;
    j["J1"] = s.J1;
    j["deriv_max"] = s.deriv_max;
    j["pprime_inner"] = s.pprime_inner;
    j["box_bounds"] = box_bounds_hold(s, s.params);
    j["phi_sign_changes"] = s.phi_sign_changes;
    j["newton_history"] = s.newton_history;
    return j;
}

inline std::string mode_csv(const ModeSolution& m) {
    std::string out =
        "# n=" + std::to_string(m.n) + ",J2n=" + num(m.J2n) + ",p1n_prime_inner=" + num(m.p1n_prime_inner) + "\n";
    out += "r,L1n,H1n,F1n,p1n\n";
    for (Eigen::Index i = 0; i < m.r.size(); ++i)
        out += num(m.r(i)) + "," + num(m.L1n(i)) + "," + num(m.H1n(i)) + "," + num(m.F1n(i)) + "," + num(m.p1n(i)) +
               "\n";
    return out;
}

inline json mode_json(const ModeSolution& m) {
    json j;
    j["n"] = m.n;
    j["bdata_L"] = m.bdata_L;
    j["bdata_H"] = m.bdata_H;
    j["bdata_F"] = m.bdata_F;
    j["G"] = m.G;
    j["p1n_prime_inner"] = m.p1n_prime_inner;
    j["J2n"] = m.J2n;
    return j;
}

inline json bifurcation_json(const BifurcationPoint& b) {
    json j;
    j["n"] = b.n;
    j["mu_n"] = b.mu_n;
    j["mu_asymptotic"] = b.mu_asymptotic;
    j["deviation"] = b.deviation;
    j["valid"] = b.valid;
    j["rho4_at_mu_n"] = b.rho4_at_mu_n;
    j["g_bracket"] = json::array({json::array({b.g_bracket.first.first, b.g_bracket.first.second}),
                                  json::array({b.g_bracket.second.first, b.g_bracket.second.second})});
    j["g_at_root"] = b.g_at_root;
    j["dg_dmu"] = b.dg_dmu;
    j["transversality_norm"] = b.transversality_norm;
    j["J1"] = b.J1;
    j["J2n"] = b.J2n;
    j["box_bounds"] = b.box_ok;
    return j;
}

inline std::string separation_csv(const std::vector<SeparationEntry>& t) {
    std::string out = "m,W\n";
    for (const auto& e : t) out += std::to_string(e.m) + "," + num(e.W) + "\n";
    return out;
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{"n",  "eps", "mu_n", "mu_asymptotic", "deviation", "deviation_scaled",
                                               "J1", "J2n", "transversality_norm", "rho4", "valid", "box_ok", "error"};
    return cols;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return out + "\"";
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out;
    const auto& cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + "," + num(r.eps) + "," + num(r.mu_n) + "," + num(r.mu_asymptotic) + "," +
               num(r.deviation) + "," + num(r.deviation_scaled) + "," + num(r.J1) + "," + num(r.J2n) + "," +
               num(r.transversality_norm) + "," + num(r.rho4) + "," + (r.valid ? "true" : "false") + "," +
               (r.box_ok ? "true" : "false") + "," + csv_field(r.error) + "\n";
    }
    return out;
}

inline json sweep_json(const std::vector<SweepRow>& rows) {
    json arr = json::array();
    auto val = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    for (const auto& r : rows) {
        json j;
        j["n"] = r.n;
        j["eps"] = r.eps;
        j["mu_n"] = val(r.mu_n);
        j["mu_asymptotic"] = val(r.mu_asymptotic);
        j["deviation"] = val(r.deviation);
        j["deviation_scaled"] = val(r.deviation_scaled);
        j["J1"] = val(r.J1);
        j["J2n"] = val(r.J2n);
        j["transversality_norm"] = val(r.transversality_norm);
        j["rho4"] = val(r.rho4);
        j["valid"] = r.valid;
        j["box_ok"] = r.box_ok;
        j["error"] = r.error;
        arr.push_back(j);
    }
    return arr;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

} // namespace plaque
