// Command-line front end for the annulus plaque solver.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plaque/acceptance.hpp"
#include "plaque/bifurcation.hpp"
#include "plaque/io.hpp"
#include "plaque/version.hpp"

namespace fs = std::filesystem;
using namespace plaque;

namespace {

enum Exit { ok = 0, solver_failure = 1, config_failure = 2, validation_failure = 3 };

struct Options {
    std::string config;
    std::string preset;
    std::optional<int> N;
    std::optional<std::string> scheme;
    std::string out = ".";
    std::string format = "csv";
    std::uint64_t seed = 20240611;
    std::map<std::string, std::optional<double>> overrides;
    int n = 2;
    int m_max = 12;
    std::vector<int> n_list{2, 3};
    std::vector<double> eps_list{1e-2, 5e-3, 2.5e-3};
    int jobs = 1;
};

struct Resolved {
    ModelParams params;
    std::map<std::string, std::string> source;
    int N = 128;
    Scheme scheme = Scheme::uniform_fd2;
    std::string N_source = "default";
    std::string scheme_source = "default";
};

Resolved resolve(const Options& o) {
    Resolved r;
    std::string base = "default";
    if (!o.config.empty() && !o.preset.empty()) throw ConfigError("--config and --preset are mutually exclusive");
    if (!o.preset.empty()) {
        if (o.preset == "ref-a")
            r.params = reference_a();
        else if (o.preset == "ref-b")
            r.params = reference_b();
        else
            throw ConfigError("unknown preset '" + o.preset + "' (expected ref-a or ref-b)");
        base = "preset:" + o.preset;
    } else if (!o.config.empty()) {
        ConfigFile cf = load_config(o.config);
        r.params = cf.params;
        base = "config";
        if (cf.N) {
            r.N = *cf.N;
            r.N_source = "config";
        }
        if (cf.scheme) {
            r.scheme = parse_scheme(*cf.scheme);
            r.scheme_source = "config";
        }
    } else {
        r.params = reference_a();
    }
    for (const auto& f : param_fields) {
        r.source[f.name] = base;
        auto it = o.overrides.find(f.name);
        if (it != o.overrides.end() && it->second) {
            r.params.*(f.member) = *it->second;
            r.source[f.name] = "cli";
        }
    }
    if (o.N) {
        r.N = *o.N;
        r.N_source = "cli";
    }
    if (o.scheme) {
        r.scheme = parse_scheme(*o.scheme);
        r.scheme_source = "cli";
    }
    if (r.N < 16) throw ConfigError("grid too coarse for boundary closures (N=" + std::to_string(r.N) + ")");
    auto v = validate(r.params);
    if (!v.empty()) {
        std::string msg = "invalid parameters:";
        for (const auto& x : v) msg += " " + x.field + "=" + num(x.value) + " (" + x.message + ")";
        throw ConfigError(msg);
    }
    return r;
}

json manifest(const std::string& command, const Options& o, const Resolved& r, const std::vector<std::string>& outputs) {
    SolverOptions so;
    json m;
    m["tool"] = "plaque";
    m["version"] = version;
    m["command"] = command;
    m["params"] = params_json(r.params);
    m["params_hash"] = params_hash(r.params);
    json src;
    for (const auto& f : param_fields) src[f.name] = r.source.at(f.name);
    m["param_sources"] = src;
    m["precedence"] = "cli > config file > built-in REF-A defaults";
    m["grid"] = {{"N", r.N}, {"N_source", r.N_source}, {"scheme", scheme_name(r.scheme)}, {"scheme_source", r.scheme_source}};
    m["tolerances"] = {{"tol_newton", so.tol_newton},
                       {"max_newton", so.max_newton},
                       {"max_halvings", so.max_halvings},
                       {"tol_phi", so.phi_tolerance(r.params.eps)},
                       {"tol_g", tol_g(r.params.eps)}};
    json args;
    if (!o.config.empty()) args["config"] = o.config;
    if (!o.preset.empty()) args["preset"] = o.preset;
    if (command == "mode" || command == "bifurcate") args["n"] = o.n;
    if (command == "bifurcate") args["m_max"] = o.m_max;
    if (command == "sweep" || command == "validate") {
        args["n_list"] = o.n_list;
        args["eps_list"] = o.eps_list;
        args["jobs"] = o.jobs;
    }
    if (command == "validate") args["seed"] = o.seed;
    args["format"] = o.format;
    m["args"] = args;
    m["outputs"] = outputs;
    return m;
}

void write_manifest(const std::string& command, const Options& o, const Resolved& r, const std::vector<std::string>& outputs,
                    const json& extra = json::object()) {
    json m = manifest(command, o, r, outputs);
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_text((fs::path(o.out) / "run.manifest.json").string(), m.dump(2) + "\n");
}

std::string out_path(const Options& o, const std::string& name) { return (fs::path(o.out) / name).string(); }

int run_steady(const Options& o, const Resolved& r) {
    RadialGrid g = build_grid(r.params.eps, r.N, r.scheme);
    SolverOptions so;
    so.scan_phi = true;
    SteadyState s = solve_steady(r.params, g, so);
    if (s.phi_sign_changes > 1)
        std::cerr << "warning: Phi changes sign " << s.phi_sign_changes << " times; reporting the smallest root\n";
    write_text(out_path(o, "steady.csv"), steady_csv(s));
    write_text(out_path(o, "steady.json"), steady_json(s).dump(2) + "\n");
    write_manifest("steady", o, r, {"steady.csv", "steady.json"});
    std::cout << "rho4 = " << num(s.rho4) << "\nJ1 = " << num(s.J1) << "\n";
    return ok;
}

int run_mode(const Options& o, const Resolved& r) {
    if (o.n < 0) throw ConfigError("--n must be nonnegative");
    RadialGrid g = build_grid(r.params.eps, r.N, r.scheme);
    SteadyState s = solve_steady(r.params, g);
    ModeSolution m = solve_mode(s, r.params, o.n);
    json j = mode_json(m);
    Eigen::VectorXd pk = mode_via_kernel(s, r.params, o.n, m);
    j["kernel_path_max_difference"] = (pk - m.p1n).lpNorm<Eigen::Infinity>();
    std::string base = "mode_" + std::to_string(o.n);
    write_text(out_path(o, base + ".csv"), mode_csv(m));
    write_text(out_path(o, base + ".json"), j.dump(2) + "\n");
    write_manifest("mode", o, r, {base + ".csv", base + ".json"});
    std::cout << "p1n'(1-eps) = " << num(m.p1n_prime_inner) << "\nJ2n = " << num(m.J2n) << "\n";
    return ok;
}

int run_bifurcate(const Options& o, const Resolved& r) {
    RadialGrid g = build_grid(r.params.eps, r.N, r.scheme);
    FrechetEvaluator ev(r.params, g);
    BifurcationPoint bp = find_mu_n(ev, o.n);
    auto table = separation_table(ev, bp, o.m_max);
    json j = bifurcation_json(bp);
    json sep = json::array();
    for (const auto& e : table) sep.push_back({{"m", e.m}, {"W", e.W}});
    j["separation"] = sep;
    std::string base = "bifurcation_" + std::to_string(o.n);
    std::string sname = "separation_" + std::to_string(o.n) + ".csv";
    write_text(out_path(o, base + ".json"), j.dump(2) + "\n");
    write_text(out_path(o, sname), separation_csv(table));
    write_manifest("bifurcate", o, r, {base + ".json", sname});
    std::cout << "mu_" << o.n << " = " << num(bp.mu_n) << " (asymptotic " << num(bp.mu_asymptotic) << ", valid "
              << (bp.valid ? "yes" : "no") << ")\n";
    return ok;
}

int run_sweep(const Options& o, const Resolved& r) {
    for (double e : o.eps_list)
        if (!(e > 0.0 && e <= 0.1)) throw ConfigError("eps out of range in --eps-list: " + num(e));
    auto rows = sweep(r.params, o.n_list, o.eps_list, GridSpec{r.N, r.scheme}, o.jobs);
    std::string name = o.format == "json" ? "sweep.json" : "sweep.csv";
    write_text(out_path(o, name), o.format == "json" ? sweep_json(rows).dump(2) + "\n" : sweep_csv(rows));
    write_manifest("sweep", o, r, {name});
    int failed = 0;
    for (const auto& row : rows)
        if (!row.error.empty()) {
            ++failed;
            std::cerr << "row n=" << row.n << " eps=" << num(row.eps) << ": " << row.error << "\n";
        }
    std::cout << rows.size() << " rows, " << failed << " failed\n";
    return ok;
}

int run_validate(const Options& o, const Resolved& r) {
    AcceptanceConfig cfg;
    bool explicit_params = !o.config.empty() || !o.preset.empty();
    for (const auto& f : param_fields) explicit_params = explicit_params || r.source.at(f.name) == "cli";
    if (explicit_params) cfg.bifurcation_params = r.params;
    cfg.N = r.N;
    cfg.scheme = r.scheme;
    cfg.eps_list = o.eps_list;
    cfg.bifurcation_modes = o.n_list;
    cfg.jobs = std::max(1, o.jobs);
    cfg.seed = o.seed;
    auto results = run_acceptance(cfg, &std::cout);
    json arr = json::array();
    std::string csv = "id,name,passed,detail\n";
    bool all = true;
    for (const auto& c : results) {
        all = all && c.passed;
        arr.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        csv += std::to_string(c.id) + "," + csv_field(c.name) + "," + (c.passed ? "true" : "false") + "," +
               csv_field(c.detail) + "\n";
    }
    std::string name = o.format == "json" ? "validation.json" : "validation.csv";
    write_text(out_path(o, name), o.format == "json" ? arr.dump(2) + "\n" : csv);
    json extra;
    extra["steady_params"] = params_json(cfg.steady_params);
    extra["bifurcation_params"] = params_json(cfg.bifurcation_params);
    write_manifest("validate", o, r, {name}, extra);
    std::cout << (all ? "all checks passed" : "validation failed") << "\n";
    return all ? ok : validation_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radially symmetric plaque steady states, mode-n linearization and symmetry-breaking bifurcation points"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    Options o;

    app.add_option("--config", o.config, "key=value parameter file (all parameter keys required)");
    app.add_option("--preset", o.preset, "built-in parameter set: ref-a or ref-b");
    app.add_option("--N", o.N, "grid nodes (default 128)");
    app.add_option("--scheme", o.scheme, "uniform-FD2 or stretched-collocation");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", o.seed, "seed for randomized checks");
    for (const auto& f : param_fields) app.add_option(std::string("--") + f.name, o.overrides[f.name], "override parameter");

    auto* steady = app.add_subcommand("steady", "radial steady state and rho4");
    auto* mode = app.add_subcommand("mode", "linearized mode-n solution");
    mode->add_option("--n", o.n, "mode number");
    auto* bif = app.add_subcommand("bifurcate", "locate mu_n and tabulate mode separation");
    bif->add_option("--n", o.n, "mode number (>= 2)");
    bif->add_option("--m-max", o.m_max, "largest mode in the separation table");
    auto* sw = app.add_subcommand("sweep", "mu_n over lists of modes and annulus widths");
    auto* val = app.add_subcommand("validate", "run the acceptance battery");
    for (auto* s : {sw, val}) {
        s->add_option("--n-list", o.n_list, "modes")->delimiter(',');
        s->add_option("--eps-list", o.eps_list, "annulus widths")->delimiter(',');
        s->add_option("--jobs", o.jobs, "worker threads");
    }
    for (auto* s : {steady, mode, bif, sw, val}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_failure;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        Resolved r = resolve(o);
        fs::create_directories(o.out);
        if (command == "steady") return run_steady(o, r);
        if (command == "mode") return run_mode(o, r);
        if (command == "bifurcate") return run_bifurcate(o, r);
        if (command == "sweep") return run_sweep(o, r);
        return run_validate(o, r);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_failure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_failure;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return solver_failure;
    }
}
