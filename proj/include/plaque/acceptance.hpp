#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "plaque/bifurcation.hpp"
#include "plaque/io.hpp"
#include "plaque/kernel.hpp"
#include "plaque/modes.hpp"
#include "plaque/steady.hpp"

namespace plaque {

struct AcceptanceConfig {
    ModelParams steady_params = reference_a();
    ModelParams bifurcation_params = reference_b();
    int N = 128;
    Scheme scheme = Scheme::uniform_fd2;
    std::vector<double> eps_list{1e-2, 5e-3, 2.5e-3};
    std::vector<int> bifurcation_modes{2, 3};
    int max_mode = 5;
    int separation_m_max = 12;
    int kernel_cases = 128;
    int jobs = 2;
    std::uint64_t seed = 20240611;
};

struct CriterionResult {
    int id;
    std::string name;
    bool passed;
    std::string detail;
};

namespace detail {

/// Finite, and no value at a smaller eps exceeds twice the value at the largest eps.
inline bool bounded_across(const std::vector<double>& v, std::string& why) {
    for (double x : v)
        if (!std::isfinite(x)) {
            why = "non-finite value";
            return false;
        }
    if (v.empty()) {
        why = "no values";
        return false;
    }
    double ref = v.front();
    double worst = *std::max_element(v.begin(), v.end());
    if (worst > 2.0 * ref + 1e-12) {
        why = "growth " + detail::fmt(worst / ref) + "x over the sweep";
        return false;
    }
    return true;
}

inline std::string list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + detail::fmt(v[i]);
    return out + "]";
}

inline double max_deviation_from_expansion(const SteadyState& s, const ModelParams& p) {
    auto ac = asymptotic_coefficients(p);
    auto k = leading_constants(p);
    double d = (s.Lstar.array() - (k[0] + p.eps * ac.Lstar1)).abs().maxCoeff();
    d = std::max(d, (s.Hstar.array() - (k[1] + p.eps * ac.Hstar1)).abs().maxCoeff());
    d = std::max(d, (s.Fstar.array() - (k[2] + p.eps * ac.Fstar1)).abs().maxCoeff());
    return d;
}

} // namespace detail

/// Runs every acceptance criterion; one line per criterion goes to `log` when given.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceConfig& cfg, std::ostream* log = nullptr) {
    std::vector<CriterionResult> results;
    auto report = [&](int id, const std::string& name, bool ok, const std::string& detail) {
        results.push_back({id, name, ok, detail});
        if (log) *log << (ok ? "[PASS] " : "[FAIL] ") << "C" << id << " " << name << ": " << detail << std::endl;
    };
    auto guarded = [&](int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
        try {
            auto [ok, detail] = body();
            report(id, name, ok, detail);
        } catch (const std::exception& e) {
            report(id, name, false, std::string("exception: ") + e.what());
        }
    };

    GridSpec gs{cfg.N, cfg.scheme};
    bool box_ok = true;
    int box_count = 0;
    auto note_box = [&](const SteadyState& s) {
        box_ok = box_ok && box_bounds_hold(s, s.params);
        ++box_count;
    };

    struct SweepState {
        ModelParams params;
        SteadyState state;
    };
    std::vector<SweepState> steady_a, steady_b;
    auto steady_sweep = [&](const ModelParams& base, std::vector<SweepState>& out) {
        out.clear();
        for (double eps : cfg.eps_list) {
            ModelParams p = base;
            p.eps = eps;
            RadialGrid g = build_grid(eps, cfg.N, cfg.scheme);
            SteadyState s = solve_steady(p, g);
            note_box(s);
            out.push_back({p, std::move(s)});
        }
    };

    // Criterion 1 and 9 share the bifurcation sweep.
    std::vector<SweepRow> rows;
    std::string sweep_error;
    try {
        rows = sweep(cfg.bifurcation_params, cfg.bifurcation_modes, cfg.eps_list, gs, cfg.jobs);
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    auto rows_for = [&](int n) {
        std::vector<SweepRow> out;
        for (const auto& r : rows)
            if (r.n == n) out.push_back(r);
        return out;
    };

    guarded(1, "bifurcation asymptotics", [&]() -> std::pair<bool, std::string> {
        if (!sweep_error.empty()) return {false, sweep_error};
        bool ok = true;
        std::string detail;
        for (int n : cfg.bifurcation_modes) {
            auto rs = rows_for(n);
            std::vector<double> scaled, ratios;
            for (const auto& r : rs) {
                if (!r.error.empty()) return {false, "n=" + std::to_string(n) + " eps=" + detail::fmt(r.eps) + ": " + r.error};
                ok = ok && r.valid;
                scaled.push_back(r.deviation_scaled);
            }
            for (std::size_t i = 1; i < rs.size(); ++i) {
                double q = rs[i - 1].deviation / rs[i].deviation;
                ratios.push_back(q);
                ok = ok && q >= 1.5 && q <= 2.6;
            }
            std::string why;
            ok = detail::bounded_across(scaled, why) && ok;
            detail += "n=" + std::to_string(n) + " dev/(n^5 eps)=" + detail::list(scaled) + " halving ratios=" +
                      detail::list(ratios) + (why.empty() ? "" : " " + why) + "; ";
        }
        return {ok, detail};
    });

    guarded(2, "steady expansions", [&]() -> std::pair<bool, std::string> {
        steady_sweep(cfg.steady_params, steady_a);
        std::vector<double> dev, C, orders;
        for (const auto& s : steady_a) {
            double d = detail::max_deviation_from_expansion(s.state, s.params);
            dev.push_back(d);
            C.push_back(d / (s.params.eps * s.params.eps));
        }
        bool ok = true;
        for (std::size_t i = 1; i < dev.size(); ++i) {
            double o = std::log2(dev[i - 1] / dev[i]) / std::log2(cfg.eps_list[i - 1] / cfg.eps_list[i]);
            orders.push_back(o);
            ok = ok && o >= 1.7;
        }
        std::string why;
        ok = detail::bounded_across(C, why) && ok;
        return {ok, "dev/eps^2=" + detail::list(C) + " observed orders=" + detail::list(orders) + " " + why};
    });

    guarded(3, "rho4 law", [&]() -> std::pair<bool, std::string> {
        steady_sweep(cfg.bifurcation_params, steady_b);
        std::vector<double> C;
        for (const auto& s : steady_b) {
            auto ac = asymptotic_coefficients(s.params);
            C.push_back(std::abs(s.state.rho4 - ac.rho4_leading) / s.params.eps);
        }
        std::string why;
        bool ok = detail::bounded_across(C, why);
        ModelParams p = cfg.bifurcation_params;
        p.eps = cfg.eps_list.front();
        RadialGrid g = build_grid(p.eps, cfg.N, cfg.scheme);
        double mc = mu_c(p), span = p.mu - mc;
        std::vector<double> rho;
        for (int j = 0; j < 5; ++j) {
            ModelParams q = p;
            q.mu = mc + span * (0.5 + 0.25 * j);
            SteadyState s = solve_steady(q, g);
            note_box(s);
            rho.push_back(s.rho4);
        }
        bool mono = true;
        for (std::size_t i = 1; i < rho.size(); ++i) mono = mono && rho[i] > rho[i - 1];
        return {ok && mono, "|rho4-lead|/eps=" + detail::list(C) + " rho4 at 5 increasing mu=" + detail::list(rho) +
                                (mono ? "" : " not increasing") + " " + why};
    });

    guarded(4, "J1 boundedness", [&]() -> std::pair<bool, std::string> {
        bool ok = true;
        std::string out;
        for (auto* set : {&steady_a, &steady_b}) {
            std::vector<double> J, orders;
            for (const auto& s : *set) J.push_back(std::abs(s.state.J1));
            for (std::size_t i = 1; i < set->size(); ++i) {
                double o = std::log2(std::abs((*set)[i - 1].state.p2_inner / (*set)[i].state.p2_inner)) /
                           std::log2(cfg.eps_list[i - 1] / cfg.eps_list[i]);
                orders.push_back(o);
                ok = ok && o >= 1.7;
            }
            std::string why;
            ok = detail::bounded_across(J, why) && ok;
            out += "|J1|=" + detail::list(J) + " p'' orders=" + detail::list(orders) + " " + why + "; ";
        }
        return {ok, out};
    });

    guarded(5, "sharp mode estimate", [&]() -> std::pair<bool, std::string> {
        bool ok = true;
        std::string out;
        for (auto* set : {&steady_a, &steady_b}) {
            std::vector<double> C;
            for (const auto& s : *set) {
                double worst = 0.0;
                for (int n = 0; n <= cfg.max_mode; ++n) {
                    ModeSolution m = solve_mode(s.state, s.params, n);
                    worst = std::max(worst, std::abs(m.J2n) / (n * n + 1.0));
                }
                C.push_back(worst);
            }
            std::string why;
            ok = detail::bounded_across(C, why) && ok;
            out += "max_n |residual|/((n^2+1) eps^2)=" + detail::list(C) + " " + why + "; ";
        }
        return {ok, out};
    });

    guarded(6, "kernel cross-validation", [&]() -> std::pair<bool, std::string> {
        bool ok = true;
        double worst_ratio = 0.0, worst_diff = 0.0;
        for (auto* set : {&steady_a, &steady_b}) {
            for (const auto& s : *set) {
                RadialGrid gf = build_grid(s.params.eps, refine(cfg.N), cfg.scheme);
                SteadyState sf = solve_steady(s.params, gf, {}, nullptr);
                note_box(sf);
                for (int n = 0; n <= cfg.max_mode; ++n) {
                    ModeSolution m = solve_mode(s.state, s.params, n);
                    Eigen::VectorXd pk = mode_via_kernel(s.state, s.params, n, m);
                    double diff = (m.p1n - pk).lpNorm<Eigen::Infinity>();
                    ModeSolution mf = solve_mode(sf, s.params, n);
                    Eigen::VectorXd pkf = mode_via_kernel(sf, s.params, n, mf);
                    double est = 0.0;
                    for (int i = 0; i < cfg.N; ++i) {
                        est = std::max(est, richardson_error(m.p1n(i), mf.p1n(2 * i)));
                        est = std::max(est, richardson_error(pk(i), pkf(2 * i), 4));
                    }
                    double tol = std::max(1e-8, est);
                    ok = ok && diff <= tol;
                    worst_ratio = std::max(worst_ratio, diff / tol);
                    worst_diff = std::max(worst_diff, diff);
                }
            }
        }
        return {ok, "max |direct-kernel|=" + detail::fmt(worst_diff) + ", worst diff/tolerance=" + detail::fmt(worst_ratio)};
    });

    guarded(7, "kernel bound certificates", [&]() -> std::pair<bool, std::string> {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::uniform_int_distribution<int> pickn(1, 64);
        std::uniform_int_distribution<std::size_t> picke(0, cfg.eps_list.size() - 1);
        double min_slack_K = std::numeric_limits<double>::infinity(), min_slack_Kp = min_slack_K;
        for (int c = 0; c < cfg.kernel_cases; ++c) {
            int n = (c < 64) ? c + 1 : pickn(rng);
            double eps = cfg.eps_list[picke(rng)];
            RadialGrid g = build_grid(eps, cfg.N, cfg.scheme);
            double a0 = U(rng), a1 = U(rng), a2 = U(rng), w = 1.0 + 4.0 * std::abs(U(rng)), ph = 3.0 * U(rng);
            Eigen::VectorXd f(g.N);
            for (int i = 0; i < g.N; ++i) f(i) = a0 + a1 * g.s(i) + a2 * std::sin(w * g.s(i) + ph);
            double fmax = f.lpNorm<Eigen::Infinity>();
            auto [K, Kp] = k_apply(n, f, g);
            double bK = std::min(eps / (2.0 * n), 1.0 / (static_cast<double>(n) * n)) * fmax;
            double bKp = std::min(eps / 2.0, 1.0 / n) * fmax;
            min_slack_K = std::min(min_slack_K, bK - K.lpNorm<Eigen::Infinity>());
            min_slack_Kp = std::min(min_slack_Kp, bKp - Kp.lpNorm<Eigen::Infinity>());
        }
        bool ok = min_slack_K >= 0.0 && min_slack_Kp >= 0.0;
        return {ok, std::to_string(cfg.kernel_cases) + " cases, min slack |K|=" + detail::fmt(min_slack_K) +
                        " min slack |K'|=" + detail::fmt(min_slack_Kp)};
    });

    guarded(8, "Jacobian oracle", [&]() -> std::pair<bool, std::string> {
        double worst = 0.0;
        for (auto* set : {&steady_a, &steady_b}) {
            for (const auto& s : *set) {
                const auto& st = s.state;
                const ModelParams& p = s.params;
                auto coef = linearized_rhs_coefficients(st, p);
                for (int e = 0; e < 4; ++e) {
                    double scale = 0.0;
                    for (int v = 0; v < 3; ++v) scale = std::max(scale, coef.a[e][v].lpNorm<Eigen::Infinity>());
                    for (int i = 0; i < st.grid.N; ++i) {
                        double x[3] = {st.Lstar(i), st.Hstar(i), st.Fstar(i)};
                        for (int v = 0; v < 3; ++v) {
                            double h = 1e-6 * std::max(1.0, std::abs(x[v]));
                            double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
                            xp[v] += h;
                            xm[v] -= h;
                            Reaction rp = reaction(p, st.rho4, xp[0], xp[1], xp[2]);
                            Reaction rm = reaction(p, st.rho4, xm[0], xm[1], xm[2]);
                            double fp[4] = {rp.fL, rp.fH, rp.fF, rp.fP}, fm[4] = {rm.fL, rm.fH, rm.fF, rm.fP};
                            double fd = (fp[e] - fm[e]) / (xp[v] - xm[v]);
                            worst = std::max(worst, std::abs(fd - coef.a[e][v](i)) / scale);
                        }
                    }
                }
                // Whole discrete system: Jacobian-vector product against a central difference.
                SteadySystem sys(p, st.rho4, st.grid);
                Eigen::VectorXd w = sys.deviation(st.packed());
                SparseMatrix J = sys.jacobian(w);
                Eigen::VectorXd dir(w.size());
                for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = std::sin(0.37 * k + 0.11);
                double h = 1e-4 * p.eps;
                Eigen::VectorXd fd = (sys.residual(w + h * dir) - sys.residual(w - h * dir)) / (2.0 * h);
                Eigen::VectorXd jv = J * dir;
                worst = std::max(worst, (fd - jv).lpNorm<Eigen::Infinity>() / jv.lpNorm<Eigen::Infinity>());
            }
        }
        return {worst <= 1e-6, "max relative mismatch=" + detail::fmt(worst)};
    });

    guarded(9, "transversality", [&]() -> std::pair<bool, std::string> {
        if (!sweep_error.empty()) return {false, sweep_error};
        bool ok = true;
        std::string out;
        for (int n : cfg.bifurcation_modes) {
            std::vector<double> norm, C;
            for (const auto& r : rows_for(n)) {
                if (!r.error.empty()) return {false, r.error};
                norm.push_back(r.transversality_norm);
                ok = ok && r.transversality_norm > 0.0;
                C.push_back(std::abs(r.transversality_norm - 1.0) / (r.eps * (n * n + 1.0)));
            }
            std::string why;
            ok = detail::bounded_across(C, why) && ok;
            out += "n=" + std::to_string(n) + " normalized=" + detail::list(norm) + " |norm-1|/(eps(n^2+1))=" +
                   detail::list(C) + " " + why + "; ";
        }
        return {ok, out};
    });

    guarded(10, "mode separation", [&]() -> std::pair<bool, std::string> {
        ModelParams p = cfg.bifurcation_params;
        p.eps = cfg.eps_list.front();
        RadialGrid g = build_grid(p.eps, cfg.N, cfg.scheme);
        FrechetEvaluator ev(p, g);
        int n = cfg.bifurcation_modes.front();
        BifurcationPoint bp = find_mu_n(ev, n);
        auto table = separation_table(ev, bp, cfg.separation_m_max);
        const double tol = 10.0 * tol_g(p.eps);
        bool ok = true;
        double min_other = std::numeric_limits<double>::infinity(), at_n = 0.0;
        for (const auto& e : table) {
            if (e.m == n) {
                at_n = std::abs(e.W);
                ok = ok && at_n <= tol;
            } else {
                min_other = std::min(min_other, std::abs(e.W));
                ok = ok && std::abs(e.W) >= tol;
            }
        }
        return {ok, "mu_" + std::to_string(n) + "=" + detail::fmt(bp.mu_n) + " |W(n)|=" + detail::fmt(at_n) +
                        " min_{m!=n} |W(m)|=" + detail::fmt(min_other) + " threshold=" + detail::fmt(tol)};
    });

    guarded(11, "maximum-principle box bounds", [&]() -> std::pair<bool, std::string> {
        bool ok = box_ok;
        int rows_ok = 0;
        for (const auto& r : rows) {
            ok = ok && r.box_ok;
            rows_ok += r.box_ok;
        }
        return {ok, std::to_string(box_count) + " steady states checked directly, " + std::to_string(rows_ok) + "/" +
                        std::to_string(rows.size()) + " sweep states within bounds"};
    });

    guarded(12, "determinism", [&]() -> std::pair<bool, std::string> {
        if (!sweep_error.empty()) return {false, sweep_error};
        auto again = sweep(cfg.bifurcation_params, cfg.bifurcation_modes, cfg.eps_list, gs, cfg.jobs);
        bool csv_same = sweep_csv(rows) == sweep_csv(again);
        bool json_same = sweep_json(rows).dump(2) == sweep_json(again).dump(2);
        return {csv_same && json_same, std::string("csv ") + (csv_same ? "identical" : "differs") + ", json " +
                                           (json_same ? "identical" : "differs")};
    });

    return results;
}

} // namespace plaque
