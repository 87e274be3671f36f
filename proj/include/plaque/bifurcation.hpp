#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plaque/kernel.hpp"
#include "plaque/modes.hpp"
#include "plaque/steady.hpp"

namespace plaque {

/// g = p*''(1-eps) + (p1^n)'(1-eps) and the pieces of its decomposition.
struct FrechetParts {
    double mu = 0.0;
    int n = 0;
    double g = 0.0;
    double p2_inner = 0.0;
    double p1n_prime_inner = 0.0;
    double eps_term = 0.0;
    double annulus = 0.0;
    double J1 = 0.0;
    double J2n = 0.0;
    double rho4 = 0.0;
    bool box_ok = true;
};

/// Evaluates g(n, mu) with full steady + mode re-solves, warm-starting Newton from the
/// nearest previously solved mu.
class FrechetEvaluator {
public:
    FrechetEvaluator(const ModelParams& p, const RadialGrid& g, const SolverOptions& opt = {})
        : prm_(p), grid_(g), opt_(opt) {}

    const SteadyState& steady(double mu) {
        const SteadyState* warm = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : history_) {
            double d = std::abs(s.params.mu - mu);
            if (d == 0.0) return s;
            if (d < best) {
                best = d;
                warm = &s;
            }
        }
        ModelParams p = prm_;
        p.mu = mu;
        SteadyState st = solve_steady(p, grid_, opt_, warm);
        if (history_.size() >= 8) history_.pop_front();
        history_.push_back(std::move(st));
        return history_.back();
    }

    FrechetParts parts(double mu, int n) {
        const SteadyState& st = steady(mu);
        const ModelParams& p = st.params;
        ModeSolution m = solve_mode(st, p, n);
        FrechetParts f;
        f.mu = mu;
        f.n = n;
        f.p2_inner = st.p2_inner;
        f.p1n_prime_inner = m.p1n_prime_inner;
        f.g = f.p2_inner + f.p1n_prime_inner;
        f.eps_term = p.eps * p.mu / (p.gamma + p.H0);
        f.annulus = annulus_factor(n, p.eps);
        f.J1 = st.J1;
        f.J2n = m.J2n;
        f.rho4 = st.rho4;
        f.box_ok = box_bounds_hold(st, p);
        return f;
    }

    double operator()(double mu, int n) { return parts(mu, n).g; }

    const ModelParams& params() const { return prm_; }
    const RadialGrid& grid() const { return grid_; }

private:
    ModelParams prm_;
    RadialGrid grid_;
    SolverOptions opt_;
    std::deque<SteadyState> history_;
};

inline double frechet_coeff(const ModelParams& p, double mu, int n, const RadialGrid& g, const SolverOptions& opt = {}) {
    FrechetEvaluator ev(p, g, opt);
    return ev(mu, n);
}

inline double tol_g(double eps) { return 1e-12 + 1e-8 * eps; }

inline double mu_asymptotic(const ModelParams& p, int n) {
    double nn = static_cast<double>(n) * n;
    return (p.gamma + p.H0) * nn * (1.0 - nn);
}

struct BifurcationPoint {
    int n = 0;
    double mu_n = 0.0;
    double mu_asymptotic = 0.0;
    double deviation = 0.0;
    bool valid = false;
    double rho4_at_mu_n = 0.0;
    std::pair<std::pair<double, double>, std::pair<double, double>> g_bracket;
    double g_at_root = 0.0;
    double dg_dmu = 0.0;
    double transversality_norm = 0.0;
    double J1 = 0.0;
    double J2n = 0.0;
    bool box_ok = true;
};

/// Central difference of g in mu with step max(1e-4 |mu|, 1e-4).
/// Returns (dg/dmu, dg/dmu * (gamma+H0)/eps).
inline std::pair<double, double> transversality(FrechetEvaluator& ev, double mu, int n) {
    double d = std::max(1e-4 * std::abs(mu), 1e-4);
    double gp = ev(mu + d, n);
    double gm = ev(mu - d, n);
    double dg = (gp - gm) / (2.0 * d);
    const ModelParams& p = ev.params();
    return {dg, dg * (p.gamma + p.H0) / p.eps};
}

inline std::pair<double, double> transversality(const ModelParams& p, double mu, int n, const RadialGrid& g,
                                                const SolverOptions& opt = {}) {
    FrechetEvaluator ev(p, g, opt);
    return transversality(ev, mu, n);
}

inline BifurcationPoint find_mu_n(FrechetEvaluator& ev, int n) {
    const ModelParams& p = ev.params();
    if (n < 2) throw std::invalid_argument("bifurcation search needs n >= 2");
    const double guess = mu_asymptotic(p, n);
    const double mc = mu_c(p);
    if (guess <= mc)
        throw SolverError(ErrorCode::asymptotic_guess_below_critical,
                          "mu_guess=" + detail::fmt(guess) + " <= mu_c=" + detail::fmt(mc));
    const double tol = tol_g(p.eps);
    double step = (p.gamma + p.H0) * std::max(1.0, std::pow(static_cast<double>(n), 5) * p.eps);

    std::vector<std::pair<double, double>> scan;
    auto eval = [&](double mu) {
        try {
            return ev(mu, n);
        } catch (const SolverError& e) {
            if (e.code() == ErrorCode::mu_below_critical)
                throw SolverError(ErrorCode::no_sign_change,
                                  "scan reached the critical region at mu=" + detail::fmt(mu) + " from mu_guess=" +
                                      detail::fmt(guess));
            throw;
        }
    };
    double a = guess, ga = eval(a);
    scan.emplace_back(a, ga);
    double b = a, gb = ga;
    if (std::abs(ga) > tol) {
        double dir = ga > 0.0 ? -1.0 : 1.0;
        bool found = false;
        for (int k = 0; k < 40; ++k) {
            b = a + dir * step;
            gb = eval(b);
            scan.emplace_back(b, gb);
            if ((gb > 0.0) != (ga > 0.0) || std::abs(gb) <= tol) {
                found = true;
                break;
            }
            a = b;
            ga = gb;
            step *= 2.0;
        }
        if (!found)
            throw SolverError(ErrorCode::no_sign_change,
                              "g keeps sign on [" + detail::fmt(std::min(scan.front().first, b)) + ", " +
                                  detail::fmt(std::max(scan.front().first, b)) + "]");
        std::sort(scan.begin(), scan.end());
        for (std::size_t i = 1; i < scan.size(); ++i)
            if (!(scan[i].second > scan[i - 1].second))
                throw SolverError(ErrorCode::non_monotone,
                                  "g not increasing between mu=" + detail::fmt(scan[i - 1].first) + " and mu=" +
                                      detail::fmt(scan[i].first));
    }
    double lo = std::min(a, b), hi = std::max(a, b);
    double glo = lo == a ? ga : gb, ghi = hi == a ? ga : gb;

    BifurcationPoint bp;
    bp.n = n;
    bp.g_bracket = {{lo, glo}, {hi, ghi}};
    double root;
    if (std::abs(glo) <= tol) {
        root = lo;
    } else if (std::abs(ghi) <= tol) {
        root = hi;
    } else {
        auto f = [&](double mu) {
            double v = ev(mu, n);
            return std::abs(v) <= tol ? 0.0 : v;
        };
        boost::uintmax_t iters = 100;
        auto stop = [](double x, double y) { return std::abs(y - x) <= 1e-14 * std::max(1.0, std::abs(x)); };
        auto br = boost::math::tools::toms748_solve(f, lo, hi, glo, ghi, stop, iters);
        double ga2 = std::abs(ev(br.first, n)), gb2 = std::abs(ev(br.second, n));
        root = ga2 <= gb2 ? br.first : br.second;
    }
    FrechetParts fp = ev.parts(root, n);
    bp.mu_n = root;
    bp.g_at_root = fp.g;
    bp.mu_asymptotic = guess;
    bp.deviation = std::abs(root - guess);
    bp.valid = root > mc;
    bp.rho4_at_mu_n = fp.rho4;
    bp.J1 = fp.J1;
    bp.J2n = fp.J2n;
    bp.box_ok = fp.box_ok;
    auto tr = transversality(ev, root, n);
    bp.dg_dmu = tr.first;
    bp.transversality_norm = tr.second;
    return bp;
}

inline BifurcationPoint find_mu_n(const ModelParams& p, int n, const RadialGrid& g, const SolverOptions& opt = {}) {
    FrechetEvaluator ev(p, g, opt);
    return find_mu_n(ev, n);
}

struct SeparationEntry {
    int m;
    double W;
};

/// W(m) = g(m, mu_n) for m = 0..m_max; rejects any |W(m)| <= 10 tol_g with m != n.
inline std::vector<SeparationEntry> separation_table(FrechetEvaluator& ev, const BifurcationPoint& bp, int m_max) {
    std::vector<SeparationEntry> out;
    const double tol = tol_g(ev.params().eps);
    for (int m = 0; m <= m_max; ++m) {
        double W = ev(bp.mu_n, m);
        out.push_back({m, W});
        if (m != bp.n && std::abs(W) <= 10.0 * tol)
            throw SolverError(ErrorCode::kernel_degenerate,
                              "|W(" + std::to_string(m) + ")|=" + detail::fmt(std::abs(W)) + " at mu_n=" +
                                  detail::fmt(bp.mu_n));
    }
    return out;
}

inline std::vector<SeparationEntry> separation_table(const ModelParams& p, const BifurcationPoint& bp, int m_max,
                                                     const RadialGrid& g, const SolverOptions& opt = {}) {
    FrechetEvaluator ev(p, g, opt);
    return separation_table(ev, bp, m_max);
}

struct SweepRow {
    int n = 0;
    double eps = 0.0;
    double mu_n = std::numeric_limits<double>::quiet_NaN();
    double mu_asymptotic = std::numeric_limits<double>::quiet_NaN();
    double deviation = std::numeric_limits<double>::quiet_NaN();
    double deviation_scaled = std::numeric_limits<double>::quiet_NaN();
    double J1 = std::numeric_limits<double>::quiet_NaN();
    double J2n = std::numeric_limits<double>::quiet_NaN();
    double transversality_norm = std::numeric_limits<double>::quiet_NaN();
    double rho4 = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    bool box_ok = false;
    std::string error;
};

struct GridSpec {
    int N = 128;
    Scheme scheme = Scheme::uniform_fd2;
};

inline SweepRow sweep_row(const ModelParams& tmpl, int n, double eps, const GridSpec& gs, const SolverOptions& opt) {
    SweepRow row;
    row.n = n;
    row.eps = eps;
    ModelParams p = tmpl;
    p.eps = eps;
    row.mu_asymptotic = mu_asymptotic(p, n);
    try {
        RadialGrid g = build_grid(eps, gs.N, gs.scheme);
        FrechetEvaluator ev(p, g, opt);
        BifurcationPoint bp = find_mu_n(ev, n);
        row.mu_n = bp.mu_n;
        row.deviation = bp.deviation;
        row.deviation_scaled = bp.deviation / (std::pow(static_cast<double>(n), 5) * eps);
        row.J1 = bp.J1;
        row.J2n = bp.J2n;
        row.transversality_norm = bp.transversality_norm;
        row.rho4 = bp.rho4_at_mu_n;
        row.valid = bp.valid;
        row.box_ok = bp.box_ok;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

/// Rows ordered n-major, eps-minor regardless of the number of worker threads.
inline std::vector<SweepRow> sweep(const ModelParams& tmpl, const std::vector<int>& n_list,
                                   const std::vector<double>& eps_list, const GridSpec& gs, int jobs = 1,
                                   const SolverOptions& opt = {}) {
    std::vector<std::pair<int, double>> tasks;
    for (int n : n_list)
        for (double e : eps_list) tasks.emplace_back(n, e);
    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++)
            rows[i] = sweep_row(tmpl, tasks[i].first, tasks[i].second, gs, opt);
    };
    int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

} // namespace plaque
