#pragma once

#include <vector>

#include "syncsol/boxes.hpp"
#include "syncsol/counting.hpp"

namespace syncsol::oracle {

// ---------------------------------------------------------------------------
// Brute-force counters, deliberately independent of the engine's branch
// tables and monotonicity arguments. The scalar scan rediscovers the shape of
// each component function f_i(t) = t^kappa + (alpha - eta_i) t from a dense
// sample table (monotone or single interior extremum, located empirically)
// and isolates the roots of f_i(t) = tau by bisection on the detected
// monotone pieces. The grid scan attacks the coupled system directly.
// Neither claims completeness: they are falsifiers.
// ---------------------------------------------------------------------------

struct ScanConfig {
    int points_per_decade = 48;
    int refinement_depth = 2;  ///< resolutions compared before accepting a count
    double tau_floor = 0.0;    ///< 0 = automatic
    double tau_ceil = 0.0;     ///< 0 = automatic
    int grid_per_axis = 96;

    void check() const {
        if (points_per_decade < 32)
            fail(errc::invalid_config, "scan needs at least 32 points per decade");
        if (refinement_depth < 1) fail(errc::invalid_config, "refinement depth must be >= 1");
        if (tau_floor > 0.0 && tau_ceil > 0.0 && !(tau_floor < tau_ceil))
            fail(errc::invalid_config, "tau window must be ordered");
        if (grid_per_axis < 8) fail(errc::invalid_config, "grid too coarse");
    }
};

/// Full-system residual max_i |f_i(k)|.
inline double residual(const std::vector<double>& k, const SystemParams& params) {
    auto f = eval_f(k, params);
    double m = 0.0;
    for (double v : f) m = std::max(m, std::fabs(v));
    return m;
}

namespace detail {

using syncsol::detail::bisect_log;
using syncsol::detail::vec_rel_dist;

enum class CompShape { Increasing, Decreasing, PeakMax, DipMin };

/// One component function, sampled densely and classified empirically.
struct Component {
    double alpha = 0.0, eta = 0.0, kappa = 0.0;
    CompShape shape = CompShape::Increasing;
    double t_lo = 0.0, t_hi = 0.0;
    double ext_t = kNaN, ext_f = kNaN;  // refined interior extremum, when present

    double f(double t) const { return pow_pos(t, kappa) + (alpha - eta) * t; }

    void build(double alpha_in, double eta_in, double kappa_in, int ppd, double tau_lo,
               double tau_hi) {
        alpha = alpha_in;
        eta = eta_in;
        kappa = kappa_in;
        t_lo = 1e-12;
        t_hi = 1e12;
        auto low_covered = [&] {
            double v = f(t_lo);
            return kappa > 0 ? v < tau_lo / 2.0 : v > tau_hi * 2.0;
        };
        auto high_covered = [&] {
            double v = f(t_hi);
            if (kappa > 0) return alpha < eta ? v < 0.0 : v > tau_hi * 2.0;
            if (alpha > eta) return v > tau_hi * 2.0;
            if (alpha < eta) return v < 0.0;
            return v < tau_lo / 2.0;  // pure power decay
        };
        while (!low_covered() && t_lo > 1e-280) t_lo /= 1e3;
        while (!high_covered() && t_hi < 1e280) t_hi *= 1e3;

        double decades = std::log10(t_hi / t_lo);
        long long points = std::max<long long>(static_cast<long long>(decades * ppd), 64);
        double lr = std::log(t_hi / t_lo);
        long long arg = 0;
        double best = kappa > 0 ? -kInf : kInf;
        std::vector<double> ts(points);
        for (long long m = 0; m < points; ++m) {
            ts[m] = t_lo * std::exp(lr * m / double(points - 1));
            double v = f(ts[m]);
            if (kappa > 0 ? v > best : v < best) { best = v; arg = m; }
        }

        if (kappa > 0) {
            if (arg >= points - 1) { shape = CompShape::Increasing; return; }
            shape = CompShape::PeakMax;
            refine_extremum(ts[std::max<long long>(arg - 1, 0)], ts[arg + 1], true);
        } else {
            if (arg >= points - 1 || arg == 0) { shape = CompShape::Decreasing; return; }
            shape = CompShape::DipMin;
            refine_extremum(ts[arg - 1], ts[std::min(arg + 1, points - 1)], false);
        }
    }

    void refine_extremum(double lo, double hi, bool maximize) {
        for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-15; ++it) {
            double m1 = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) / 3.0);
            double m2 = std::exp(std::log(lo) + 2.0 * (std::log(hi) - std::log(lo)) / 3.0);
            bool keep_right = maximize ? f(m1) < f(m2) : f(m1) > f(m2);
            if (keep_right) lo = m1;
            else hi = m2;
        }
        ext_t = std::sqrt(lo * hi);
        ext_f = f(ext_t);
    }

    /// Solutions of f(t) = tau on the sampled range, ascending. A crossing
    /// pushed past the range floor contributes the floor itself; its value is
    /// negligible at that magnitude.
    std::vector<double> roots(double tau) const {
        const double tol = 1e-13 * std::max(1.0, std::fabs(tau));
        auto ff = [&](double t) { return f(t); };
        switch (shape) {
        case CompShape::Increasing: {
            if (f(t_lo) >= tau) return {t_lo};
            if (f(t_hi) <= tau) return {t_hi};
            return {bisect_log(ff, t_lo, t_hi, tau, tol)};
        }
        case CompShape::Decreasing: {
            if (f(t_lo) <= tau) return {t_lo};
            if (f(t_hi) >= tau) return {t_hi};
            return {bisect_log(ff, t_lo, t_hi, tau, tol)};
        }
        case CompShape::PeakMax: {
            if (tau > ext_f) return {};
            if (tau == ext_f) return {ext_t, ext_t};
            double left = f(t_lo) >= tau ? t_lo : bisect_log(ff, t_lo, ext_t, tau, tol);
            double right = f(t_hi) >= tau ? t_hi : bisect_log(ff, ext_t, t_hi, tau, tol);
            return {left, right};
        }
        case CompShape::DipMin: {
            if (tau < ext_f) return {};
            if (tau == ext_f) return {ext_t, ext_t};
            double left = f(t_lo) <= tau ? t_lo : bisect_log(ff, t_lo, ext_t, tau, tol);
            double right = f(t_hi) <= tau ? t_hi : bisect_log(ff, ext_t, t_hi, tau, tol);
            return {left, right};
        }
        }
        return {};
    }
};

struct ScalarScanState {
    std::vector<Component> comp;
    double alpha = 0.0;
    int n = 0;

    bool assignment_t(double tau, unsigned mask, std::vector<double>& t) const {
        t.resize(n);
        for (int i = 0; i < n; ++i) {
            auto r = comp[i].roots(tau);
            if (r.empty()) return false;
            if (mask >> i & 1u) {
                if (r.size() < 2) return false;
                t[i] = r[1];
            } else {
                t[i] = r[0];
            }
        }
        return true;
    }

    bool g_at(double tau, unsigned mask, double& g) const {
        std::vector<double> t;
        if (!assignment_t(tau, mask, t)) return false;
        double s = 0.0;
        for (double ti : t) s += ti;
        g = alpha * s - tau;
        return true;
    }
};

inline void polish_and_record(std::vector<double> k, const SystemParams& params,
                              CountReport& report) {
    k = newton_polish(k, params);
    for (const auto& sol : report.solutions)
        if (vec_rel_dist(sol.k, k) < params.tol.dedupe) return;
    Solution sol;
    sol.k = k;
    sol.residual = residual(k, params);
    report.solutions.push_back(std::move(sol));
}

inline long long scalar_scan_pass(const SystemParams& params, const DerivedExponents& exps,
                                  const ScanConfig& cfg, int ppd, CountReport* report) {
    const int n = params.n;
    double alpha = 0.0;
    params.alpha_constant(&alpha);

    double tau_lo = cfg.tau_floor > 0 ? cfg.tau_floor : 1e-14;
    double tau_hi = cfg.tau_ceil > 0 ? cfg.tau_ceil : 1e14;

    ScalarScanState st;
    st.alpha = alpha;
    st.n = n;
    st.comp.resize(n);
    auto rebuild = [&](double lo, double hi) {
        for (int i = 0; i < n; ++i)
            st.comp[i].build(alpha, params.eta[i], exps.kappa, ppd, lo, hi);
    };
    rebuild(tau_lo, tau_hi);

    // Empirical extremal level: the binding component's refined extremum.
    double level = kNaN;
    bool peaked = false;
    if (exps.kappa > 0) {
        double m = kInf;
        for (const auto& c : st.comp)
            if (c.shape == CompShape::PeakMax) { m = std::min(m, c.ext_f); peaked = true; }
        level = m;
    } else {
        double m = -kInf;
        for (const auto& c : st.comp)
            if (c.shape == CompShape::DipMin) { m = std::max(m, c.ext_f); peaked = true; }
        level = m;
    }

    if (cfg.tau_floor <= 0) {
        if (peaked && exps.kappa > 0) tau_lo = level * 1e-10;
        else if (peaked) tau_lo = level * (1.0 + 1e-9);
        else tau_lo = 1e-10;
        if (exps.kappa > 0) {
            // Anchor: descend until the all-first-branch sum is decisively
            // below tau, ruling out crossings past the floor. The sample
            // tables must track the widening window, or their range floor
            // masks the true branch values.
            for (int it = 0; it < 40; ++it) {
                rebuild(tau_lo, tau_hi);
                double g;
                if (st.g_at(tau_lo, 0u, g) && g < -0.5 * tau_lo) break;
                tau_lo /= 100.0;
                if (tau_lo < 1e-200) break;
            }
        }
    }
    if (cfg.tau_ceil <= 0) {
        if (peaked && exps.kappa > 0) tau_hi = level * (1.0 - 1e-9);
        else tau_hi = std::max(peaked ? level : 1.0, 1.0) * 1e8;
    }
    if (!(tau_lo < tau_hi)) fail(errc::grid_unstable, "empty scan window");
    rebuild(tau_lo, std::max(tau_hi, cfg.tau_ceil > 0 ? cfg.tau_ceil : 1e14));

    double decades = std::log10(tau_hi / tau_lo);
    long long points = std::max<long long>(static_cast<long long>(decades * ppd), 64);
    double lr = std::log(tau_hi / tau_lo);

    long long found = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        bool have_prev = false;
        double prev_tau = 0.0, prev_g = 0.0;
        for (long long m = 0; m < points; ++m) {
            double tau = tau_lo * std::exp(lr * m / double(points - 1));
            double g;
            if (!st.g_at(tau, mask, g)) { have_prev = false; continue; }
            if (have_prev && (prev_g > 0) != (g > 0)) {
                auto gf = [&](double x) {
                    double v;
                    if (!st.g_at(x, mask, v))
                        fail(errc::grid_unstable, "assignment domain broke inside a bracket");
                    return v;
                };
                double root = bisect_log(gf, prev_tau, tau, 0.0, 1e-12 * std::max(1.0, tau));
                ++found;
                if (report) {
                    std::vector<double> t;
                    st.assignment_t(root, mask, t);
                    polish_and_record(recover_k(t, exps), params, *report);
                }
            }
            have_prev = true;
            prev_tau = tau;
            prev_g = g;
        }
    }
    return found;
}

} // namespace detail

/// Count solutions by dense scanning of every subset assignment equation.
/// Two grid resolutions must agree, otherwise GRID_UNSTABLE is raised.
inline CountReport scalar_scan_count(const SystemParams& params, const DerivedExponents& exps,
                                     const ScanConfig& cfg = {}) {
    cfg.check();
    if (exps.regime != Regime::Subquadratic && exps.regime != Regime::Superquadratic)
        fail(errc::wrong_regime, "scalar scan needs constant p away from 2");
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "scalar scan needs a constant coupling");

    CountReport report;
    report.regime = exps.regime;
    long long count = detail::scalar_scan_pass(params, exps, cfg, cfg.points_per_decade, &report);
    if (cfg.refinement_depth >= 2) {
        long long check =
            detail::scalar_scan_pass(params, exps, cfg, cfg.points_per_decade * 2, nullptr);
        if (check != count)
            fail(errc::grid_unstable, "adjacent scan refinements disagree: " +
                                          std::to_string(count) + " vs " + std::to_string(check));
    }
    report.rho_star_star = static_cast<long long>(report.solutions.size());
    report.total = report.rho_star_star;
    report.kind = TotalKind::Exact;
    return report;
}

/// Direct n-dimensional log-grid scan of the coupled system with Newton
/// polishing on every sign-pattern cell.
inline CountReport grid_scan_count(const SystemParams& params, const ScanConfig& cfg = {}) {
    cfg.check();
    const int n = params.n;
    if (n > 3) fail(errc::cost_guard, "grid scan limited to n <= 3");
    auto exps = derive(params);

    const int g = cfg.grid_per_axis;
    double k_max = 0.0;
    for (double e : params.eta) k_max = std::max(k_max, pow_pos(1.0 / e, exps.beta));
    k_max *= 2.0;
    double k_min = k_max * 1e-6;

    std::vector<double> axis(g);
    double lr = std::log(k_max / k_min);
    for (int m = 0; m < g; ++m) axis[m] = k_min * std::exp(lr * m / double(g - 1));

    long long cells = 1;
    for (int d = 0; d < n; ++d) cells *= g;
    std::vector<double> values(cells * n);
    std::vector<double> point(n);
    std::vector<int> idx(n, 0);
    for (long long c = 0; c < cells; ++c) {
        for (int d = 0; d < n; ++d) point[d] = axis[idx[d]];
        auto f = eval_f(point, params);
        for (int d = 0; d < n; ++d) values[c * n + d] = f[d];
        for (int d = n - 1; d >= 0; --d) {
            if (++idx[d] < g) break;
            idx[d] = 0;
        }
    }
    auto flat = [&](const std::vector<int>& ix) {
        long long c = 0;
        for (int d = 0; d < n; ++d) c = c * g + ix[d];
        return c;
    };

    CountReport report;
    report.regime = exps.regime;
    auto field = f_field(params);

    std::vector<int> base(n, 0);
    const long long corner_count = 1LL << n;
    bool done = false;
    while (!done) {
        bool candidate = true;
        for (int d = 0; d < n && candidate; ++d) {
            bool pos = false, neg = false;
            for (long long corner = 0; corner < corner_count; ++corner) {
                std::vector<int> ix(base);
                for (int b = 0; b < n; ++b)
                    if (corner >> b & 1) ++ix[b];
                double v = values[flat(ix) * n + d];
                (v > 0 ? pos : neg) = true;
            }
            if (!(pos && neg)) candidate = false;
        }
        if (candidate) {
            std::vector<double> center(n);
            for (int d = 0; d < n; ++d)
                center[d] = std::sqrt(axis[base[d]] * axis[base[d] + 1]);
            auto nr = syncsol::detail::newton_log(field, center, params.tol.root);
            if (nr.converged) detail::polish_and_record(nr.k, params, report);
        }
        for (int d = n - 1; d >= 0; --d) {
            if (++base[d] < g - 1) break;
            base[d] = 0;
            if (d == 0) done = true;
        }
    }

    report.rho_star_star = static_cast<long long>(report.solutions.size());
    report.total = report.rho_star_star;
    report.kind = TotalKind::Exact;
    return report;
}

} // namespace syncsol::oracle
