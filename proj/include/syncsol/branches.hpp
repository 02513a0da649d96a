#pragma once

#include <optional>
#include <vector>

#include "syncsol/params.hpp"

namespace syncsol {

// ---------------------------------------------------------------------------
// Scalar branch machinery for the pivot function family
//     f_i(t) = t^kappa + (alpha - eta_i) * t,   t > 0.
// For kappa in (0,1) the family peaks; for kappa < 0 it dips. Each regime
// splits further on which side of the eta range alpha falls, giving four
// structurally different contexts.
// ---------------------------------------------------------------------------

enum class BranchContext {
    SubIncreasing,    ///< kappa in (0,1), alpha >= eta_n: every f_i increasing on (0,inf)
    SubPeak,          ///< kappa in (0,1), alpha <  eta_n: pivot n has a maximum
    SuperDecreasing,  ///< kappa < 0, alpha <= eta_1: every f_i decreasing onto (0,inf)
    SuperPeak,        ///< kappa < 0, alpha >  eta_1: pivot 1 has a minimum
};

struct Peak {
    double value = 0.0;  ///< extremal level of the pivot function
    double point = 0.0;  ///< location of the extremum
    int pivot = 0;       ///< 0-based pivot index (n-1 when kappa in (0,1), 0 when kappa < 0)
};

struct BranchEntry {
    int rel = 0;           ///< sign of alpha - eta_i after snapping (-1, 0, +1)
    double s_bound = kInf; ///< zero/blow-up scale of f_i; +inf marker when unbounded
    double t_low = kNaN;   ///< lower crossing of the extremal level (peaked contexts)
    double t_high = kNaN;  ///< upper crossing, when the second branch exists
    bool has_k = false;    ///< second (k) branch defined for this index
};

struct BranchTable {
    BranchContext context{};
    double alpha = 0.0;
    std::vector<double> eta;
    DerivedExponents exps;
    Tolerances tol;
    std::optional<Peak> peak;
    std::vector<BranchEntry> entries;

    int n() const { return static_cast<int>(eta.size()); }
    bool has_k(int i) const { return entries[i].has_k; }
    bool peaked() const { return peak.has_value(); }

    /// Shared tau-domain of the branch inverses:
    /// SubPeak (0, A]; SuperPeak [A, inf); monotone contexts (0, inf).
    bool tau_in_domain(double tau) const {
        if (!(tau > 0.0)) return false;
        if (!peak) return true;
        double a = peak->value;
        double slack = tol.root * std::max(1.0, a);
        if (context == BranchContext::SubPeak) return tau <= a + slack;
        return tau >= a - slack;
    }
};

inline double f_scalar(double t, int i, double alpha, const DerivedExponents& exps,
                       const std::vector<double>& eta) {
    if (!(t > 0.0)) fail(errc::nonpositive_t, "f_scalar requires t > 0");
    return pow_pos(t, exps.kappa) + (alpha - eta[i]) * t;
}

inline double f_scalar_prime(double t, int i, double alpha, const DerivedExponents& exps,
                             const std::vector<double>& eta) {
    return exps.kappa * pow_pos(t, exps.kappa - 1.0) + (alpha - eta[i]);
}

namespace detail {

inline int snap_rel(double alpha, double eta_i, double tol_exp) {
    if (std::fabs(alpha - eta_i) <= tol_exp * std::max(1.0, std::fabs(eta_i))) return 0;
    return alpha < eta_i ? -1 : 1;
}

/// Bisection in log t for f(t) = target over a bracket with opposite signs.
/// Works for a single crossing even when f is not monotone on the bracket.
template <class F>
double bisect_log(F&& f, double lo, double hi, double target, double tol_res) {
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        fail(errc::no_convergence, "bisection bracket does not straddle the target");
    double best = lo, best_res = std::fabs(flo);
    if (std::fabs(fhi) < best_res) { best = hi; best_res = std::fabs(fhi); }
    double llo = std::log(lo), lhi = std::log(hi);
    for (int it = 0; it < 220; ++it) {
        double lmid = 0.5 * (llo + lhi);
        double mid = std::exp(lmid);
        double fm = f(mid) - target;
        if (std::fabs(fm) < best_res) { best = mid; best_res = std::fabs(fm); }
        if ((fm > 0) == (flo > 0)) { llo = lmid; flo = fm; }
        else { lhi = lmid; }
        if (best_res <= tol_res && (lhi - llo) <= 1e-14) break;
    }
    return best;
}

/// Geometrically shrink t from `start` until pred(t) holds.
template <class P>
double shrink_until(P&& pred, double start, double factor = 10.0) {
    double t = start;
    for (int it = 0; it < 400; ++it) {
        if (pred(t)) return t;
        t /= factor;
        if (t < 1e-290) break;
    }
    if (pred(t)) return t;
    fail(errc::no_convergence, "bracket shrink failed");
}

template <class P>
double grow_until(P&& pred, double start, double factor = 2.0) {
    double t = start;
    for (int it = 0; it < 2000; ++it) {
        if (pred(t)) return t;
        t *= factor;
        if (t > 1e290) break;
    }
    if (pred(t)) return t;
    fail(errc::no_convergence, "bracket grow failed");
}

} // namespace detail

inline BranchContext classify_context(const SystemParams& params, const DerivedExponents& exps,
                                      double alpha) {
    if (exps.regime == Regime::Subquadratic) {
        int rel_top = detail::snap_rel(alpha, params.eta.back(), params.tol.exponent);
        return rel_top >= 0 ? BranchContext::SubIncreasing : BranchContext::SubPeak;
    }
    if (exps.regime == Regime::Superquadratic) {
        int rel_bot = detail::snap_rel(alpha, params.eta.front(), params.tol.exponent);
        return rel_bot <= 0 ? BranchContext::SuperDecreasing : BranchContext::SuperPeak;
    }
    fail(errc::wrong_regime, "branch machinery requires p != 2 and constant p");
}

/// Closed-form extremum (value, point) of the pivot function.
inline Peak compute_peak(const SystemParams& params, const DerivedExponents& exps) {
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "peak requires a constant coupling");
    const double kap = exps.kappa;
    Peak pk;
    if (exps.sub()) {
        double gap = params.eta.back() - alpha;
        if (detail::snap_rel(alpha, params.eta.back(), params.tol.exponent) >= 0)
            fail(errc::wrong_side, "no maximum: coupling at or above the largest self-coupling");
        pk.pivot = params.n - 1;
        pk.point = pow_pos(kap / gap, 1.0 / (1.0 - kap));
        pk.value = (pow_pos(kap, kap / (1.0 - kap)) - pow_pos(kap, 1.0 / (1.0 - kap))) /
                   pow_pos(gap, kap / (1.0 - kap));
    } else if (exps.super()) {
        double gap = alpha - params.eta.front();
        if (detail::snap_rel(alpha, params.eta.front(), params.tol.exponent) <= 0)
            fail(errc::wrong_side, "no minimum: coupling at or below the smallest self-coupling");
        pk.pivot = 0;
        pk.point = pow_pos(-kap / gap, 1.0 / (1.0 - kap));
        pk.value = (pow_pos(-kap, kap / (1.0 - kap)) + pow_pos(-kap, 1.0 / (1.0 - kap))) /
                   pow_pos(gap, kap / (1.0 - kap));
    } else {
        fail(errc::wrong_regime, "peak undefined for p = 2 or mixed exponents");
    }

    // Consistency: the pivot attains the level at the point, and nearby
    // values sit on the expected side.
    double fT = f_scalar(pk.point, pk.pivot, alpha, exps, params.eta);
    if (!rel_close(fT, pk.value, 1e-8))
        fail(errc::no_convergence, "peak closed form failed its self-check");
    double side = exps.sub() ? 1.0 : -1.0;
    if (side * (pk.value - f_scalar(pk.point * 1.001, pk.pivot, alpha, exps, params.eta)) < 0 ||
        side * (pk.value - f_scalar(pk.point * 0.999, pk.pivot, alpha, exps, params.eta)) < 0)
        fail(errc::no_convergence, "peak is not extremal against nearby samples");
    return pk;
}

/// Scale bound S_i = (eta_i - alpha)^{-1/(1-kappa)}; +inf marker whenever the
/// relevant branch never returns to zero (alpha >= eta_i for kappa in (0,1),
/// alpha = eta_i for kappa < 0) or alpha snaps onto eta_i.
inline double s_bound(int i, const SystemParams& params, const DerivedExponents& exps) {
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "s_bound requires a constant coupling");
    int rel = detail::snap_rel(alpha, params.eta[i], params.tol.exponent);
    if (rel >= 0) return kInf;
    return pow_pos(1.0 / (params.eta[i] - alpha), 1.0 / (1.0 - exps.kappa));
}

/// Both crossings of the extremal level by f_i: the lower one always exists
/// in peaked contexts; the upper one only when the second branch does.
inline std::pair<double, std::optional<double>> branch_points(int i, const Peak& peak,
                                                              const SystemParams& params,
                                                              const DerivedExponents& exps) {
    double alpha = 0.0;
    params.alpha_constant(&alpha);
    const auto& eta = params.eta;
    const double A = peak.value, T = peak.point;
    const double tol_res = params.tol.root * std::max(1.0, A);
    auto f = [&](double t) { return f_scalar(t, i, alpha, exps, eta); };

    // Pivot tier: every index sharing the pivot's self-coupling crosses at T.
    if (detail::snap_rel(eta[i], eta[peak.pivot], params.tol.exponent) == 0)
        return {T, T};

    int rel = detail::snap_rel(alpha, eta[i], params.tol.exponent);
    if (exps.sub()) {
        double lo = detail::shrink_until([&](double t) { return f(t) < A; }, T);
        double t_low = detail::bisect_log(f, lo, T, A, tol_res);
        if (rel >= 0) return {t_low, std::nullopt};
        double s = pow_pos(1.0 / (eta[i] - alpha), 1.0 / (1.0 - exps.kappa));
        double hi = s;
        for (int m = 1; m < 60; ++m) {
            hi = s - (s - T) * std::pow(2.0, -m);
            if (f(hi) < A) break;
        }
        // With the level far below the falling branch's floating-point
        // resolution near the zero scale, the upper branch collapses onto it.
        if (!(f(hi) < A)) return {t_low, hi};
        double t_high = detail::bisect_log(f, T, hi, A, tol_res);
        return {t_low, t_high};
    }

    // kappa < 0: decreasing toward T, rising branch beyond when alpha > eta_i.
    double lo = detail::shrink_until([&](double t) { return f(t) > A; }, T);
    double t_low = detail::bisect_log(f, lo, T, A, tol_res);
    if (rel <= 0) return {t_low, std::nullopt};
    double hi = detail::grow_until([&](double t) { return f(t) > A; }, 2.0 * T);
    double t_high = detail::bisect_log(f, T, hi, A, tol_res);
    return {t_low, t_high};
}

inline BranchTable make_branch_table(const SystemParams& params, const DerivedExponents& exps) {
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "branch table requires a constant coupling");
    BranchTable table;
    table.context = classify_context(params, exps, alpha);
    table.alpha = alpha;
    table.eta = params.eta;
    table.exps = exps;
    table.tol = params.tol;
    table.entries.resize(params.n);

    bool peaked = table.context == BranchContext::SubPeak ||
                  table.context == BranchContext::SuperPeak;
    if (peaked) table.peak = compute_peak(params, exps);

    for (int i = 0; i < params.n; ++i) {
        auto& e = table.entries[i];
        e.rel = detail::snap_rel(alpha, params.eta[i], params.tol.exponent);
        e.s_bound = s_bound(i, params, exps);
        if (peaked) {
            auto [lo, hi] = branch_points(i, *table.peak, params, exps);
            e.t_low = lo;
            if (table.context == BranchContext::SubPeak) e.has_k = (e.rel < 0);
            else e.has_k = (e.rel > 0);
            if (e.has_k) {
                if (!hi) fail(errc::no_convergence, "expected upper branch point");
                e.t_high = *hi;
            }
        }
    }
    return table;
}

/// Inverse of f_i on its first monotone piece. Meaning depends on context:
/// increasing inverse for kappa in (0,1), decreasing inverse for kappa < 0.
inline double h_inverse(int i, double tau, const BranchTable& table) {
    const auto& e = table.entries[i];
    if (!table.tau_in_domain(tau))
        fail(errc::out_of_domain, "tau outside the h-branch domain");
    auto f = [&](double t) { return f_scalar(t, i, table.alpha, table.exps, table.eta); };
    const double tol_res = table.tol.root * std::max(1.0, std::fabs(tau));

    switch (table.context) {
    case BranchContext::SubIncreasing: {
        double lo = detail::shrink_until([&](double t) { return f(t) < tau; }, 1.0);
        double hi = detail::grow_until([&](double t) { return f(t) > tau; }, std::max(1.0, lo));
        return detail::bisect_log(f, lo, hi, tau, tol_res);
    }
    case BranchContext::SubPeak: {
        double cap = e.t_low;
        if (f(cap) < tau) return cap;  // tau at the level within tolerance
        double lo = detail::shrink_until([&](double t) { return f(t) < tau; }, cap);
        return detail::bisect_log(f, lo, cap, tau, tol_res);
    }
    case BranchContext::SuperDecreasing: {
        if (e.rel == 0) return pow_pos(tau, 1.0 / table.exps.kappa);
        double hi = e.s_bound;
        for (int m = 1; m < 60; ++m) {
            hi = e.s_bound * (1.0 - std::pow(2.0, -m));
            if (f(hi) < tau) break;
        }
        double lo = detail::shrink_until([&](double t) { return f(t) > tau; }, hi);
        return detail::bisect_log(f, lo, hi, tau, tol_res);
    }
    case BranchContext::SuperPeak: {
        double cap = e.t_low;
        if (f(cap) > tau) return cap;
        double lo = detail::shrink_until([&](double t) { return f(t) > tau; }, cap);
        return detail::bisect_log(f, lo, cap, tau, tol_res);
    }
    }
    fail(errc::out_of_domain, "unreachable branch context");
}

/// Inverse of f_i on its second monotone piece (past the extremum).
inline double k_inverse(int i, double tau, const BranchTable& table) {
    const auto& e = table.entries[i];
    if (!e.has_k) fail(errc::branch_absent, "second branch undefined for this index");
    if (!table.tau_in_domain(tau))
        fail(errc::out_of_domain, "tau outside the k-branch domain");
    auto f = [&](double t) { return f_scalar(t, i, table.alpha, table.exps, table.eta); };
    const double tol_res = table.tol.root * std::max(1.0, std::fabs(tau));

    if (table.context == BranchContext::SubPeak) {
        double base = e.t_high;
        if (f(base) < tau) return base;
        double hi = base;
        for (int m = 1; m < 60; ++m) {
            hi = e.s_bound - (e.s_bound - base) * std::pow(2.0, -m);
            if (f(hi) < tau) break;
        }
        if (!(f(hi) < tau)) return hi;  // branch collapsed onto the zero scale
        return detail::bisect_log(f, base, hi, tau, tol_res);
    }
    // SuperPeak: increasing from the level upward.
    double base = e.t_high;
    if (f(base) > tau) return base;
    double hi = detail::grow_until([&](double t) { return f(t) > tau; }, 2.0 * base);
    return detail::bisect_log(f, base, hi, tau, tol_res);
}

/// d h_i / d tau at the point t already on the branch: 1 / f_i'(t).
inline double inverse_slope(int i, double t, const BranchTable& table) {
    return 1.0 / f_scalar_prime(t, i, table.alpha, table.exps, table.eta);
}

} // namespace syncsol
