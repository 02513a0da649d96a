#pragma once

#include <string>
#include <vector>

#include "syncsol/boxes.hpp"
#include "syncsol/branches.hpp"

namespace syncsol {

// ---------------------------------------------------------------------------
// Exact counting of synchronized positive solution vectors for constant
// exponent/coupling instances. Each admissible subset assignment selects,
// per index, the first or second branch inverse; the scalar consistency
// equation
//     alpha * sum_{i not in S} h_i(tau) + alpha * sum_{i in S} k_i(tau) = tau
// is counted by sign-change scanning with bisection refinement, and the
// extremal level tau = A is checked separately.
// ---------------------------------------------------------------------------

enum class TotalKind { Exact, LowerBound, Infinite, None };

inline const char* total_kind_name(TotalKind k) {
    switch (k) {
    case TotalKind::Exact:      return "EXACT";
    case TotalKind::LowerBound: return "LOWER_BOUND";
    case TotalKind::Infinite:   return "INFINITE";
    case TotalKind::None:       return "NONE";
    }
    return "?";
}

struct Solution {
    std::vector<int> assignment;  ///< canonical 0-based indices assigned to the second branch
    double tau = kNaN;
    std::vector<double> t;  ///< canonical order; empty when no scalar reduction applies
    std::vector<double> k;
    double residual = 0.0;
};

struct RootBracket {
    std::vector<int> assignment;
    double lo = 0.0, hi = 0.0;
};

struct CountReport {
    Regime regime{};
    TotalKind kind = TotalKind::Exact;
    long long rho_star = 0;
    long long rho_star_ambiguous = 0;  ///< extremal-level checks inside the gray tolerance band
    long long rho_star_star = 0;
    long long total = 0;  ///< meaningful for Exact and LowerBound
    std::vector<Solution> solutions;
    std::vector<RootBracket> certificates;          ///< scalar root brackets
    std::vector<SignCertificate> box_certificates;  ///< face evidence, existence path
    std::string note;

    long long total_high() const { return total + rho_star_ambiguous; }
    bool boundary_ambiguous() const { return rho_star_ambiguous > 0; }
};

/// Undo the amplitude transform: k_i = t_i^{1/q}.
inline std::vector<double> recover_k(const std::vector<double>& t, const DerivedExponents& exps) {
    if (std::isnan(exps.q_common))
        fail(errc::wrong_regime, "recover_k needs a constant exponent pair");
    std::vector<double> k(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0)) fail(errc::nonpositive_t, "transformed coordinates must be positive");
        k[i] = pow_pos(t[i], 1.0 / exps.q_common);
    }
    return k;
}

/// Branch values t_i(tau) for a given k-branch index set.
inline std::vector<double> subset_t(double tau, const std::vector<char>& on_k,
                                    const BranchTable& table) {
    std::vector<double> t(table.n());
    for (int i = 0; i < table.n(); ++i)
        t[i] = on_k[i] ? k_inverse(i, tau, table) : h_inverse(i, tau, table);
    return t;
}

/// Scalar consistency function of one assignment: alpha * (branch sum) - tau.
inline double g_subset(double tau, const std::vector<int>& k_indices, const BranchTable& table,
                       std::vector<double>* t_out = nullptr) {
    std::vector<char> on_k(table.n(), 0);
    for (int i : k_indices) {
        if (i < 0 || i >= table.n()) fail(errc::out_of_domain, "assignment index out of range");
        if (!table.has_k(i)) fail(errc::branch_absent, "assignment uses an absent branch");
        on_k[i] = 1;
    }
    auto t = subset_t(tau, on_k, table);
    double sum = 0.0;
    for (double ti : t) sum += ti;
    if (t_out) *t_out = std::move(t);
    return table.alpha * sum - tau;
}

namespace detail {

struct Assignment {
    std::vector<char> on_k;
    std::vector<int> indices;
};

inline Assignment make_assignment(unsigned mask, const std::vector<int>& pool, int n) {
    Assignment a;
    a.on_k.assign(n, 0);
    for (std::size_t b = 0; b < pool.size(); ++b)
        if (mask >> b & 1u) {
            a.on_k[pool[b]] = 1;
            a.indices.push_back(pool[b]);
        }
    return a;
}

inline double g_value(double tau, const Assignment& a, const BranchTable& table,
                      std::vector<double>* t_out = nullptr) {
    auto t = subset_t(tau, a.on_k, table);
    double sum = 0.0;
    for (double ti : t) sum += ti;
    if (t_out) *t_out = std::move(t);
    return table.alpha * sum - tau;
}

inline double g_slope(double tau, const Assignment& a, const BranchTable& table) {
    auto t = subset_t(tau, a.on_k, table);
    double s = 0.0;
    for (int i = 0; i < table.n(); ++i) s += inverse_slope(i, t[i], table);
    return table.alpha * s - 1.0;
}

inline double vec_rel_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a[i] - b[i]) /
                            std::max({1e-30, std::fabs(a[i]), std::fabs(b[i])}));
    return d;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

/// Finish one located root: rebuild t, recover and polish k, compute the
/// full-system residual, merge near-duplicates.
inline bool finish_solution(double tau, const Assignment& a, const BranchTable& table,
                            const SystemParams& params, const DerivedExponents& exps,
                            CountReport& report) {
    std::vector<double> t;
    g_value(tau, a, table, &t);
    auto k = recover_k(t, exps);
    k = newton_polish(k, params);
    for (const auto& sol : report.solutions)
        if (vec_rel_dist(sol.k, k) < params.tol.dedupe) return false;
    Solution sol;
    sol.assignment = a.indices;
    sol.tau = tau;
    sol.t = t;
    sol.k = k;
    sol.residual = max_abs(eval_f(k, params));
    report.solutions.push_back(std::move(sol));
    return true;
}

/// Count sign-change roots of one assignment equation over a geometric grid
/// on [tau_lo, tau_hi]; each bracket is bisected and registered.
inline void scan_assignment(const Assignment& a, const BranchTable& table,
                            const SystemParams& params, const DerivedExponents& exps,
                            double tau_lo, double tau_hi, CountReport& report) {
    const int ppd = std::max(params.tol.grid_min, 32);
    auto g = [&](double tau) { return g_value(tau, a, table); };

    double decades = std::log10(tau_hi / tau_lo);
    long long points = std::max<long long>(static_cast<long long>(decades * ppd) + 2, 16);
    auto tau_at = [&](long long m) {
        return tau_lo * std::exp(std::log(tau_hi / tau_lo) * m / double(points - 1));
    };

    std::vector<double> gv(points);
    for (long long m = 0; m < points; ++m) gv[m] = g(tau_at(m));

    auto refine_root = [&](double lo, double hi) {
        double scale = std::max(1.0, hi);
        double root = bisect_log(g, lo, hi, 0.0, params.tol.root * scale * 1e-2);
        if (finish_solution(root, a, table, params, exps, report)) {
            ++report.rho_star_star;
            report.certificates.push_back({a.indices, lo, hi});
        }
    };

    for (long long m = 0; m + 1 < points; ++m) {
        double glo = gv[m], ghi = gv[m + 1];
        if ((glo > 0) != (ghi > 0)) {
            refine_root(tau_at(m), tau_at(m + 1));
            continue;
        }
        // Tangency guard: a cell that approaches zero without a sign change
        // gets a one-level local re-scan.
        double scale = std::max(1.0, std::fabs(tau_at(m)));
        if (std::min(std::fabs(glo), std::fabs(ghi)) < 1e3 * params.tol.root * scale) {
            double a0 = tau_at(m), b0 = tau_at(m + 1);
            double prev_tau = a0, prev_g = glo;
            for (int s = 1; s <= 16; ++s) {
                double tau = a0 * std::exp(std::log(b0 / a0) * s / 16.0);
                double cur = g(tau);
                if ((prev_g > 0) != (cur > 0)) refine_root(prev_tau, tau);
                prev_tau = tau;
                prev_g = cur;
            }
        }
    }
}

/// tau floor for the scan: anchored so that the computed sign agrees with the
/// analytic limit, which also pulls any far-down crossing into range.
inline double anchored_floor(const Assignment& a, const BranchTable& table, double start,
                             bool expect_positive) {
    double lo = start;
    for (int it = 0; it < 40; ++it) {
        double g = g_value(lo, a, table);
        if (expect_positive ? g > 0.0 : g < 0.0) return lo;
        lo /= 100.0;
        if (lo < 1e-250) break;
    }
    return lo;
}

} // namespace detail

/// Unique-root path for p < 2 with the coupling at or above the largest
/// self-coupling: every branch is globally increasing, the consistency
/// equation has exactly one root, and its upward crossing is asserted.
inline CountReport count_alpha_large(const SystemParams& params, const DerivedExponents& exps) {
    if (!exps.sub()) fail(errc::wrong_regime, "unique-root path needs p < 2");
    auto table = make_branch_table(params, exps);
    if (table.context != BranchContext::SubIncreasing)
        fail(errc::wrong_regime, "unique-root path needs the coupling at or above eta_n");

    CountReport report;
    report.regime = exps.regime;
    detail::Assignment empty = detail::make_assignment(0, {}, params.n);

    auto g = [&](double tau) { return detail::g_value(tau, empty, table); };
    double lo = detail::anchored_floor(empty, table, 1.0, false);
    double hi = detail::grow_until([&](double tau) { return g(tau) > 0.0; }, std::max(1.0, lo));
    double root = detail::bisect_log(g, lo, hi, 0.0, params.tol.root * 1e-2);
    if (!(detail::g_slope(root, empty, table) > 0.0))
        fail(errc::no_convergence, "expected an upward crossing at the unique root");
    detail::finish_solution(root, empty, table, params, exps, report);
    report.certificates.push_back({{}, lo, hi});
    report.rho_star_star = 1;
    report.total = 1;
    report.kind = TotalKind::Exact;
    return report;
}

/// Unique-root path for p > 2 with the coupling at or below the smallest
/// self-coupling: every branch inverse is decreasing, so the consistency
/// function falls monotonically from a positive limit to -infinity.
inline CountReport count_super_single(const SystemParams& params, const DerivedExponents& exps) {
    if (!exps.super()) fail(errc::wrong_regime, "single-root path needs p > 2");
    auto table = make_branch_table(params, exps);
    if (table.context != BranchContext::SuperDecreasing)
        fail(errc::wrong_regime, "single-root path needs the coupling at or below eta_1");

    CountReport report;
    report.regime = exps.regime;
    detail::Assignment empty = detail::make_assignment(0, {}, params.n);
    auto g = [&](double tau) { return detail::g_value(tau, empty, table); };
    double lo = detail::anchored_floor(empty, table, 1.0, true);
    double hi = detail::grow_until([&](double tau) { return g(tau) < 0.0; }, std::max(1.0, lo));
    double root = detail::bisect_log(g, lo, hi, 0.0, params.tol.root * 1e-2);
    detail::finish_solution(root, empty, table, params, exps, report);
    report.certificates.push_back({{}, lo, hi});
    report.rho_star_star = 1;
    report.total = 1;
    report.kind = TotalKind::Exact;
    return report;
}

/// Subset-indexed counting in the peaked contexts. rho_star collects the
/// solutions sitting exactly at the extremal level, rho_star_star the
/// interior roots over every admissible assignment.
inline CountReport count_subsets(const SystemParams& params, const DerivedExponents& exps) {
    auto table = make_branch_table(params, exps);
    if (table.context != BranchContext::SubPeak && table.context != BranchContext::SuperPeak)
        fail(errc::wrong_regime, "subset counting needs a peaked branch context");
    const int n = params.n;
    const Peak peak = *table.peak;
    const double a_level = peak.value;

    CountReport report;
    report.regime = exps.regime;

    std::vector<int> pool;  // indices carrying a second branch
    for (int i = 0; i < n; ++i)
        if (table.has_k(i)) pool.push_back(i);

    // Indices whose branch points collapse onto the pivot's extremum carry no
    // distinct extremal-level choice.
    std::vector<int> level_pool;
    for (int i : pool)
        if (detail::snap_rel(params.eta[i], params.eta[peak.pivot], params.tol.exponent) != 0)
            level_pool.push_back(i);

    // Extremal-level solutions.
    for (unsigned mask = 0; mask < (1u << level_pool.size()); ++mask) {
        auto a = detail::make_assignment(mask, level_pool, n);
        double g = detail::g_value(a_level, a, table);
        double scale = std::max(1.0, a_level);
        if (std::fabs(g) <= params.tol.root * scale) {
            if (detail::finish_solution(a_level, a, table, params, exps, report))
                ++report.rho_star;
        } else if (std::fabs(g) <= params.tol.boundary * scale) {
            ++report.rho_star_ambiguous;
        }
    }

    // Interior roots per assignment.
    for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
        auto a = detail::make_assignment(mask, pool, n);
        const bool empty = a.indices.empty();
        if (table.context == BranchContext::SubPeak) {
            double hi = a_level * (1.0 - 1e-10);
            double start = empty ? a_level * 1e-9
                                 : std::min(a_level * 1e-9, 0.5 * table.alpha * peak.point);
            double lo = detail::anchored_floor(a, table, start, !empty);
            detail::scan_assignment(a, table, params, exps, lo, hi, report);
        } else {
            double lo = a_level * (1.0 + 1e-10);
            double hi;
            if (empty) {
                hi = detail::grow_until(
                    [&](double tau) { return detail::g_value(tau, a, table) < 0.0; },
                    2.0 * a_level);
            } else {
                // Rigorous ceiling from the linear growth of the second
                // branches: beyond it the assignment function stays positive.
                double c = -1.0, s = 0.0;
                for (int i : a.indices) {
                    c += table.alpha / (table.alpha - params.eta[i]);
                    s += a_level / (table.alpha - params.eta[i]);
                }
                double bound = table.alpha * s / std::max(c, 1e-12);
                hi = 10.0 * std::max(a_level * 1.01, bound);
                for (double probe : {2.0 * hi, 4.0 * hi})
                    if (!(detail::g_value(probe, a, table) > 0.0))
                        hi = probe * 4.0;  // extend on unexpected sign
            }
            detail::scan_assignment(a, table, params, exps, lo, hi, report);
        }
    }

    report.rho_star_star = static_cast<long long>(report.solutions.size()) - report.rho_star;
    report.total = report.rho_star + report.rho_star_star;
    report.kind = TotalKind::Exact;
    return report;
}

/// Closed form for p = 2: a unique explicit solution when the coupling falls
/// outside the self-coupling range, an infinite family on the constraint
/// surface when everything coincides, and no solution inside the gap.
inline CountReport closed_form_p2(const SystemParams& params, const DerivedExponents& exps) {
    if (exps.regime != Regime::Quadratic)
        fail(errc::wrong_regime, "closed form applies to p = 2 only");
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "closed form needs a constant coupling");
    const int n = params.n;
    CountReport report;
    report.regime = exps.regime;

    int rel_lo = detail::snap_rel(alpha, params.eta.front(), params.tol.exponent);
    int rel_hi = detail::snap_rel(alpha, params.eta.back(), params.tol.exponent);

    if (rel_hi > 0 || rel_lo < 0) {
        double s = -1.0;
        for (int j = 0; j < n; ++j) s += alpha / (alpha - params.eta[j]);
        std::vector<double> k(n);
        for (int i = 0; i < n; ++i) k[i] = pow_pos((alpha - params.eta[i]) * s, -exps.beta);
        Solution sol;
        sol.k = k;
        sol.t.resize(n);
        for (int i = 0; i < n; ++i) sol.t[i] = pow_pos(k[i], exps.q_common);
        sol.residual = detail::max_abs(eval_f(k, params));
        report.solutions.push_back(std::move(sol));
        report.total = 1;
        report.rho_star_star = 1;
        report.kind = TotalKind::Exact;
        return report;
    }
    if (rel_lo == 0 && rel_hi == 0) {
        report.kind = TotalKind::Infinite;
        report.note = "every positive vector on the surface alpha*sum(k_j^(2s*-2)) = 1 solves "
                      "the system; one symmetric representative is listed";
        std::vector<double> k(n, pow_pos(n * alpha, -exps.beta));
        Solution sol;
        sol.k = k;
        sol.residual = detail::max_abs(eval_f(k, params));
        report.solutions.push_back(std::move(sol));
        return report;
    }
    report.kind = TotalKind::None;
    report.note = "coupling sits inside the self-coupling gap; no positive solution exists";
    return report;
}

/// Existence-only fallback for non-constant couplings or mixed exponents:
/// certify whatever box family applies and report a lower bound.
inline CountReport existence_report(const SystemParams& params, const DerivedExponents& exps) {
    CountReport report;
    report.regime = exps.regime;
    report.kind = TotalKind::LowerBound;
    const int n = params.n;
    const int grid = std::max(params.tol.grid_min, 64);

    bool all_sub = true, all_super = true;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            all_sub = all_sub && params.p(i, j) < 2.0;
            all_super = all_super && params.p(i, j) > 2.0;
        }

    auto add_box_solution = [&](const Box& box) {
        auto k = solve_in_box(box, params, grid);
        Solution sol;
        sol.k = k;
        sol.residual = detail::max_abs(eval_f(k, params));
        for (const auto& existing : report.solutions)
            if (detail::vec_rel_dist(existing.k, k) < params.tol.dedupe) return;
        report.solutions.push_back(std::move(sol));
        ++report.total;
    };

    if (all_sub) {
        bool small = true;
        double astar = alpha_star(params);
        for (int i = 0; i < n && small; ++i)
            for (int j = 0; j < n && small; ++j)
                if (i != j && !(params.alpha(i, j) < astar)) small = false;
        if (small) {
            try {
                double eps = default_small_box_epsilon(params);
                for (const auto& box : small_alpha_boxes(params, eps)) {
                    auto cert = miranda_certify(box, params, grid);
                    bool good = cert.certified();
                    report.box_certificates.push_back(std::move(cert));
                    if (good) add_box_solution(box);
                }
                report.note = "small-coupling box family";
                return report;
            } catch (const solver_error& e) {
                if (e.code() != errc::epsilon_too_large) throw;
                report.note = "no epsilon clears the face margins at these tolerances";
                return report;
            }
        }
        double pv = 0.0;
        if (params.p_constant(&pv)) {
            // Inverse-positivity route through the transformed system.
            Matrix b = params.coupling_matrix();
            Matrix inv;
            try {
                inv = inverse(b, params.tol.root);
            } catch (const solver_error&) {
                report.note = "coupling matrix is singular; no certificate route";
                return report;
            }
            bool pos = true;
            for (int i = 0; i < n; ++i) {
                double row = 0.0;
                for (int j = 0; j < n; ++j) {
                    row += inv(i, j);
                    if (i != j && !(inv(i, j) > 0.0)) pos = false;
                }
                if (!(row > 0.0)) pos = false;
            }
            if (pos) {
                double qv = params.two_star() - pv;
                Box box = g_box(inv, exps);
                auto cert = miranda_certify_g(box, inv, pv, qv, params.tol, grid);
                bool good = cert.certified();
                report.box_certificates.push_back(std::move(cert));
                if (good) {
                    auto k = solve_in_box_g(box, inv, pv, qv, params.tol, grid);
                    k = newton_polish(k, params);
                    Solution sol;
                    sol.k = k;
                    sol.residual = detail::max_abs(eval_f(k, params));
                    report.solutions.push_back(std::move(sol));
                    report.total = 1;
                    report.note = "inverse-positivity box for the transformed system";
                    return report;
                }
            }
            report.note = "no certificate: coupling too large for the box family and the "
                          "inverse-positivity route failed";
            return report;
        }
        report.note = "no certificate route for this coupling pattern";
        return report;
    }

    if (all_super) {
        std::vector<double> top(n);
        double beta = exps.beta;
        for (int i = 0; i < n; ++i) top[i] = pow_pos(1.0 / params.eta[i], beta);
        double eps = *std::min_element(top.begin(), top.end()) / 10.0;
        for (int tries = 0; tries < 8; ++tries, eps /= 10.0) {
            Box box{std::vector<double>(n, eps), top};
            auto cert = miranda_certify(box, params, grid);
            bool good = cert.certified();
            report.box_certificates.push_back(std::move(cert));
            if (good) {
                add_box_solution(box);
                report.note = "single certified box above the quadratic exponent";
                return report;
            }
        }
        report.note = "no certified box found down to the epsilon floor";
        return report;
    }

    report.note = "mixed exponent pattern straddles 2; no certificate route implemented";
    return report;
}

/// Dispatch counter: closed form at p = 2, single-root paths at extreme
/// couplings, subset counting otherwise; non-constant data falls back to the
/// existence report.
inline CountReport count_synchronized(const SystemParams& params) {
    auto exps = derive(params);
    double alpha = 0.0;
    bool constant = params.alpha_constant(&alpha) && exps.regime != Regime::Mixed;
    if (!constant) return existence_report(params, exps);

    switch (exps.regime) {
    case Regime::Quadratic:
        return closed_form_p2(params, exps);
    case Regime::Subquadratic: {
        int rel = detail::snap_rel(alpha, params.eta.back(), params.tol.exponent);
        return rel >= 0 ? count_alpha_large(params, exps) : count_subsets(params, exps);
    }
    case Regime::Superquadratic: {
        int rel = detail::snap_rel(alpha, params.eta.front(), params.tol.exponent);
        return rel <= 0 ? count_super_single(params, exps) : count_subsets(params, exps);
    }
    case Regime::Mixed:
        break;
    }
    return existence_report(params, exps);
}

} // namespace syncsol
