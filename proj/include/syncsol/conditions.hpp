#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "syncsol/branches.hpp"
#include "syncsol/linalg.hpp"
#include "syncsol/params.hpp"

namespace syncsol::conditions {

// ---------------------------------------------------------------------------
// Every sufficient condition, threshold, and closed-form matrix quantity the
// engine certifies, each returning a verdict with a signed numeric slack so
// sweeps can locate condition boundaries by sign change.
// ---------------------------------------------------------------------------

struct Verdict {
    std::string id;
    bool holds = false;
    double slack = 0.0;  ///< signed margin; positive means satisfied
    std::vector<std::pair<std::string, double>> echo;

    double get(const std::string& key) const {
        for (const auto& [k, v] : echo)
            if (k == key) return v;
        fail(errc::invalid_config, "missing echo key " + key);
    }
};

namespace detail {

inline Verdict make_verdict(std::string id, double slack, double tol_root,
                            std::vector<std::pair<std::string, double>> echo = {}) {
    Verdict v;
    v.id = std::move(id);
    v.echo = std::move(echo);
    if (std::fabs(slack) <= tol_root) slack = 0.0;
    v.slack = slack;
    v.holds = slack >= 0.0;
    return v;
}

} // namespace detail

// -- closed-form matrix quantities -------------------------------------------

struct InversePositivityReport {
    Matrix matrix;
    Matrix inverse;
    bool off_diag_positive = false;
    bool row_sums_positive = false;
    double det = 0.0;
    double identity_residual = 0.0;

    bool holds() const { return off_diag_positive && row_sums_positive; }
    std::vector<double> row_sums() const {
        std::vector<double> s(inverse.rows(), 0.0);
        for (std::size_t i = 0; i < inverse.rows(); ++i)
            for (std::size_t j = 0; j < inverse.cols(); ++j) s[i] += inverse(i, j);
        return s;
    }
};

/// Invert by partial-pivot elimination and report the sign structure the
/// transformed-system route requires: positive off-diagonal entries and
/// positive row sums.
inline InversePositivityReport inverse_positivity(const Matrix& b, double root_tol = 1e-10) {
    const std::size_t n = b.rows();
    if (n != b.cols() || n == 0) fail(errc::dimension_mismatch, "matrix must be square");
    InversePositivityReport rep;
    rep.matrix = b;
    rep.det = determinant(b);
    rep.inverse = inverse(b, root_tol);  // throws SINGULAR on a vanishing pivot

    rep.off_diag_positive = true;
    rep.row_sums_positive = true;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += rep.inverse(i, j);
            if (i != j && !(rep.inverse(i, j) > 0.0)) rep.off_diag_positive = false;
        }
        if (!(row > 0.0)) rep.row_sums_positive = false;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t l = 0; l < n; ++l) v += rep.inverse(i, l) * b(l, j);
            worst = std::max(worst, std::fabs(v - (i == j ? 1.0 : 0.0)));
        }
    rep.identity_residual = worst;
    if (worst > 1e-8) fail(errc::singular, "inverse failed its identity residual check");
    return rep;
}

/// Determinant of the constant-coupling matrix (diagonal eta, off-diagonal
/// alpha) in closed form: prod_j(eta_j - alpha) * (1 + sum_k alpha/(eta_k - alpha)).
inline double constant_coupling_det(const std::vector<double>& eta, double alpha,
                                    double pole_tol = 1e-12) {
    double prod = 1.0, sum = 1.0;
    for (double e : eta) {
        if (std::fabs(e - alpha) <= pole_tol * std::max(1.0, std::fabs(e)))
            fail(errc::pole, "coupling coincides with a self-coupling");
        prod *= e - alpha;
        sum += alpha / (e - alpha);
    }
    return prod * sum;
}

/// Closed-form inverse of the constant-coupling matrix. Off-diagonal entries
/// are -alpha * prod_{k != i,j}(eta_k - alpha) / det (empty product = 1);
/// diagonal entries reuse the determinant of the reduced system.
inline Matrix closed_form_inverse(const std::vector<double>& eta, double alpha) {
    const int n = static_cast<int>(eta.size());
    double det = constant_coupling_det(eta, alpha);
    if (det == 0.0) fail(errc::pole, "closed-form inverse needs a nonzero determinant");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                std::vector<double> reduced;
                for (int l = 0; l < n; ++l)
                    if (l != i) reduced.push_back(eta[l]);
                double det_red = reduced.empty() ? 1.0 : constant_coupling_det(reduced, alpha);
                a(i, j) = det_red / det;
            } else {
                double prod = 1.0;
                for (int l = 0; l < n; ++l)
                    if (l != i && l != j) prod *= eta[l] - alpha;
                a(i, j) = -alpha * prod / det;
            }
        }
    }
    return a;
}

/// Closed-form row sums prod_{j != i}(alpha - eta_j) / |det|, valid when the
/// coupling dominates every self-coupling.
inline std::vector<double> closed_form_row_sums(const std::vector<double>& eta, double alpha) {
    const int n = static_cast<int>(eta.size());
    double det = std::fabs(constant_coupling_det(eta, alpha));
    std::vector<double> sums(n);
    for (int i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < n; ++j)
            if (j != i) prod *= alpha - eta[j];
        sums[i] = prod / det;
    }
    return sums;
}

// -- block coupling templates -------------------------------------------------

enum class TemplateKind { A, B, C };

namespace detail {

inline Matrix template_matrix(TemplateKind kind, const std::vector<double>& eta, double a1,
                              double a2, double a3) {
    switch (kind) {
    case TemplateKind::A: {
        Matrix b(3, 3);
        double vals[3][3] = {{eta[0], a1, a1}, {a1, eta[1], a2}, {a1, a2, eta[2]}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = vals[i][j];
        return b;
    }
    case TemplateKind::B: {
        Matrix b(4, 4);
        double vals[4][4] = {{eta[0], a1, a1, a1},
                             {a1, eta[1], a2, a2},
                             {a1, a2, eta[2], a2},
                             {a1, a2, a2, eta[3]}};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) b(i, j) = vals[i][j];
        return b;
    }
    case TemplateKind::C: {
        Matrix b(4, 4);
        double vals[4][4] = {{eta[0], a2, a1, a1},
                             {a2, eta[1], a1, a1},
                             {a1, a1, eta[2], a3},
                             {a1, a1, a3, eta[3]}};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) b(i, j) = vals[i][j];
        return b;
    }
    }
    fail(errc::invalid_config, "unknown template kind");
}

} // namespace detail

/// Match B against one of the three block coupling templates, verify the
/// template inequalities, then run the inverse-positivity check.
inline Verdict template_check(const Matrix& b, TemplateKind kind, double root_tol = 1e-10) {
    const std::size_t want = kind == TemplateKind::A ? 3 : 4;
    if (b.rows() != want || b.cols() != want)
        fail(errc::dimension_mismatch, "template has a fixed dimension");
    const int n = static_cast<int>(want);
    std::vector<double> eta(n);
    for (int i = 0; i < n; ++i) eta[i] = b(i, i);

    double a1 = 0, a2 = 0, a3 = 0;
    if (kind == TemplateKind::A) { a1 = b(0, 1); a2 = b(1, 2); }
    if (kind == TemplateKind::B) { a1 = b(0, 1); a2 = b(1, 2); }
    if (kind == TemplateKind::C) { a1 = b(0, 2); a2 = b(0, 1); a3 = b(2, 3); }

    Matrix expect = detail::template_matrix(kind, eta, a1, a2, a3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!rel_close(b(i, j), expect(i, j), 1e-9))
                fail(errc::dimension_mismatch, "matrix does not follow the template pattern");

    double ineq = kInf;
    std::string id;
    switch (kind) {
    case TemplateKind::A:
        id = "prop3.2a";
        ineq = std::min(a1 - std::max(eta[0], a2), a2 - (eta[1] + eta[2]));
        break;
    case TemplateKind::B:
        id = "prop3.2b";
        ineq = std::min(a1 - std::max(eta[0], a2), a2 - std::max({eta[1], eta[2], eta[3]}));
        break;
    case TemplateKind::C:
        id = "prop3.2c";
        ineq = std::min({a1 - std::max(a2, a3), a2 - (eta[0] + eta[1]), a3 - (eta[2] + eta[3])});
        break;
    }

    bool inv_ok = false;
    double row_min = 0.0, off_min = 0.0;
    try {
        auto rep = inverse_positivity(b, root_tol);
        inv_ok = rep.holds();
        auto sums = rep.row_sums();
        row_min = *std::min_element(sums.begin(), sums.end());
        off_min = kInf;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) off_min = std::min(off_min, rep.inverse(i, j));
    } catch (const solver_error&) {
        inv_ok = false;
    }

    auto v = detail::make_verdict(id, ineq, root_tol,
                                  {{"template_margin", ineq},
                                   {"inverse_offdiag_min", off_min},
                                   {"inverse_rowsum_min", row_min}});
    v.holds = v.holds && inv_ok;
    return v;
}

/// Empirical lower bound on the perturbation radius that preserves inverse
/// positivity around the constant-coupling matrix: bisection on the radius
/// with a fixed set of extreme perturbation directions. Never tight.
inline double perturbation_radius_estimate(const std::vector<double>& eta, double alpha,
                                           int directions = 48) {
    const int n = static_cast<int>(eta.size());
    std::mt19937_64 rng(0x5eedu);
    std::vector<Matrix> dirs;
    std::uniform_int_distribution<int> coin(0, 1);
    for (int d = 0; d < directions; ++d) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) m(i, j) = coin(rng) ? 1.0 : -1.0;
        dirs.push_back(std::move(m));
    }
    auto passes = [&](double radius) {
        for (const auto& d : dirs) {
            Matrix b(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    b(i, j) = i == j ? eta[i] : alpha + radius * d(i, j);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j && !(b(i, j) > 0.0)) return false;
            try {
                if (!inverse_positivity(b).holds()) return false;
            } catch (const solver_error&) {
                return false;
            }
        }
        return true;
    };
    double lo = 0.0, hi = alpha * 0.999;
    if (!passes(hi * 1e-9)) return 0.0;
    lo = hi * 1e-9;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (passes(mid) ? lo : hi) = mid;
    }
    return lo;
}

// -- regime guards ------------------------------------------------------------

namespace detail {

inline void need_sub(const DerivedExponents& exps) {
    if (!exps.sub()) fail(errc::wrong_regime, "condition needs constant p < 2");
}

inline void need_super(const DerivedExponents& exps) {
    if (!exps.super()) fail(errc::wrong_regime, "condition needs constant p in (2, 2s*)");
}

inline double const_alpha(const SystemParams& params) {
    double a = 0.0;
    if (!params.alpha_constant(&a))
        fail(errc::wrong_regime, "condition needs a constant coupling");
    return a;
}

} // namespace detail

// -- sufficient conditions, p < 2 ----------------------------------------------

/// Uniqueness window just below the top self-coupling:
/// 1/alpha + q*beta/(eta_n - alpha) >= sum_{i<n} 1/(eta_n - eta_i).
inline Verdict upper_window_uniqueness(const SystemParams& params, const DerivedExponents& exps) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    const int n = params.n;
    double eta_n = params.eta.back();
    if (!(params.eta[n - 2] < alpha && alpha < eta_n))
        fail(errc::wrong_regime, "window condition needs eta_{n-1} < alpha < eta_n");
    double qb = exps.q_common * exps.beta;
    double sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) sum += 1.0 / (eta_n - params.eta[i]);
    double slack = 1.0 / alpha + qb / (eta_n - alpha) - sum;
    double window_lo = eta_n - qb / sum;
    return detail::make_verdict("lem4.5", slack, params.tol.root,
                                {{"lhs", 1.0 / alpha + qb / (eta_n - alpha)},
                                 {"rhs", sum},
                                 {"window_lower_edge", window_lo}});
}

/// Small-coupling multiplicity bound (at least 2^n - 1 solutions):
/// alpha (eta_n-alpha)^{(2-p)beta} sum_i (eta_i-alpha)^{-q beta} <=
/// kappa^{(2-p)beta} - kappa^{q beta}.
inline Verdict small_coupling_multiplicity(const SystemParams& params,
                                           const DerivedExponents& exps) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    if (!(alpha < params.eta.front()))
        fail(errc::wrong_regime, "multiplicity bound needs alpha below eta_1");
    double qb = exps.q_common * exps.beta;
    double pb = (2.0 - exps.p_common) * exps.beta;
    double sum = 0.0;
    for (double e : params.eta) sum += pow_pos(e - alpha, -qb);
    double lhs = alpha * pow_pos(params.eta.back() - alpha, pb) * sum;
    double rhs = pow_pos(exps.kappa, pb) - pow_pos(exps.kappa, qb);
    return detail::make_verdict("lem4.6", rhs - lhs, params.tol.root,
                                {{"lhs", lhs}, {"rhs", rhs}});
}

/// Exact-multiplicity condition with a free parameter xi in (0,1). The level
/// part scales the small-coupling bound by xi; the slope part is evaluated in
/// its printed form and in the rearranged proof form (they agree identically
/// and both are echoed).
inline Verdict exact_multiplicity_xi(const SystemParams& params, const DerivedExponents& exps,
                                     double xi) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    if (!(alpha < params.eta.front()))
        fail(errc::wrong_regime, "exact multiplicity needs alpha below eta_1");
    if (!(xi > 0.0 && xi < 1.0)) fail(errc::invalid_config, "xi must lie in (0,1)");
    const int n = params.n;
    const double kap = exps.kappa;
    double qb = exps.q_common * exps.beta;
    double eta_n = params.eta.back();

    double sum = 0.0;
    for (double e : params.eta) sum += pow_pos(e - alpha, -qb);
    double level_lhs = alpha * pow_pos(eta_n - alpha, qb - 1.0) * sum;
    double level_rhs = xi * (pow_pos(kap, qb - 1.0) - pow_pos(kap, qb));
    double level_slack = level_rhs - level_lhs;

    double denom = pow_pos(xi, (kap - 1.0) / kap) - 1.0;
    double printed = eta_n - alpha * ((n - 1) / denom - (2.0 - exps.p_common) * exps.beta);
    double proof = (eta_n - alpha) - alpha * ((n - 1) / denom - 1.0 / (1.0 - kap));
    double slope_slack = printed;

    double slack = std::min(level_slack, slope_slack);
    return detail::make_verdict("lem4.7", slack, params.tol.root,
                                {{"xi", xi},
                                 {"level_slack", level_slack},
                                 {"slope_slack_printed", printed},
                                 {"slope_slack_proof_form", proof}});
}

/// Existence search over xi for the exact-multiplicity condition.
inline Verdict exact_multiplicity_xi_exists(const SystemParams& params,
                                            const DerivedExponents& exps) {
    double best = -kInf, best_xi = 0.5;
    for (int m = 1; m <= 49; ++m) {
        double xi = m / 50.0;
        auto v = exact_multiplicity_xi(params, exps, xi);
        if (v.slack > best) { best = v.slack; best_xi = xi; }
    }
    auto v = exact_multiplicity_xi(params, exps, best_xi);
    v.id = "lem4.7";
    v.echo.emplace_back("best_xi", best_xi);
    return v;
}

/// The explicit post-condition bounds that imply the xi-condition.
inline Verdict exact_multiplicity_xi_simple(const SystemParams& params,
                                            const DerivedExponents& exps) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    const int n = params.n;
    double qb = exps.q_common * exps.beta;
    double pb = (2.0 - exps.p_common) * exps.beta;
    double eta1 = params.eta.front(), eta_n = params.eta.back();
    double b1 = 0.5 * eta1 - alpha;
    double b2 = pow_pos(2.0, 1.0 / pb - 1.0) / (n - 1) * eta_n - alpha;
    double sum = 0.0;
    for (double e : params.eta) sum += pow_pos(e - 0.5 * eta1, -qb);
    double b3 = (0.5 / pb) * pow_pos(exps.kappa, qb) * pow_pos(eta_n, 1.0 - qb) / sum - alpha;
    return detail::make_verdict("lem4.7simple", std::min({b1, b2, b3}), params.tol.root,
                                {{"half_eta1_margin", b1},
                                 {"top_coupling_margin", b2},
                                 {"scale_margin", b3}});
}

/// chi-based exact-multiplicity condition. chi_i must be positive for the
/// slope bound to make sense; a nonpositive chi is reported in the echo and
/// forces a failing verdict.
inline Verdict exact_multiplicity_chi(const SystemParams& params, const DerivedExponents& exps) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    if (!(alpha < params.eta.front()))
        fail(errc::wrong_regime, "exact multiplicity needs alpha below eta_1");
    const int n = params.n;
    const double kap = exps.kappa;
    double qb = exps.q_common * exps.beta;
    double eta_n = params.eta.back();

    double sum = 0.0;
    for (double e : params.eta) sum += pow_pos(e - alpha, -qb);
    double level_lhs = alpha * pow_pos(eta_n - alpha, qb - 1.0) * sum;
    double level_rhs = pow_pos(kap, qb - 1.0) - pow_pos(kap, qb);
    double level_slack = level_rhs - level_lhs;

    double core = kap * pow_pos(1.0 - kap, (1.0 - kap) / kap) *
                  pow_pos(alpha * sum, -(1.0 - kap) / kap);
    double chi_min = kInf;
    double chi_sum = 0.0;
    for (int i = 1; i < n; ++i) {
        double chi = core - (params.eta[i] - alpha);
        chi_min = std::min(chi_min, chi);
        if (chi > 0.0) chi_sum += alpha / chi;
    }
    double slope_slack = 1.0 - (chi_sum - qb * alpha / (eta_n - alpha));

    auto v = detail::make_verdict("lem4.8", std::min(level_slack, slope_slack), params.tol.root,
                                  {{"level_slack", level_slack},
                                   {"slope_slack", slope_slack},
                                   {"chi_min", chi_min}});
    if (!(chi_min > 0.0)) {
        v.holds = false;  // CHI_NONPOSITIVE: the positivity step failed numerically
        v.echo.emplace_back("chi_nonpositive", 1.0);
    }
    return v;
}

/// The explicit post-condition bounds that imply the chi-condition.
inline Verdict exact_multiplicity_chi_simple(const SystemParams& params,
                                             const DerivedExponents& exps) {
    detail::need_sub(exps);
    double alpha = detail::const_alpha(params);
    const int n = params.n;
    double qb = exps.q_common * exps.beta;
    double pb = (2.0 - exps.p_common) * exps.beta;
    double eta1 = params.eta.front(), eta_n = params.eta.back();
    double b1 = 0.5 * eta1 - alpha;
    double b2 = eta_n / (n - 1) - alpha;
    double sum = 0.0;
    for (double e : params.eta) sum += pow_pos(e - 0.5 * eta1, -qb);
    double b3 = (1.0 / pb) * pow_pos(exps.kappa, qb) * pow_pos(2.0 * eta_n, 1.0 - qb) / sum - alpha;
    return detail::make_verdict("lem4.8simple", std::min({b1, b2, b3}), params.tol.root,
                                {{"half_eta1_margin", b1},
                                 {"top_coupling_margin", b2},
                                 {"scale_margin", b3}});
}

/// Two-block uniqueness threshold for n = 2m equations split between two
/// self-coupling values. Cross-checked against the equivalent quadratic form
/// alpha^2 - ((m+1) eta'' - (m-1) eta') alpha + eta' eta'' > 0.
inline Verdict two_block_uniqueness(int m, double eta_low, double eta_high, double alpha,
                                    double root_tol = 1e-10) {
    if (m < 1) fail(errc::invalid_config, "block size must be at least 1");
    if (!(eta_low <= eta_high)) fail(errc::wrong_order, "eta' must not exceed eta''");
    double b = (m + 1) * eta_high - (m - 1) * eta_low;
    double disc = (m + 1.0) * (m + 1.0) * eta_high * eta_high +
                  (m - 1.0) * (m - 1.0) * eta_low * eta_low -
                  2.0 * (m * m + 1.0) * eta_low * eta_high;
    if (disc < -1e-12 * std::max(1.0, b * b))
        fail(errc::no_convergence, "discriminant unexpectedly negative");
    disc = std::max(disc, 0.0);
    double threshold = 0.5 * (b + std::sqrt(disc));
    double quad = alpha * alpha - b * alpha + eta_low * eta_high;
    auto v = detail::make_verdict("thm2.2d", alpha - threshold, root_tol,
                                  {{"threshold", threshold}, {"quadratic_form", quad}});
    // Above eta'' the two formulations agree. The quadratic form loses
    // precision near its root, so only decisive values are compared.
    double quad_noise = 1e-12 * std::max(1.0, b * b);
    if (alpha > eta_high && v.slack != 0.0 && std::fabs(quad) > quad_noise &&
        (v.slack > 0.0) != (quad > 0.0))
        fail(errc::no_convergence, "threshold and quadratic forms disagree");
    return v;
}

/// Algebraic by-products of the two-block reduction, checked on a computed
/// pair (t_1, t_{m+1}) from the unique solution of the reduced system:
/// ordering, the gap-weighted comparison, and the strict block inequality
/// that the uniqueness threshold guarantees.
inline Verdict two_block_pair_checks(int m, double eta_low, double eta_high, double alpha,
                                     double t_first, double t_second, double root_tol = 1e-10) {
    if (m < 1) fail(errc::invalid_config, "block size must be at least 1");
    if (!(eta_low <= eta_high)) fail(errc::wrong_order, "eta' must not exceed eta''");
    double scale = std::max(1.0, std::fabs(t_first));
    double order_margin = (t_second - t_first) / scale;
    double gap_margin = ((alpha - eta_low) * t_first - (alpha - eta_high) * t_second) / scale;
    double strict_margin = (m * alpha * t_first - (eta_high + (m - 1) * alpha) * t_second) / scale;
    auto v = detail::make_verdict("thm2.2d-pair",
                                  std::min({order_margin, gap_margin, strict_margin}), root_tol,
                                  {{"order_margin", order_margin},
                                   {"gap_margin", gap_margin},
                                   {"strict_margin", strict_margin}});
    // the third inequality is strict: a vanishing margin does not qualify
    if (!(strict_margin > 0.0)) v.holds = false;
    return v;
}

// -- sufficient conditions, p > 2 ----------------------------------------------

/// Near-critical uniqueness: p >= (eta_1/alpha)*2 + (1 - eta_1/alpha)*2s*.
/// The proof-equivalent form (eta_1 - alpha)/kappa <= eta_1 is cross-checked.
inline Verdict near_critical_uniqueness(const SystemParams& params,
                                        const DerivedExponents& exps) {
    detail::need_super(exps);
    double alpha = detail::const_alpha(params);
    double eta1 = params.eta.front();
    if (!(alpha > eta1))
        fail(errc::wrong_regime, "near-critical uniqueness needs alpha above eta_1");
    double threshold = (eta1 / alpha) * 2.0 + (1.0 - eta1 / alpha) * exps.two_star;
    double slack = exps.p_common - threshold;
    double proof_slack = eta1 - (eta1 - alpha) / exps.kappa;
    return detail::make_verdict("thm2.5c", slack, params.tol.root,
                                {{"threshold", threshold}, {"proof_form_slack", proof_slack}});
}

/// Uniqueness window just above the bottom self-coupling: the slope bound
/// -sum_{i>=2} alpha/(eta_i - eta_1) + alpha/(alpha - eta_1) - 1 must stay
/// positive for the second assignment equation to rise monotonically.
inline Verdict lower_window_uniqueness(const SystemParams& params, const DerivedExponents& exps) {
    detail::need_super(exps);
    double alpha = detail::const_alpha(params);
    const int n = params.n;
    double eta1 = params.eta.front();
    if (!(n >= 2 && eta1 < alpha && alpha < params.eta[1]))
        fail(errc::wrong_regime, "window condition needs eta_1 < alpha < eta_2");
    double sum = 0.0;
    for (int i = 1; i < n; ++i) sum += alpha / (params.eta[i] - eta1);
    double slack = -sum + alpha / (alpha - eta1) - 1.0;
    return detail::make_verdict("delta0", slack, params.tol.root, {{"slope_bound", slack}});
}

/// Bounds on the extremal level for -1 < kappa < 0:
/// min{1, sqrt(alpha-eta_1)} <= A <= (e^{1/e} + 1) max{1, sqrt(alpha-eta_1)}.
inline Verdict extremum_bounds(const SystemParams& params, const DerivedExponents& exps) {
    detail::need_super(exps);
    if (!(exps.kappa > -1.0))
        fail(errc::wrong_regime, "bounds need p below 1 + 2s*/2");
    double alpha = detail::const_alpha(params);
    if (!(alpha > params.eta.front()))
        fail(errc::wrong_regime, "bounds need alpha above eta_1");
    Peak peak = compute_peak(params, exps);
    double root_gap = std::sqrt(alpha - params.eta.front());
    double lo = std::min(1.0, root_gap);
    double hi = (std::exp(std::exp(-1.0)) + 1.0) * std::max(1.0, root_gap);
    double slack = std::min(peak.value - lo, hi - peak.value);
    return detail::make_verdict("lem7.3", slack, params.tol.root,
                                {{"extremum", peak.value}, {"lower", lo}, {"upper", hi}});
}

struct DecayRow {
    double p = 0.0;
    double t_high = 0.0;  ///< upper branch point of the last admissible index
    double ratio = 0.0;   ///< t_high / (p-2)^xi
    double bound_margin = 0.0;  ///< A/(alpha - eta_j) - t_high, nonnegative expected
};

struct DecayTable {
    std::vector<DecayRow> rows;
    Verdict verdict;
};

/// Decay of the upper branch point as p drops to 2: tabulates
/// t_high(p)/(p-2)^xi along a decreasing sequence. The claim under test is an
/// upper bound, so the verdict accepts a tail that is either non-increasing
/// or confined within a factor-10 band.
inline DecayTable branch_point_decay(const SystemParams& params, double xi,
                                     const std::vector<double>& p_sequence) {
    if (!(xi > 0.0 && xi < 1.0)) fail(errc::invalid_config, "xi must lie in (0,1)");
    double alpha = detail::const_alpha(params);
    int j = -1;
    for (int i = 0; i < params.n; ++i)
        if (params.eta[i] < alpha) j = i;
    if (j < 0) fail(errc::wrong_regime, "decay table needs alpha above eta_1");

    DecayTable table;
    for (double p : p_sequence) {
        RawParams raw;
        raw.n = params.n;
        raw.dim = params.dim;
        raw.s = params.s;
        raw.eta = params.eta;
        raw.alpha_matrix = params.alpha;
        raw.p_scalar = p;
        raw.tol = params.tol;
        auto sp = validate(raw);
        auto exps = derive(sp);
        if (!exps.super()) fail(errc::wrong_regime, "sequence leaves the p > 2 range");
        auto bt = make_branch_table(sp, exps);
        if (!bt.has_k(j)) fail(errc::wrong_regime, "last admissible index lost its branch");
        DecayRow row;
        row.p = p;
        row.t_high = bt.entries[j].t_high;
        row.ratio = row.t_high / pow_pos(p - 2.0, xi);
        row.bound_margin = bt.peak->value / (alpha - params.eta[j]) - row.t_high;
        table.rows.push_back(row);
    }

    std::size_t tail_start = table.rows.size() / 2;
    double tail_max = -kInf, tail_min = kInf;
    bool nonincreasing = true;
    for (std::size_t r = tail_start; r < table.rows.size(); ++r) {
        tail_max = std::max(tail_max, table.rows[r].ratio);
        tail_min = std::min(tail_min, table.rows[r].ratio);
        if (r > tail_start &&
            table.rows[r].ratio > table.rows[r - 1].ratio * 1.05)
            nonincreasing = false;
    }
    double span = tail_max / tail_min;
    bool holds = nonincreasing || span < 10.0;
    table.verdict = detail::make_verdict(
        "lem7.4", holds ? 1.0 : -span, params.tol.root,
        {{"tail_span", span}, {"tail_nonincreasing", nonincreasing ? 1.0 : 0.0}});
    table.verdict.holds = holds;
    return table;
}

} // namespace syncsol::conditions
