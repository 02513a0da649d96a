#pragma once

#include <random>
#include <vector>

#include "syncsol/counting.hpp"

namespace testutil {

using namespace syncsol;

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    }
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
};

inline std::vector<double> random_eta(Rng& rng, int n, double min_gap = 0.0) {
    std::vector<double> eta(n);
    for (auto& e : eta) e = rng.uniform(0.5, 2.5);
    std::sort(eta.begin(), eta.end());
    if (min_gap > 0.0)
        for (int i = 1; i < n; ++i) eta[i] = std::max(eta[i], eta[i - 1] + min_gap);
    return eta;
}

inline bool alpha_clear_of_eta(double alpha, const std::vector<double>& eta, double margin) {
    for (double e : eta)
        if (std::fabs(alpha - e) < margin * std::max(1.0, e)) return false;
    return true;
}

/// Margin diagnostics used to exclude genuinely unstable boundary instances
/// from engine/oracle agreement suites: extremal-level values, slopes at the
/// located roots, and pairwise solution separation all need clearance.
inline bool non_boundary(const SystemParams& params, const CountReport& report) {
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha)) return false;
    if (!alpha_clear_of_eta(alpha, params.eta, 0.02)) return false;
    auto exps = derive(params);
    if (exps.regime == Regime::Quadratic) return true;

    auto table = make_branch_table(params, exps);
    if (table.peaked()) {
        std::vector<int> pool;
        for (int i = 0; i < params.n; ++i)
            if (table.has_k(i)) pool.push_back(i);
        double level = table.peak->value;
        for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
            auto a = syncsol::detail::make_assignment(mask, pool, params.n);
            double g = syncsol::detail::g_value(level, a, table);
            if (std::fabs(g) < 1e-4 * std::max(1.0, level)) return false;
        }
        for (const auto& sol : report.solutions) {
            if (std::isnan(sol.tau)) continue;
            auto a = syncsol::detail::make_assignment(0, {}, params.n);
            a.on_k.assign(params.n, 0);
            for (int i : sol.assignment) a.on_k[i] = 1;
            a.indices = sol.assignment;
            if (std::fabs(syncsol::detail::g_slope(sol.tau, a, table)) < 1e-5) return false;
        }
    }
    for (std::size_t i = 0; i < report.solutions.size(); ++i)
        for (std::size_t j = i + 1; j < report.solutions.size(); ++j)
            if (syncsol::detail::vec_rel_dist(report.solutions[i].k, report.solutions[j].k) <
                100.0 * params.tol.dedupe)
                return false;
    return true;
}

/// Random constant-(p, alpha) instance per regime, redrawn until it passes
/// the non-boundary filter. kind: 0 sub, 1 super, 2 quadratic.
inline SystemParams draw_instance(Rng& rng, int kind, int n, CountReport* report_out = nullptr) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        int dim = rng.pick(3, 5);
        double s = rng.uniform(0.3, 0.8);
        double two_star = 2.0 * dim / (dim - 2.0 * s);
        auto eta = random_eta(rng, n);
        double p = 0.0, alpha = 0.0;
        if (kind == 0) {
            p = rng.uniform(-1.0, 1.9);
            alpha = rng.uniform(0.03, 1.5 * eta.back());
        } else if (kind == 1) {
            p = rng.uniform(2.03, 2.0 + 0.85 * (two_star - 2.0));
            alpha = rng.uniform(0.05, 2.5 * eta.back());
        } else {
            p = 2.0;
            alpha = rng.uniform(0.05, 2.5 * eta.back());
        }
        if (!alpha_clear_of_eta(alpha, eta, 0.03)) continue;
        SystemParams params;
        try {
            params = make_params(n, dim, s, eta, alpha, p);
        } catch (const solver_error&) {
            continue;
        }
        try {
            auto report = count_synchronized(params);
            if (!non_boundary(params, report)) continue;
            if (report_out) *report_out = report;
            return params;
        } catch (const solver_error&) {
            continue;  // numerically unstable draw; try another
        }
    }
    fail(errc::no_convergence, "instance generator exhausted its attempts");
}

} // namespace testutil
