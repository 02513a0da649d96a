#include <doctest.h>

#include "helpers.hpp"
#include "syncsol/branches.hpp"

using namespace syncsol;

namespace {

BranchTable table_for(double alpha, double p, std::vector<double> eta, int dim = 3,
                      double s = 0.5) {
    const int n = static_cast<int>(eta.size());
    auto params = make_params(n, dim, s, std::move(eta), alpha, p);
    return make_branch_table(params, derive(params));
}

} // namespace

TEST_SUITE("branches") {

TEST_CASE("scalar family values") {
    auto p1 = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    auto e1 = derive(p1);
    CHECK(f_scalar(1.0, 0, 0.5, e1, p1.eta) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f_scalar(4.0 / 9.0, 0, 0.5, e1, p1.eta) == doctest::Approx(4.0 / 9.0).epsilon(1e-13));

    auto p2 = make_params(2, 3, 0.5, {1.0, 1.0}, 2.0, 2.4);
    auto e2 = derive(p2);
    CHECK(f_scalar(1.0, 0, 2.0, e2, p2.eta) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(f_scalar(0.0, 0, 0.5, e1, p1.eta), solver_error);
}

TEST_CASE("extremum closed forms") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    auto peak = compute_peak(params, derive(params));
    CHECK(peak.value == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(peak.point == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(peak.pivot == 1);

    auto p2 = make_params(2, 3, 0.5, {1.0, 1.25}, 1.0, 1.0);
    auto pk2 = compute_peak(p2, derive(p2));
    CHECK(pk2.value == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pk2.point == doctest::Approx(4.0).epsilon(1e-13));

    auto p3 = make_params(2, 3, 0.5, {1.0, 1.0}, 2.0, 2.4);
    auto e3 = derive(p3);
    auto pk3 = compute_peak(p3, e3);
    double a_expected = pow_pos(2.0 / 3.0, -0.4) + pow_pos(2.0 / 3.0, 0.6);
    CHECK(pk3.value == doctest::Approx(a_expected).epsilon(1e-13));
    CHECK(pk3.point == doctest::Approx(pow_pos(2.0 / 3.0, 0.6)).epsilon(1e-13));
    CHECK(pk3.pivot == 0);
    CHECK(f_scalar(pk3.point, 0, 2.0, e3, p3.eta) == doctest::Approx(pk3.value).epsilon(1e-12));
}

TEST_CASE("wrong-side extremum requests fail") {
    auto p = make_params(2, 3, 0.5, {1.0, 1.0}, 2.0, 1.0);
    CHECK_THROWS_AS(compute_peak(p, derive(p)), solver_error);
    auto p2 = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 2.4);
    CHECK_THROWS_AS(compute_peak(p2, derive(p2)), solver_error);
}

TEST_CASE("scale bounds") {
    auto p = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    auto e = derive(p);
    double s = s_bound(0, p, e);
    CHECK(s == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(f_scalar(s, 0, 0.5, e, p.eta) == doctest::Approx(0.0).epsilon(1e-12));

    auto peq = make_params(2, 3, 0.5, {1.0, 2.0}, 1.0, 1.0);
    CHECK(s_bound(0, peq, derive(peq)) == kInf);  // alpha snaps onto eta_1

    auto psup = make_params(2, 3, 0.5, {2.0, 3.0}, 1.0, 2.4);
    CHECK(s_bound(0, psup, derive(psup)) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("branch points at and away from the pivot") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    auto exps = derive(params);
    auto peak = compute_peak(params, exps);
    auto [lo, hi] = branch_points(1, peak, params, exps);
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-13));
    REQUIRE(hi.has_value());
    CHECK(*hi == doctest::Approx(1.0).epsilon(1e-13));

    auto psup = make_params(2, 3, 0.5, {1.0, 1.0}, 2.0, 2.4);
    auto esup = derive(psup);
    auto pk = compute_peak(psup, esup);
    auto [lo2, hi2] = branch_points(0, pk, psup, esup);
    CHECK(lo2 == doctest::Approx(pk.point).epsilon(1e-13));
    REQUIRE(hi2.has_value());
    CHECK(*hi2 == doctest::Approx(pk.point).epsilon(1e-13));
}

TEST_CASE("branch inverses reproduce the level-set roots") {
    auto table = table_for(0.5, 1.0, {1.0, 1.0});
    // quadratic in sqrt(t): the level 3/8 is hit at t = 1/4 and t = 9/4
    CHECK(h_inverse(0, 3.0 / 8.0, table) == doctest::Approx(0.25).epsilon(1e-11));
    CHECK(k_inverse(0, 3.0 / 8.0, table) == doctest::Approx(2.25).epsilon(1e-11));
    // level endpoints return the branch points
    CHECK(h_inverse(0, table.peak->value, table) ==
          doctest::Approx(table.entries[0].t_low).epsilon(1e-11));
    CHECK(k_inverse(0, table.peak->value, table) ==
          doctest::Approx(table.entries[0].t_high).epsilon(1e-11));

    auto inc = table_for(2.0, 1.0, {1.0, 1.0});
    CHECK(inc.context == BranchContext::SubIncreasing);
    CHECK(h_inverse(0, 4.0 / 9.0, inc) == doctest::Approx(1.0 / 9.0).epsilon(1e-11));
    CHECK_THROWS_AS(k_inverse(0, 0.1, inc), solver_error);
}

TEST_CASE("inverse domains are enforced") {
    auto table = table_for(0.5, 1.0, {1.0, 1.0});
    double a = table.peak->value;
    CHECK_THROWS_AS(h_inverse(0, a * 1.5, table), solver_error);
    CHECK_THROWS_AS(h_inverse(0, -1.0, table), solver_error);
    auto sup = table_for(2.0, 2.4, {1.0, 1.0});
    CHECK_THROWS_AS(h_inverse(0, sup.peak->value * 0.5, sup), solver_error);
}

TEST_CASE("round trips across regimes and contexts") {
    testutil::Rng rng(23);
    auto check_table = [&](const BranchTable& table, double tau_lo, double tau_hi) {
        for (int trial = 0; trial < 1000; ++trial) {
            double tau = tau_lo * std::exp(rng.uniform(0.0, std::log(tau_hi / tau_lo)));
            for (int i = 0; i < table.n(); ++i) {
                double th = h_inverse(i, tau, table);
                CHECK(std::fabs(f_scalar(th, i, table.alpha, table.exps, table.eta) - tau) <=
                      1e-9 * std::max(1.0, std::fabs(tau)));
                if (table.has_k(i)) {
                    double tk = k_inverse(i, tau, table);
                    CHECK(std::fabs(f_scalar(tk, i, table.alpha, table.exps, table.eta) - tau) <=
                          1e-9 * std::max(1.0, std::fabs(tau)));
                    CHECK(tk < table.entries[i].s_bound);
                    if (table.peaked()) {
                        // strict separation across the extremum
                        CHECK(th < table.peak->point * (1 + 1e-9));
                        CHECK(tk > table.peak->point * (1 - 1e-9));
                    }
                }
            }
        }
    };
    auto sub = table_for(0.1, 1.0, {0.8, 1.0, 1.3});
    check_table(sub, sub.peak->value * 1e-6, sub.peak->value * 0.999999);
    auto subinc = table_for(2.0, 0.5, {0.8, 1.0, 1.3});
    check_table(subinc, 1e-6, 1e4);
    auto supdec = table_for(0.3, 2.3, {0.8, 1.0, 1.3});
    check_table(supdec, 1e-6, 1e4);
    auto suppeak = table_for(2.5, 2.3, {0.8, 1.0, 1.3});
    check_table(suppeak, suppeak.peak->value * 1.000001, suppeak.peak->value * 1e4);
}

TEST_CASE("ordering chains") {
    // p < 2, alpha below every eta: h increasing in the index, k decreasing
    auto sub = table_for(0.2, 1.0, {0.6, 1.0, 1.7});
    double a = sub.peak->value;
    for (double frac : {0.05, 0.3, 0.7, 0.95}) {
        double tau = a * frac;
        double h_prev = -kInf, k_prev = kInf;
        for (int i = 0; i < 3; ++i) {
            double h = h_inverse(i, tau, sub);
            CHECK(h >= h_prev);
            h_prev = h;
            double k = k_inverse(i, tau, sub);
            CHECK(k <= k_prev);
            k_prev = k;
        }
    }
    // p > 2, alpha above every eta: h decreasing in the index, all below the
    // extremum point; k increasing in the index, all above it
    auto sup = table_for(2.5, 2.3, {0.6, 1.0, 1.7});
    double av = sup.peak->value, t = sup.peak->point;
    for (double mult : {1.05, 1.5, 4.0, 20.0}) {
        double tau = av * mult;
        double h_prev = kInf, k_prev = -kInf;
        for (int i = 0; i < 3; ++i) {
            double h = h_inverse(i, tau, sup);
            CHECK(h <= h_prev * (1 + 1e-12));
            CHECK(h <= t * (1 + 1e-9));
            h_prev = h;
            double k = k_inverse(i, tau, sup);
            CHECK(k >= k_prev * (1 - 1e-12));
            CHECK(k >= t * (1 - 1e-9));
            k_prev = k;
        }
    }
}

TEST_CASE("extrema agree with grid optimization") {
    testutil::Rng rng(31);
    for (int trial = 0; trial < 12; ++trial) {
        bool sub = trial % 2 == 0;
        auto eta = testutil::random_eta(rng, 2, 0.05);
        double p = sub ? rng.uniform(-0.5, 1.8) : rng.uniform(2.05, 2.6);
        double alpha = sub ? rng.uniform(0.05, eta.back() * 0.9)
                           : rng.uniform(eta.front() * 1.1, eta.back() * 3.0);
        if (sub && !(alpha < eta.back() * 0.98)) continue;
        if (!sub && !(alpha > eta.front() * 1.02)) continue;
        SystemParams params;
        try {
            params = make_params(2, 3, 0.5, eta, alpha, p);
        } catch (const solver_error&) {
            continue;
        }
        auto exps = derive(params);
        auto peak = compute_peak(params, exps);
        double best_t = 0.0, best_v = sub ? -kInf : kInf;
        for (int m = 0; m <= 4000; ++m) {
            double t = peak.point * std::exp((m - 2000) * 1e-3);
            double v = f_scalar(t, peak.pivot, alpha, exps, params.eta);
            if (sub ? v > best_v : v < best_v) { best_v = v; best_t = t; }
        }
        CHECK(rel_diff(best_v, peak.value) <= 1e-8);
        CHECK(rel_diff(best_t, peak.point) <= 2e-3);
    }
}

} // TEST_SUITE
