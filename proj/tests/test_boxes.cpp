#include <doctest.h>

#include "helpers.hpp"
#include "syncsol/boxes.hpp"
#include "syncsol/counting.hpp"

using namespace syncsol;

namespace {
double max_residual(const std::vector<double>& k, const SystemParams& params) {
    double m = 0.0;
    for (double v : eval_f(k, params)) m = std::max(m, std::fabs(v));
    return m;
}
} // namespace

TEST_SUITE("boxes") {

TEST_CASE("system evaluation") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    auto f = eval_f({2.0 / 3.0, 2.0 / 3.0}, params);
    CHECK(f[0] == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-13));

    auto params01 = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    auto f1 = eval_f({1.0, 1.0}, params01);
    CHECK(f1[0] == doctest::Approx(0.1).epsilon(1e-13));
    auto f2 = eval_f({0.5, 0.5}, params01);
    CHECK(f2[0] == doctest::Approx(-0.45).epsilon(1e-13));
    CHECK_THROWS_AS(eval_f({1.0, -1.0}, params01), solver_error);
}

TEST_CASE("small-coupling threshold") {
    auto p1 = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    CHECK(alpha_star(p1) == doctest::Approx(0.25).epsilon(1e-13));
    auto p2 = make_params(2, 3, 0.5, {2.0, 2.0}, 0.1, 1.0);
    CHECK(alpha_star(p2) == doctest::Approx(0.5).epsilon(1e-13));
    auto psup = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 2.4);
    CHECK_THROWS_AS(alpha_star(psup), solver_error);
}

TEST_CASE("improved threshold dominates and hits the analytic maximum") {
    auto p1 = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    // here the objective reduces to (1-g)*g, maximized at one quarter
    CHECK(alpha_star_star(p1) == doctest::Approx(0.25).epsilon(1e-8));
    testutil::Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        int n = rng.pick(2, 4);
        auto params = make_params(n, rng.pick(3, 5), rng.uniform(0.2, 0.8),
                                  testutil::random_eta(rng, n), 0.1, rng.uniform(-1.0, 1.9));
        CHECK(alpha_star_star(params) >= alpha_star(params) - params.tol.root);
    }
}

TEST_CASE("box family construction") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    CHECK(default_small_box_epsilon(params) == doctest::Approx(0.01).epsilon(1e-14));
    auto boxes = small_alpha_boxes(params, 1e-4);  // explicit epsilon also admissible
    REQUIRE(boxes.size() == 3);
    // the all-outer box comes first
    CHECK(boxes[0].lower[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(boxes[0].upper[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(boxes[0].lower[1] == doctest::Approx(0.5).epsilon(1e-13));

    auto p3 = make_params(3, 3, 0.5, {1.0, 1.0, 1.0}, 0.05, 1.0);
    CHECK(small_alpha_boxes(p3, default_small_box_epsilon(p3)).size() == 7);

    // couplings at or above the threshold are refused
    auto big = make_params(2, 3, 0.5, {1.0, 1.0}, 0.3, 1.0);
    try {
        small_alpha_boxes(big, 1e-4);
        CHECK(false);
    } catch (const solver_error& e) {
        CHECK(e.code() == errc::alpha_too_large);
    }
    // an epsilon too large to carry the lower-face bound is refused
    try {
        small_alpha_boxes(params, 0.2);
        CHECK(false);
    } catch (const solver_error& e) {
        CHECK(e.code() == errc::epsilon_too_large);
    }
}

TEST_CASE("face certificates") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    Box omega{{0.5, 0.5}, {1.0, 1.0}};
    auto cert = miranda_certify(omega, params, 64);
    CHECK(cert.certified());
    CHECK(cert.sign_parity == 1);

    auto strong = make_params(2, 3, 0.5, {1.0, 1.0}, 10.0, 1.0);
    CHECK_FALSE(miranda_certify(omega, strong, 64).certified());

    auto sup = make_params(2, 3, 0.5, {1.0, 1.0}, 0.3, 2.4);
    Box b6{{0.01, 0.01}, {1.0, 1.0}};
    CHECK(miranda_certify(b6, sup, 64).certified());
}

TEST_CASE("zeros are located inside certified boxes") {
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.1, 1.0);
    Box omega{{0.5, 0.5}, {1.0, 1.0}};
    auto k = solve_in_box(omega, params);
    CHECK(k[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-11));
    CHECK(k[1] == doctest::Approx(1.0 / 1.1).epsilon(1e-11));
    CHECK(omega.strictly_inside(k));
    CHECK(max_residual(k, params) <= params.tol.root);

    auto sup = make_params(2, 3, 0.5, {1.0, 1.0}, 0.3, 2.4);
    Box b6{{0.01, 0.01}, {1.0, 1.0}};
    auto k6 = solve_in_box(b6, sup);
    CHECK(k6[0] == doctest::Approx(1.0 / 1.3).epsilon(1e-11));
}

TEST_CASE("transformed system") {
    Matrix inv(2, 2);
    inv(0, 0) = -1.0 / 3.0;
    inv(0, 1) = 2.0 / 3.0;
    inv(1, 0) = 2.0 / 3.0;
    inv(1, 1) = -1.0 / 3.0;
    auto g = eval_g({1.0, 1.0}, inv, 1.0, 2.0);
    CHECK(g[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(g[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));

    auto gid = eval_g({1.0, 1.0}, Matrix::identity(2), 1.0, 2.0);
    CHECK(gid[0] == doctest::Approx(0.0).epsilon(1e-14));

    // zeros of the two formulations coincide on a symmetric instance
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.5, 1.0);
    Matrix b = params.coupling_matrix();
    auto binv = inverse(b);
    auto gz = eval_g({2.0 / 3.0, 2.0 / 3.0}, binv, 1.0, 2.0);
    CHECK(std::fabs(gz[0]) <= 1e-12);
    CHECK(std::fabs(gz[1]) <= 1e-12);
}

TEST_CASE("symmetric closed form zeroes the system in every regime") {
    testutil::Rng rng(41);
    for (double p : {1.0, 2.0, 2.4, -0.5, 2.7}) {
        for (int trial = 0; trial < 10; ++trial) {
            int n = rng.pick(2, 4);
            double eta = rng.uniform(0.5, 2.0);
            double alpha = rng.uniform(0.05, 3.0);
            auto params =
                make_params(n, 3, 0.5, std::vector<double>(n, eta), alpha, p);
            auto exps = derive(params);
            double k = pow_pos(eta + (n - 1) * alpha, -exps.beta);
            auto f = eval_f(std::vector<double>(n, k), params);
            for (double v : f) CHECK(std::fabs(v) <= 1e-12);
        }
    }
}

TEST_CASE("zeros of the two formulations coincide on random instances") {
    testutil::Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        CountReport report;
        auto params = testutil::draw_instance(rng, 0, 2, &report);
        if (report.kind != TotalKind::Exact) continue;
        double pv = 0.0, qv = 0.0;
        params.p_constant(&pv);
        params.q_constant(&qv);
        Matrix inv;
        try {
            inv = inverse(params.coupling_matrix());
        } catch (const solver_error&) {
            continue;
        }
        for (const auto& sol : report.solutions) {
            for (double g : eval_g(sol.k, inv, pv, qv))
                CHECK(std::fabs(g) <= params.tol.dedupe);
        }
    }
}

TEST_CASE("certificate soundness over random small couplings") {
    testutil::Rng rng(43);
    for (int trial = 0; trial < 12; ++trial) {
        int n = rng.pick(2, 3);
        auto eta = testutil::random_eta(rng, n);
        double p = rng.uniform(-0.5, 1.8);
        SystemParams params;
        double eps = 0.0;
        try {
            params = make_params(n, rng.pick(3, 5), rng.uniform(0.3, 0.7), eta, 1.0, p);
            double astar = alpha_star(params);
            params = make_params(n, params.dim, params.s[0], eta,
                                 astar * rng.uniform(0.1, 0.8), p);
            // skip corners where no epsilon clears the strict face margins
            eps = default_small_box_epsilon(params);
        } catch (const solver_error&) {
            continue;
        }
        auto boxes = small_alpha_boxes(params, eps);
        CHECK(boxes.size() == (1u << n) - 1);
        for (std::size_t a = 0; a < boxes.size(); ++a) {
            auto cert = miranda_certify(boxes[a], params, 64);
            CHECK(cert.certified());
            auto k = solve_in_box(boxes[a], params);
            CHECK(max_residual(k, params) <= params.tol.root);
            CHECK(boxes[a].strictly_inside(k));
            // pairwise disjoint: some axis has ordered, non-overlapping spans
            for (std::size_t b = a + 1; b < boxes.size(); ++b) {
                bool disjoint = false;
                for (int i = 0; i < n; ++i)
                    if (boxes[a].upper[i] <= boxes[b].lower[i] + 1e-15 ||
                        boxes[b].upper[i] <= boxes[a].lower[i] + 1e-15)
                        disjoint = true;
                CHECK(disjoint);
            }
        }
    }
}

} // TEST_SUITE
