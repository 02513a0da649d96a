#pragma once

#include <functional>
#include <vector>

#include "syncsol/linalg.hpp"
#include "syncsol/params.hpp"

namespace syncsol {

// ---------------------------------------------------------------------------
// The coupled algebraic system on the amplitude vector k:
//     f_i(k) = eta_i k_i^{2s*-2} + sum_{j!=i} alpha_ij k_i^{p_ij-2} k_j^{q_ij} - 1
// plus the transformed system g(k) = 0 obtained through the inverse of the
// coupling matrix, the sign-certified boxes that witness zeros of either one,
// and a damped log-coordinate Newton that locates a zero inside a box.
// ---------------------------------------------------------------------------

struct Box {
    std::vector<double> lower, upper;

    int n() const { return static_cast<int>(lower.size()); }

    void check() const {
        if (lower.size() != upper.size() || lower.empty())
            fail(errc::invalid_config, "box bounds must be nonempty and equal-sized");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(0.0 < lower[i] && lower[i] < upper[i]))
                fail(errc::invalid_config, "box requires 0 < lower < upper per axis");
    }

    bool strictly_inside(const std::vector<double>& k) const {
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < k[i] && k[i] < upper[i])) return false;
        return true;
    }
};

enum class CertVerdict { DegreePlusMinusOne, Inconclusive };

struct FaceWitness {
    int axis = 0;
    bool upper_face = false;
    double worst_value = 0.0;  ///< sampled component value closest to zero on the face
};

/// Face-sampled sign evidence on a box. A DegreePlusMinusOne verdict is
/// sufficient (not necessary) evidence of a zero inside; sign_parity records
/// the orientation of the sign pattern, +1 when every axis runs -/+ from the
/// lower to the upper face, otherwise (-1)^{#reversed axes}.
struct SignCertificate {
    Box box;
    int grid_per_face = 0;
    CertVerdict verdict = CertVerdict::Inconclusive;
    int sign_parity = 1;
    std::vector<FaceWitness> witnesses;

    bool certified() const { return verdict == CertVerdict::DegreePlusMinusOne; }
};

inline void require_positive(const std::vector<double>& k) {
    for (double v : k)
        if (!(v > 0.0)) fail(errc::nonpositive_k, "amplitude vector must be positive");
}

/// Evaluate the coupled system; power terms go through exp/log so that
/// negative and fractional exponents are handled uniformly.
inline std::vector<double> eval_f(const std::vector<double>& k, const SystemParams& params) {
    require_positive(k);
    const int n = params.n;
    const double c = params.two_star() - 2.0;
    std::vector<double> x(n), f(n);
    for (int i = 0; i < n; ++i) x[i] = std::log(k[i]);
    for (int i = 0; i < n; ++i) {
        double v = std::exp(std::log(params.eta[i]) + c * x[i]) - 1.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            v += std::exp(std::log(params.alpha(i, j)) + (params.p(i, j) - 2.0) * x[i] +
                          params.q(i, j) * x[j]);
        }
        f[i] = v;
    }
    return f;
}

/// System value together with the Jacobian in log coordinates,
/// J(i,l) = d f_i / d ln k_l.
inline void eval_f_with_jacobian(const std::vector<double>& k, const SystemParams& params,
                                 std::vector<double>& f, Matrix& jac) {
    require_positive(k);
    const int n = params.n;
    const double c = params.two_star() - 2.0;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::log(k[i]);
    f.assign(n, 0.0);
    jac = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        double self = std::exp(std::log(params.eta[i]) + c * x[i]);
        f[i] = self - 1.0;
        jac(i, i) = c * self;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double term = std::exp(std::log(params.alpha(i, j)) + (params.p(i, j) - 2.0) * x[i] +
                                   params.q(i, j) * x[j]);
            f[i] += term;
            jac(i, i) += (params.p(i, j) - 2.0) * term;
            jac(i, j) += params.q(i, j) * term;
        }
    }
}

/// Transformed system g_i(k) = k_i^q - sum_j a_ij k_j^{2-p} for a constant
/// exponent pair; `inv` is the inverse of the coupling matrix.
inline std::vector<double> eval_g(const std::vector<double>& k, const Matrix& inv, double p,
                                  double q) {
    require_positive(k);
    const int n = static_cast<int>(k.size());
    std::vector<double> g(n);
    std::vector<double> pw(n);
    for (int j = 0; j < n; ++j) pw[j] = pow_pos(k[j], 2.0 - p);
    for (int i = 0; i < n; ++i) {
        double v = pow_pos(k[i], q);
        for (int j = 0; j < n; ++j) v -= inv(i, j) * pw[j];
        g[i] = v;
    }
    return g;
}

inline void eval_g_with_jacobian(const std::vector<double>& k, const Matrix& inv, double p,
                                 double q, std::vector<double>& g, Matrix& jac) {
    require_positive(k);
    const int n = static_cast<int>(k.size());
    g = eval_g(k, inv, p, q);
    jac = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        jac(i, i) = q * pow_pos(k[i], q);
        for (int j = 0; j < n; ++j)
            jac(i, j) -= inv(i, j) * (2.0 - p) * pow_pos(k[j], 2.0 - p);
    }
}

/// Per-row box bounds for the transformed system: any uniform box
/// (eps, T)^n with eps below (min_i row_sum)^beta and T above
/// (max_i row_sum)^beta carries the sign pattern, provided the row sums of
/// the inverse are positive.
inline Box g_box(const Matrix& inv, const DerivedExponents& exps, double margin = 2.0) {
    const int n = static_cast<int>(inv.rows());
    double lo_sum = kInf, hi_sum = -kInf;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += inv(i, j);
        lo_sum = std::min(lo_sum, s);
        hi_sum = std::max(hi_sum, s);
    }
    if (!(lo_sum > 0.0))
        fail(errc::wrong_side, "transformed-system box needs positive inverse row sums");
    Box box;
    box.lower.assign(n, pow_pos(lo_sum, exps.beta) / margin);
    box.upper.assign(n, pow_pos(hi_sum, exps.beta) * margin);
    box.check();
    return box;
}

// -- thresholds -------------------------------------------------------------

/// Small-coupling threshold: below it the 2^n - 1 box family certifies.
inline double alpha_star(const SystemParams& params) {
    const int n = params.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && !(params.p(i, j) < 2.0))
                fail(errc::wrong_regime, "small-coupling threshold needs all p below 2");
    const double beta = derive(params).beta;
    double min_inv = kInf;
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            sum += pow_pos(1.0 / params.eta[j], beta * params.q(i, j)) *
                   pow_pos(1.0 / (2.0 * params.eta[i]), beta * (params.p(i, j) - 2.0));
        }
        min_inv = std::min(min_inv, 1.0 / sum);
    }
    return 0.5 * min_inv;
}

/// Improved threshold: maximize (1-gamma) * min_i [...]^{-1} over gamma in
/// (0,1) by a coarse scan followed by golden-section refinement.
inline double alpha_star_star(const SystemParams& params) {
    const int n = params.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && !(params.p(i, j) < 2.0))
                fail(errc::wrong_regime, "improved threshold needs all p below 2");
    const double beta = derive(params).beta;
    auto value = [&](double gamma) {
        double min_inv = kInf;
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                sum += pow_pos(1.0 / params.eta[j], beta * params.q(i, j)) *
                       pow_pos(gamma / params.eta[i], beta * (params.p(i, j) - 2.0));
            }
            min_inv = std::min(min_inv, 1.0 / sum);
        }
        return (1.0 - gamma) * min_inv;
    };

    const int scan = 256;
    double best_g = 0.5, best_v = -kInf;
    for (int m = 1; m < scan; ++m) {
        double g = static_cast<double>(m) / scan;
        double v = value(g);
        if (v > best_v) { best_v = v; best_g = g; }
    }
    double lo = std::max(best_g - 1.0 / scan, 1e-12);
    double hi = std::min(best_g + 1.0 / scan, 1.0 - 1e-12);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 200 && (b - a) > params.tol.root * 1e-2; ++it) {
        if (f1 < f2) { a = x1; x1 = x2; f1 = f2; x2 = a + gr * (b - a); f2 = value(x2); }
        else { b = x2; x2 = x1; f2 = f1; x1 = b - gr * (b - a); f1 = value(x1); }
    }
    return std::max(best_v, std::max(f1, f2));
}

// -- box construction --------------------------------------------------------

namespace detail {

/// Margin of the lower-face positivity bound for index i against the best
/// partner m in the complementary set: alpha_im (1/(2 eta_m))^{beta q_im}
/// eps^{p_im - 2}, which must exceed 1.
inline double eps_bound_margin(const SystemParams& params, double beta, int i,
                               const std::vector<int>& partners, double eps) {
    double best = 0.0;
    for (int m : partners) {
        if (m == i) continue;
        double v = params.alpha(i, m) *
                   pow_pos(1.0 / (2.0 * params.eta[m]), beta * params.q(i, m)) *
                   pow_pos(eps, params.p(i, m) - 2.0);
        best = std::max(best, v);
    }
    return best;
}

} // namespace detail

/// Largest grid value (powers of ten, refined by half-decade mantissas when
/// the admissible window is narrow) for which the lower-face positivity bound
/// holds with a factor-2 margin for every decomposition AND the opposite
/// upper faces keep a clear positive margin even with every partner at eps.
inline double default_small_box_epsilon(const SystemParams& params) {
    const double beta = derive(params).beta;
    const int n = params.n;
    auto admissible = [&](double eps) {
        if (!(eps < pow_pos(1.0 / (2.0 * params.eta[0]), beta))) return false;
        // Worst case over decompositions: a lone partner set {m}.
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i) {
                if (i == m) continue;
                if (detail::eps_bound_margin(params, beta, i, {m}, eps) < 2.0) return false;
            }
        // Upper faces stay above the certification margin with every partner
        // pinned at eps.
        for (int i = 0; i < n; ++i) {
            double v = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                v += params.alpha(i, j) * pow_pos(eps, params.q(i, j)) *
                     pow_pos(1.0 / params.eta[i], beta * (params.p(i, j) - 2.0));
            }
            if (v < 10.0 * params.tol.root) return false;
        }
        return true;
    };
    for (int exp10 = 1; exp10 <= 300; ++exp10)
        for (double mantissa : {1.0, 0.5, 0.2})
            if (double eps = mantissa * std::pow(10.0, -exp10); admissible(eps)) return eps;
    fail(errc::epsilon_too_large, "no admissible epsilon down to 1e-300");
}

/// The 2^n - 1 disjoint cuboids indexed by proper subsets I1 of {1..n}:
/// coordinates (eps, (1/(2 eta_i))^beta) on I1 and
/// ((1/(2 eta_i))^beta, (1/eta_i)^beta) on the complement. The empty-I1 box
/// comes first.
inline std::vector<Box> small_alpha_boxes(const SystemParams& params, double epsilon) {
    const int n = params.n;
    const double beta = derive(params).beta;
    const double astar = alpha_star(params);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && !(params.alpha(i, j) < astar))
                fail(errc::alpha_too_large, "couplings must stay below the box threshold");

    std::vector<double> mid(n), top(n);
    for (int i = 0; i < n; ++i) {
        mid[i] = pow_pos(1.0 / (2.0 * params.eta[i]), beta);
        top[i] = pow_pos(1.0 / params.eta[i], beta);
    }
    if (!(epsilon > 0.0) || epsilon >= *std::min_element(mid.begin(), mid.end()))
        fail(errc::epsilon_too_large, "epsilon must sit below every inner corner");

    std::vector<Box> boxes;
    boxes.reserve((1u << n) - 1);
    for (unsigned mask = 0; mask < (1u << n) - 1; ++mask) {
        std::vector<int> inner, outer;
        for (int i = 0; i < n; ++i)
            (mask >> i & 1u) ? inner.push_back(i) : outer.push_back(i);
        for (int i : inner)
            if (!(detail::eps_bound_margin(params, beta, i, outer, epsilon) > 1.0))
                fail(errc::epsilon_too_large, "lower-face positivity bound fails at this epsilon");
        Box box;
        box.lower.resize(n);
        box.upper.resize(n);
        for (int i = 0; i < n; ++i) {
            if (mask >> i & 1u) { box.lower[i] = epsilon; box.upper[i] = mid[i]; }
            else { box.lower[i] = mid[i]; box.upper[i] = top[i]; }
        }
        box.check();
        boxes.push_back(std::move(box));
    }
    return boxes;
}

// -- certification and solving ----------------------------------------------

using SystemFn = std::function<std::vector<double>(const std::vector<double>&)>;
using SystemJacFn =
    std::function<void(const std::vector<double>&, std::vector<double>&, Matrix&)>;

struct VectorField {
    SystemFn value;
    SystemJacFn value_jac;
};

inline VectorField f_field(const SystemParams& params) {
    return {[&params](const std::vector<double>& k) { return eval_f(k, params); },
            [&params](const std::vector<double>& k, std::vector<double>& f, Matrix& j) {
                eval_f_with_jacobian(k, params, f, j);
            }};
}

inline VectorField g_field(const Matrix& inv, double p, double q) {
    return {[inv, p, q](const std::vector<double>& k) { return eval_g(k, inv, p, q); },
            [inv, p, q](const std::vector<double>& k, std::vector<double>& g, Matrix& j) {
                eval_g_with_jacobian(k, inv, p, q, g, j);
            }};
}

namespace detail {

inline SignCertificate certify_field(const Box& box, const VectorField& field,
                                     const Tolerances& tol, int grid_per_face) {
    box.check();
    if (grid_per_face < tol.grid_min)
        fail(errc::invalid_config, "face grid must be at least tol.grid_min");
    const int n = box.n();
    SignCertificate cert;
    cert.box = box;
    cert.grid_per_face = grid_per_face;
    cert.sign_parity = 1;
    bool conclusive = true;

    // Per-axis grid values, endpoints included.
    std::vector<std::vector<double>> axis_vals(n, std::vector<double>(grid_per_face));
    for (int j = 0; j < n; ++j)
        for (int g = 0; g < grid_per_face; ++g)
            axis_vals[j][g] = box.lower[j] + (box.upper[j] - box.lower[j]) * g /
                                                 double(grid_per_face - 1);

    std::vector<double> point(n);
    std::vector<int> idx(n > 1 ? n - 1 : 1, 0);
    for (int axis = 0; axis < n; ++axis) {
        int face_sign[2] = {0, 0};  // -1 uniformly negative, +1 positive, 0 mixed
        for (int side = 0; side < 2; ++side) {
            double fixed = side == 0 ? box.lower[axis] : box.upper[axis];
            double worst = kInf;
            int sgn = 0;
            bool mixed = false;
            std::fill(idx.begin(), idx.end(), 0);
            const long long total = [&] {
                long long t = 1;
                for (int d = 0; d < n - 1; ++d) t *= grid_per_face;
                return t;
            }();
            for (long long c = 0; c < total; ++c) {
                int d = 0;
                for (int j = 0; j < n; ++j) {
                    if (j == axis) { point[j] = fixed; continue; }
                    point[j] = axis_vals[j][idx[d++]];
                }
                double v = field.value(point)[axis];
                if (std::fabs(v) < std::fabs(worst)) worst = v;
                int s = v > tol.root ? 1 : (v < -tol.root ? -1 : 0);
                if (s == 0) mixed = true;
                else if (sgn == 0) sgn = s;
                else if (sgn != s) mixed = true;
                // no early exit: the witness should carry the honest worst margin
                for (int j = n - 2; j >= 0; --j) {
                    if (++idx[j] < grid_per_face) break;
                    idx[j] = 0;
                }
            }
            cert.witnesses.push_back({axis, side == 1, worst});
            face_sign[side] = mixed ? 0 : sgn;
        }
        if (face_sign[0] == -1 && face_sign[1] == 1) {
            // standard orientation
        } else if (face_sign[0] == 1 && face_sign[1] == -1) {
            cert.sign_parity = -cert.sign_parity;
        } else {
            conclusive = false;
        }
    }
    cert.verdict = conclusive ? CertVerdict::DegreePlusMinusOne : CertVerdict::Inconclusive;
    if (!conclusive) cert.sign_parity = 1;
    return cert;
}

struct NewtonResult {
    bool converged = false;
    std::vector<double> k;
    double residual = kInf;
};

inline NewtonResult newton_log(const VectorField& field, std::vector<double> k, double target,
                               int max_iter = 120) {
    const int n = static_cast<int>(k.size());
    NewtonResult res;
    std::vector<double> f;
    Matrix jac;
    auto norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::fabs(x));
        return m;
    };
    field.value_jac(k, f, jac);
    double fn = norm(f);
    for (int it = 0; it < max_iter; ++it) {
        if (fn <= target) break;
        std::vector<double> rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = -f[i];
        std::vector<double> step;
        try {
            step = solve_linear(jac, rhs);
        } catch (const solver_error&) {
            return res;
        }
        double lambda = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half, lambda *= 0.5) {
            std::vector<double> trial(n);
            bool ok = true;
            for (int i = 0; i < n; ++i) {
                double x = std::log(k[i]) + lambda * step[i];
                if (x < -700.0 || x > 700.0) { ok = false; break; }
                trial[i] = std::exp(x);
            }
            if (!ok) continue;
            std::vector<double> ft;
            Matrix jt;
            field.value_jac(trial, ft, jt);
            double fnt = norm(ft);
            if (fnt < fn * (1.0 - 1e-4 * lambda) || fnt <= target) {
                k = std::move(trial);
                f = std::move(ft);
                jac = std::move(jt);
                fn = fnt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    res.converged = fn <= target;
    res.k = std::move(k);
    res.residual = fn;
    return res;
}

inline std::vector<double> box_log_center(const Box& box) {
    std::vector<double> c(box.n());
    for (int i = 0; i < box.n(); ++i) c[i] = std::sqrt(box.lower[i] * box.upper[i]);
    return c;
}

inline std::vector<double> solve_in_box_field(const Box& box, const VectorField& field,
                                              const Tolerances& tol, int grid_per_face,
                                              int depth = 0) {
    auto attempt = newton_log(field, box_log_center(box), tol.root);
    if (attempt.converged && box.strictly_inside(attempt.k)) return attempt.k;

    if (depth >= 48) {
        std::string msg = "subdivision depth limit; deepest certified box [";
        for (int i = 0; i < box.n(); ++i)
            msg += (i ? " x [" : "[") + format_double(box.lower[i]) + "," +
                   format_double(box.upper[i]) + "]";
        fail(errc::no_convergence, msg);
    }
    int axis = 0;
    double widest = -1.0;
    for (int i = 0; i < box.n(); ++i) {
        double span = std::log(box.upper[i] / box.lower[i]);
        if (span > widest) { widest = span; axis = i; }
    }
    double mid = std::sqrt(box.lower[axis] * box.upper[axis]);
    Box lo = box, hi = box;
    lo.upper[axis] = mid;
    hi.lower[axis] = mid;
    solver_error last(errc::no_convergence, "no certified sub-box retained a zero");
    for (const Box& half : {lo, hi}) {
        auto cert = certify_field(half, field, tol, grid_per_face);
        if (!cert.certified()) continue;
        try {
            return solve_in_box_field(half, field, tol, grid_per_face, depth + 1);
        } catch (const solver_error& e) {
            last = e;
        }
    }
    throw last;
}

} // namespace detail

/// Sample every pair of opposite faces of `box` on a uniform grid and issue
/// a sign certificate for the coupled system.
inline SignCertificate miranda_certify(const Box& box, const SystemParams& params,
                                       int grid_per_face) {
    return detail::certify_field(box, f_field(params), params.tol, grid_per_face);
}

/// Same certificate for the transformed system.
inline SignCertificate miranda_certify_g(const Box& box, const Matrix& inv, double p, double q,
                                         const Tolerances& tol, int grid_per_face) {
    return detail::certify_field(box, g_field(inv, p, q), tol, grid_per_face);
}

/// Locate a zero inside a certified box: damped Newton on log coordinates
/// seeded at the box center, with recursive re-certified subdivision as the
/// fallback when Newton strays outside.
inline std::vector<double> solve_in_box(const Box& box, const SystemParams& params,
                                        int grid_per_face = 64) {
    return detail::solve_in_box_field(box, f_field(params), params.tol,
                                      std::max(grid_per_face, params.tol.grid_min));
}

inline std::vector<double> solve_in_box_g(const Box& box, const Matrix& inv, double p, double q,
                                          const Tolerances& tol, int grid_per_face = 64) {
    return detail::solve_in_box_field(box, g_field(inv, p, q), tol,
                                      std::max(grid_per_face, tol.grid_min));
}

/// A few damped Newton steps on the full system; returns the improved vector
/// if the residual got better, otherwise the input.
inline std::vector<double> newton_polish(const std::vector<double>& k, const SystemParams& params,
                                         int max_iter = 12) {
    auto before = eval_f(k, params);
    double res_before = 0.0;
    for (double v : before) res_before = std::max(res_before, std::fabs(v));
    auto r = detail::newton_log(f_field(params), k, 0.0, max_iter);
    if (r.residual < res_before) return r.k;
    return k;
}

} // namespace syncsol
