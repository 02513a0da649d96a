#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "syncsol/common.hpp"
#include "syncsol/linalg.hpp"

namespace syncsol {

struct Tolerances {
    double exponent = 1e-10;  ///< relative slack for exponent identities and classification
    double root = 1e-10;      ///< root-finding residual target
    double boundary = 1e-8;   ///< extremal-level solution detection threshold
    double dedupe = 1e-7;     ///< relative distance below which solutions merge
    int grid_min = 48;        ///< minimum scan points per interval / decade

    void check() const {
        if (!(exponent > 0 && root > 0 && boundary > 0 && dedupe > 0 && grid_min > 0))
            fail(errc::invalid_config, "tolerances must be positive");
        if (root > boundary)
            fail(errc::invalid_config, "tol.root must not exceed tol.boundary");
    }
};

enum class Regime { Subquadratic, Quadratic, Superquadratic, Mixed };

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::Subquadratic:   return "SUBQUADRATIC";
    case Regime::Quadratic:      return "QUADRATIC";
    case Regime::Superquadratic: return "SUPERQUADRATIC";
    case Regime::Mixed:          return "MIXED";
    }
    return "?";
}

/// Unvalidated problem description. Scalars broadcast to full matrices /
/// lists during validation; a missing q is filled from the exponent-sum
/// constraint.
struct RawParams {
    int n = 0;
    int dim = 0;                 // spatial dimension N
    std::vector<double> s;       // size 1 (broadcast) or n
    std::vector<double> eta;     // size n
    std::optional<double> alpha_scalar;
    std::optional<Matrix> alpha_matrix;
    std::optional<double> p_scalar;
    std::optional<Matrix> p_matrix;
    std::optional<double> q_scalar;
    std::optional<Matrix> q_matrix;
    Tolerances tol;
};

/// Validated, canonicalized problem data. eta is ascending; perm[i] gives
/// the caller's original index of canonical equation i, so user-facing
/// output can be mapped back.
struct SystemParams {
    int n = 0;
    int dim = 0;
    std::vector<double> s;
    std::vector<double> eta;
    Matrix alpha;  // off-diagonal couplings, diagonal entries unused (0)
    Matrix p;
    Matrix q;
    Tolerances tol;
    std::vector<int> perm;

    double s_max() const { return *std::max_element(s.begin(), s.end()); }
    double two_star() const { return 2.0 * dim / (dim - 2.0 * s_max()); }

    bool alpha_constant(double* value = nullptr) const { return offdiag_constant(alpha, value); }
    bool p_constant(double* value = nullptr) const { return offdiag_constant(p, value); }
    bool q_constant(double* value = nullptr) const { return offdiag_constant(q, value); }

    /// Coupling matrix B: diagonal eta, off-diagonal alpha.
    Matrix coupling_matrix() const {
        Matrix b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = (i == j) ? eta[i] : alpha(i, j);
        return b;
    }

    /// Map a canonical-order vector back to the caller's index order.
    template <class T>
    std::vector<T> to_original(const std::vector<T>& canonical) const {
        std::vector<T> out(canonical.size());
        for (std::size_t i = 0; i < canonical.size(); ++i) out[perm[i]] = canonical[i];
        return out;
    }

private:
    bool offdiag_constant(const Matrix& m, double* value) const {
        double v = m(0, 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && !rel_close(m(i, j), v, tol.exponent)) return false;
        if (value) *value = v;
        return true;
    }
};

struct DerivedExponents {
    double two_star = 0.0;  // critical exponent 2N/(N-2s), s = max s_i
    double beta = 0.0;      // (N-2s)/(4s)
    double s_max = 0.0;
    double p_common = kNaN;
    double q_common = kNaN;  // two_star - p when p is constant
    double kappa = kNaN;     // (2-p)/q
    Regime regime = Regime::Mixed;

    bool sub() const { return regime == Regime::Subquadratic; }
    bool super() const { return regime == Regime::Superquadratic; }
};

namespace detail {

inline Matrix broadcast_offdiag(int n, double v) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = (i == j) ? 0.0 : v;
    return m;
}

inline Matrix permuted_offdiag(const Matrix& m, const std::vector<int>& perm) {
    const int n = static_cast<int>(perm.size());
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = (i == j) ? 0.0 : m(perm[i], perm[j]);
    return out;
}

} // namespace detail

/// Validate raw problem data: broadcast scalars, sort eta ascending
/// (recording the permutation), and verify every structural invariant.
inline SystemParams validate(const RawParams& raw) {
    raw.tol.check();
    const int n = raw.n;
    if (n < 2) fail(errc::invalid_config, "need at least two equations");
    if (static_cast<int>(raw.eta.size()) != n)
        fail(errc::invalid_config, "eta must have n entries");

    std::vector<double> s = raw.s;
    if (s.size() == 1) s.assign(n, s[0]);
    if (static_cast<int>(s.size()) != n)
        fail(errc::invalid_config, "s must be a scalar or have n entries");
    for (double si : s)
        if (!(si > 0.0 && si < 1.0))
            fail(errc::invalid_config, "each fractional order must lie in (0,1)");

    const double smax = *std::max_element(s.begin(), s.end());
    if (!(raw.dim > 2.0 * smax))
        fail(errc::reject_dimension, "spatial dimension must exceed 2*max(s)");
    const double two_star = 2.0 * raw.dim / (raw.dim - 2.0 * smax);

    for (double e : raw.eta)
        if (!(e > 0.0)) fail(errc::reject_sign, "self-couplings must be positive");

    auto take_matrix = [&](const std::optional<double>& sc, const std::optional<Matrix>& mat,
                           const char* name, std::optional<double> fallback) {
        if (mat) {
            if (mat->rows() != static_cast<std::size_t>(n) || mat->cols() != static_cast<std::size_t>(n))
                fail(errc::invalid_config, std::string(name) + " matrix must be n x n");
            return *mat;
        }
        if (sc) return detail::broadcast_offdiag(n, *sc);
        if (fallback) return detail::broadcast_offdiag(n, *fallback);
        fail(errc::invalid_config, std::string(name) + " missing");
    };

    Matrix alpha = take_matrix(raw.alpha_scalar, raw.alpha_matrix, "alpha", std::nullopt);
    Matrix p = take_matrix(raw.p_scalar, raw.p_matrix, "p", std::nullopt);
    Matrix q(n, n);
    if (raw.q_scalar || raw.q_matrix) {
        q = take_matrix(raw.q_scalar, raw.q_matrix, "q", std::nullopt);
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) q(i, j) = (i == j) ? 0.0 : two_star - p(i, j);
    }

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (!(alpha(i, j) > 0.0)) fail(errc::reject_sign, "couplings must be positive");
            if (!rel_close(p(i, j) + q(i, j), two_star, raw.tol.exponent))
                fail(errc::reject_exponent, "exponent pair must sum to the critical exponent");
            if (!(p(i, j) < two_star))
                fail(errc::reject_exponent, "p must stay below the critical exponent");
        }
    }

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return raw.eta[a] < raw.eta[b]; });

    SystemParams sp;
    sp.n = n;
    sp.dim = raw.dim;
    sp.tol = raw.tol;
    sp.perm = perm;
    sp.eta.resize(n);
    sp.s.resize(n);
    for (int i = 0; i < n; ++i) {
        sp.eta[i] = raw.eta[perm[i]];
        sp.s[i] = s[perm[i]];
    }
    sp.alpha = detail::permuted_offdiag(alpha, perm);
    sp.p = detail::permuted_offdiag(p, perm);
    sp.q = detail::permuted_offdiag(q, perm);
    return sp;
}

/// Convenience builder for uniform instances.
inline SystemParams make_params(int n, int dim, double s, std::vector<double> eta,
                                double alpha, double p, Tolerances tol = {}) {
    RawParams raw;
    raw.n = n;
    raw.dim = dim;
    raw.s = {s};
    raw.eta = std::move(eta);
    raw.alpha_scalar = alpha;
    raw.p_scalar = p;
    raw.tol = tol;
    return validate(raw);
}

/// Derive the exponent bundle. The regime is read off a constant p;
/// non-constant p yields the MIXED tag with NaN kappa.
inline DerivedExponents derive(const SystemParams& params) {
    DerivedExponents d;
    d.s_max = params.s_max();
    d.two_star = params.two_star();
    d.beta = (params.dim - 2.0 * d.s_max) / (4.0 * d.s_max);

    double pv = 0.0;
    if (!params.p_constant(&pv)) {
        d.regime = Regime::Mixed;
        return d;
    }
    d.p_common = pv;
    d.q_common = d.two_star - pv;
    d.kappa = (2.0 - pv) / d.q_common;
    if (rel_close(pv, 2.0, params.tol.exponent)) {
        d.regime = Regime::Quadratic;
        d.kappa = 0.0;
    } else if (pv < 2.0) {
        d.regime = Regime::Subquadratic;
    } else {
        d.regime = Regime::Superquadratic;
    }
    return d;
}

} // namespace syncsol
