#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace syncsol {

/// Error codes carried by solver_error. Verdict-like outcomes (an
/// inconclusive certificate, an infinite solution family) are values,
/// not errors, and never appear here.
enum class errc {
    reject_dimension,
    reject_sign,
    reject_exponent,
    invalid_config,
    nonpositive_k,
    nonpositive_t,
    wrong_regime,
    wrong_side,
    wrong_order,
    alpha_too_large,
    epsilon_too_large,
    branch_absent,
    out_of_domain,
    no_convergence,
    singular,
    pole,
    dimension_mismatch,
    boundary_ambiguous,
    grid_unstable,
    cost_guard,
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::reject_dimension:  return "REJECT_DIMENSION";
    case errc::reject_sign:       return "REJECT_SIGN";
    case errc::reject_exponent:   return "REJECT_EXPONENT";
    case errc::invalid_config:    return "INVALID_CONFIG";
    case errc::nonpositive_k:     return "NONPOSITIVE_K";
    case errc::nonpositive_t:     return "NONPOSITIVE_T";
    case errc::wrong_regime:      return "WRONG_REGIME";
    case errc::wrong_side:        return "WRONG_SIDE";
    case errc::wrong_order:       return "WRONG_ORDER";
    case errc::alpha_too_large:   return "ALPHA_TOO_LARGE";
    case errc::epsilon_too_large: return "EPSILON_TOO_LARGE";
    case errc::branch_absent:     return "BRANCH_ABSENT";
    case errc::out_of_domain:     return "OUT_OF_DOMAIN";
    case errc::no_convergence:    return "NO_CONVERGENCE";
    case errc::singular:          return "SINGULAR";
    case errc::pole:              return "POLE";
    case errc::dimension_mismatch: return "DIMENSION_MISMATCH";
    case errc::boundary_ambiguous: return "BOUNDARY_AMBIGUOUS";
    case errc::grid_unstable:     return "GRID_UNSTABLE";
    case errc::cost_guard:        return "COST_GUARD";
    }
    return "UNKNOWN";
}

class solver_error : public std::runtime_error {
public:
    solver_error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw solver_error(code, what);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// x^e for x > 0 via exp(e*log x); exponents here are routinely negative
/// or fractional, so the log-domain form is used everywhere.
inline double pow_pos(double x, double e) {
    if (!(x > 0.0)) fail(errc::nonpositive_t, "pow_pos requires a positive base");
    if (e == 0.0) return 1.0;
    return std::exp(e * std::log(x));
}

inline double rel_diff(double a, double b) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) / scale;
}

inline bool rel_close(double a, double b, double tol) { return rel_diff(a, b) <= tol; }

/// Round-trip decimal formatting (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace syncsol
