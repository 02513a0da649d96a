#pragma once

#include <ostream>
#include <vector>

#include "syncsol/common.hpp"

namespace syncsol {

/// The explicit radial extremal profile of the scalar critical equation.
struct BubbleSpec {
    int dim = 0;
    double s = 0.0;

    double peak() const {
        return pow_pos(dim * (dim - 2.0 * s), (dim - 2.0 * s) / (4.0 * s));
    }
};

/// U(r) = [N(N-2s)]^{(N-2s)/(4s)} / (1+r^2)^{(N-2s)/2}
inline double bubble_value(const BubbleSpec& spec, double r) {
    if (!(r >= 0.0)) fail(errc::invalid_config, "radius must be nonnegative");
    double exp2 = (spec.dim - 2.0 * spec.s) / 2.0;
    return spec.peak() / pow_pos(1.0 + r * r, exp2);
}

struct ProfileTable {
    std::vector<double> radii;
    std::vector<std::vector<double>> columns;  // columns[i][row] = k_i * U(r)

    /// CSV export: header "r,u1,...,un", one row per radius.
    void to_csv(std::ostream& os) const {
        os << "r";
        for (std::size_t i = 0; i < columns.size(); ++i) os << ",u" << (i + 1);
        os << "\n";
        for (std::size_t row = 0; row < radii.size(); ++row) {
            os << format_double(radii[row]);
            for (const auto& col : columns) os << "," << format_double(col[row]);
            os << "\n";
        }
    }
};

/// Scale the bubble by each component amplitude: u_i(r) = k_i * U(r).
inline ProfileTable sync_profile(const std::vector<double>& k, const BubbleSpec& spec,
                                 const std::vector<double>& radii) {
    for (double ki : k)
        if (!(ki > 0.0)) fail(errc::nonpositive_k, "profile amplitudes must be positive");
    ProfileTable table;
    table.radii = radii;
    table.columns.assign(k.size(), std::vector<double>(radii.size()));
    for (std::size_t row = 0; row < radii.size(); ++row) {
        double u = bubble_value(spec, radii[row]);
        for (std::size_t i = 0; i < k.size(); ++i) table.columns[i][row] = k[i] * u;
    }
    return table;
}

} // namespace syncsol
