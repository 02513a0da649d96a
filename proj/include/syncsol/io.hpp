#pragma once

#include <json.hpp>

#include "syncsol/boxes.hpp"
#include "syncsol/conditions.hpp"
#include "syncsol/counting.hpp"
#include "syncsol/params.hpp"

namespace syncsol::io {

using json = nlohmann::ordered_json;

// -- config ingestion ---------------------------------------------------------

inline Matrix matrix_from_json(const json& j, int n, const char* name) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail(errc::invalid_config, std::string(name) + " matrix must have n rows");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != n)
            fail(errc::invalid_config, std::string(name) + " matrix must be n x n");
        for (int c = 0; c < n; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

/// Configuration document: keys n, N, s, eta, alpha, p, q, tol with
/// scalar-or-matrix polymorphism for alpha/p/q and scalar-or-list for s.
/// A missing q is filled from the exponent-sum constraint.
inline RawParams raw_from_json(const json& j) {
    RawParams raw;
    try {
        raw.n = j.at("n").get<int>();
        raw.dim = j.at("N").get<int>();
        const auto& s = j.at("s");
        if (s.is_number()) raw.s = {s.get<double>()};
        else raw.s = s.get<std::vector<double>>();
        raw.eta = j.at("eta").get<std::vector<double>>();

        auto read_poly = [&](const char* key, std::optional<double>& scalar,
                             std::optional<Matrix>& matrix, bool required) {
            if (!j.contains(key)) {
                if (required) fail(errc::invalid_config, std::string("missing key ") + key);
                return;
            }
            const auto& v = j.at(key);
            if (v.is_number()) scalar = v.get<double>();
            else matrix = matrix_from_json(v, raw.n, key);
        };
        read_poly("alpha", raw.alpha_scalar, raw.alpha_matrix, true);
        read_poly("p", raw.p_scalar, raw.p_matrix, true);
        read_poly("q", raw.q_scalar, raw.q_matrix, false);

        if (j.contains("tol")) {
            const auto& t = j.at("tol");
            if (t.contains("exponent")) raw.tol.exponent = t.at("exponent").get<double>();
            if (t.contains("root")) raw.tol.root = t.at("root").get<double>();
            if (t.contains("boundary")) raw.tol.boundary = t.at("boundary").get<double>();
            if (t.contains("dedupe")) raw.tol.dedupe = t.at("dedupe").get<double>();
            if (t.contains("gridMin")) raw.tol.grid_min = t.at("gridMin").get<int>();
            if (t.contains("grid_min")) raw.tol.grid_min = t.at("grid_min").get<int>();
        }
    } catch (const solver_error&) {
        throw;
    } catch (const std::exception& e) {
        fail(errc::invalid_config, e.what());
    }
    return raw;
}

inline SystemParams params_from_json(const json& j) { return validate(raw_from_json(j)); }

// -- serialization --------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Canonicalized parameters mapped back to the caller's index order so the
/// report is self-describing.
inline json params_to_json(const SystemParams& params) {
    const int n = params.n;
    Matrix alpha(n, n), p(n, n), q(n, n);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < n; ++c) {
            alpha(params.perm[i], params.perm[c]) = params.alpha(i, c);
            p(params.perm[i], params.perm[c]) = params.p(i, c);
            q(params.perm[i], params.perm[c]) = params.q(i, c);
        }
    json j;
    j["n"] = params.n;
    j["N"] = params.dim;
    j["s"] = params.to_original(params.s);
    j["eta"] = params.to_original(params.eta);
    j["alpha"] = matrix_to_json(alpha);
    j["p"] = matrix_to_json(p);
    j["q"] = matrix_to_json(q);
    j["tol"] = {{"exponent", params.tol.exponent},
                {"root", params.tol.root},
                {"boundary", params.tol.boundary},
                {"dedupe", params.tol.dedupe},
                {"gridMin", params.tol.grid_min}};
    return j;
}

inline json assignment_to_json(const std::vector<int>& canonical, const SystemParams& params) {
    std::vector<int> original;
    for (int i : canonical) original.push_back(params.perm[i] + 1);
    std::sort(original.begin(), original.end());
    return json(original);
}

inline json solution_to_json(const Solution& sol, const SystemParams& params) {
    json j;
    j["assignment"] = assignment_to_json(sol.assignment, params);
    if (!std::isnan(sol.tau)) j["tau"] = sol.tau;
    if (!sol.t.empty()) j["t"] = params.to_original(sol.t);
    j["k"] = params.to_original(sol.k);
    j["residual"] = sol.residual;
    return j;
}

inline json certificate_to_json(const SignCertificate& cert) {
    json j;
    j["box"] = {{"lower", cert.box.lower}, {"upper", cert.box.upper}};
    j["grid_per_face"] = cert.grid_per_face;
    j["verdict"] = cert.certified() ? "DEGREE_PLUS_MINUS_ONE" : "INCONCLUSIVE";
    j["sign_parity"] = cert.sign_parity;
    json w = json::array();
    for (const auto& fw : cert.witnesses)
        w.push_back({{"axis", fw.axis + 1},
                     {"face", fw.upper_face ? "upper" : "lower"},
                     {"worst_value", fw.worst_value}});
    j["witnesses"] = std::move(w);
    return j;
}

inline json count_report_to_json(const CountReport& report, const SystemParams& params) {
    json j;
    j["regime"] = regime_name(report.regime);
    j["kind"] = total_kind_name(report.kind);
    if (report.kind == TotalKind::Infinite) j["total"] = "INFINITE";
    else if (report.kind == TotalKind::None) j["total"] = "NONE";
    else j["total"] = report.total;
    if (report.boundary_ambiguous()) j["total_high"] = report.total_high();
    j["rho_star"] = report.rho_star;
    j["rho_star_ambiguous"] = report.rho_star_ambiguous;
    j["rho_star_star"] = report.rho_star_star;
    json sols = json::array();
    for (const auto& s : report.solutions) sols.push_back(solution_to_json(s, params));
    j["solutions"] = std::move(sols);
    json certs = json::array();
    for (const auto& c : report.certificates) {
        json cj;
        cj["assignment"] = assignment_to_json(c.assignment, params);
        cj["bracket"] = {c.lo, c.hi};
        certs.push_back(std::move(cj));
    }
    j["certificates"] = std::move(certs);
    if (!report.box_certificates.empty()) {
        json bc = json::array();
        for (const auto& cert : report.box_certificates) bc.push_back(certificate_to_json(cert));
        j["box_certificates"] = std::move(bc);
    }
    if (!report.note.empty()) j["note"] = report.note;
    j["params"] = params_to_json(params);
    return j;
}

/// Diagnostic dump of the branch machinery: context, extremum, per-index
/// bounds and branch points.
inline json branch_table_to_json(const BranchTable& table) {
    json j;
    const char* names[] = {"SUB_INCREASING", "SUB_PEAK", "SUPER_DECREASING", "SUPER_PEAK"};
    j["context"] = names[static_cast<int>(table.context)];
    j["alpha"] = table.alpha;
    j["kappa"] = table.exps.kappa;
    if (table.peak) {
        j["extremum"] = {{"value", table.peak->value},
                         {"point", table.peak->point},
                         {"pivot", table.peak->pivot + 1}};
    }
    json entries = json::array();
    for (const auto& e : table.entries) {
        json ej;
        ej["alpha_side"] = e.rel;
        ej["s_bound"] = std::isinf(e.s_bound) ? json("inf") : json(e.s_bound);
        if (!std::isnan(e.t_low)) ej["t_low"] = e.t_low;
        if (e.has_k) ej["t_high"] = e.t_high;
        ej["has_second_branch"] = e.has_k;
        entries.push_back(std::move(ej));
    }
    j["entries"] = std::move(entries);
    return j;
}

inline json verdict_to_json(const conditions::Verdict& v) {
    json j;
    j["condition"] = v.id;
    j["holds"] = v.holds;
    j["slack"] = v.slack;
    json inputs;
    for (const auto& [key, value] : v.echo) inputs[key] = value;
    j["inputs"] = std::move(inputs);
    return j;
}

inline json error_to_json(const solver_error& e) {
    json j;
    std::string what = e.what();
    std::string name = errc_name(e.code());
    std::string msg = what.substr(what.find(": ") == std::string::npos
                                      ? 0
                                      : what.find(": ") + 2);
    j["error"] = name;
    j["message"] = msg;
    return j;
}

} // namespace syncsol::io
