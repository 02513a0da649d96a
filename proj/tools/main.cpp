// Command-line front end: count / solve / verify / sweep / oracle / bubble.
// Configs are JSON documents (see README); reports are JSON on stdout, sweeps
// and bubble profiles are CSV. Errors are emitted as structured JSON on
// stderr with exit codes 1 (invalid config), 2 (numeric failure), and 3
// (a holds-verdict whose predicted count disagrees with the computed count).

#include <CLI11.hpp>

#include <fstream>
#include <atomic>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "syncsol/syncsol.hpp"

namespace {

using namespace syncsol;
using io::json;

struct Prediction {
    enum class Kind { None, Exactly, AtLeast, NoSolution, Infinite } kind = Kind::None;
    long long value = 0;
};

struct VerifyOutcome {
    conditions::Verdict verdict;
    Prediction prediction;
    bool ran_count = false;
    CountReport computed;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::invalid_config, "cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(errc::invalid_config, std::string("config parse error: ") + e.what());
    }
    return j;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) fail(errc::invalid_config, "cannot open output file " + out_path);
    out << text;
}

std::string total_cell(const CountReport& r) {
    if (r.kind == TotalKind::Infinite) return "inf";
    if (r.kind == TotalKind::None) return "0";
    return std::to_string(r.total);
}

// -- verify dispatch ----------------------------------------------------------

conditions::Verdict peak_level_multiplicity(const SystemParams& params,
                                            const DerivedExponents& exps) {
    if (!exps.super()) fail(errc::wrong_regime, "peak-level check needs constant p > 2");
    auto table = make_branch_table(params, exps);
    if (table.context != BranchContext::SuperPeak)
        fail(errc::wrong_regime, "peak-level check needs alpha above eta_1");
    std::vector<int> pool;
    for (int i = 0; i < params.n; ++i)
        if (table.has_k(i)) pool.push_back(i);
    double level = table.peak->value;
    double worst = -kInf;
    for (unsigned mask = 1; mask < (1u << pool.size()); ++mask) {
        std::vector<int> subset;
        for (std::size_t b = 0; b < pool.size(); ++b)
            if (mask >> b & 1u) subset.push_back(pool[b]);
        worst = std::max(worst, g_subset(level, subset, table));
    }
    conditions::Verdict v;
    v.id = "thm2.5b";
    v.slack = -worst;
    v.holds = v.slack > 0.0;
    v.echo = {{"peak_level_max", worst}, {"branch_count", double(pool.size())}};
    return v;
}

conditions::Verdict quadratic_gap_verdict(const SystemParams& params, bool expect_gap) {
    auto exps = derive(params);
    if (exps.regime != Regime::Quadratic)
        fail(errc::wrong_regime, "classification applies to p = 2 only");
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "classification needs a constant coupling");
    double eta1 = params.eta.front(), etan = params.eta.back();
    conditions::Verdict v;
    if (expect_gap) {
        v.id = "thm2.3b";
        bool distinct = !rel_close(eta1, etan, params.tol.exponent);
        double slack = std::min(alpha - eta1, etan - alpha);
        v.slack = distinct ? slack : -1.0;
        v.holds = distinct && slack >= 0.0;
        v.echo = {{"gap_low", eta1}, {"gap_high", etan}};
    } else {
        v.id = "thm2.3a";
        double slack = std::max(alpha - etan, eta1 - alpha);
        bool all_equal = rel_close(eta1, etan, params.tol.exponent) &&
                         rel_close(alpha, eta1, params.tol.exponent);
        v.slack = all_equal ? 0.0 : slack;
        v.holds = all_equal || slack > 0.0;
        v.echo = {{"outside_gap_margin", slack}, {"all_equal", all_equal ? 1.0 : 0.0}};
    }
    return v;
}

conditions::Verdict two_block_full(const SystemParams& params, const DerivedExponents& exps,
                                   Prediction& pred, bool& ran, CountReport& computed) {
    if (!exps.sub()) fail(errc::wrong_regime, "two-block uniqueness needs constant p < 2");
    const int n = params.n;
    if (n % 2 != 0) fail(errc::wrong_regime, "two-block uniqueness needs n = 2m");
    int m = n / 2;
    double lo = params.eta[0], hi = params.eta[m];
    for (int i = 0; i < m; ++i)
        if (!rel_close(params.eta[i], lo, params.tol.exponent) ||
            !rel_close(params.eta[m + i], hi, params.tol.exponent))
            fail(errc::wrong_regime, "self-couplings must split into two equal blocks");
    double alpha = 0.0;
    if (!params.alpha_constant(&alpha))
        fail(errc::wrong_regime, "two-block uniqueness needs a constant coupling");

    auto v = conditions::two_block_uniqueness(m, lo, hi, alpha, params.tol.root);
    if (alpha > hi) {
        computed = count_alpha_large(params, exps);
        ran = true;
        const auto& t = computed.solutions.at(0).t;
        auto pair = conditions::two_block_pair_checks(m, lo, hi, alpha, t[0], t[m],
                                                      params.tol.root);
        for (const auto& [key, value] : pair.echo) v.echo.emplace_back("pair_" + key, value);
        if (v.holds && !pair.holds) v.holds = false;
    }
    pred = {Prediction::Kind::Exactly, 1};
    return v;
}

VerifyOutcome run_condition(const std::string& id, const SystemParams& params, double xi_opt) {
    VerifyOutcome out;
    auto exps = derive(params);
    auto& v = out.verdict;
    double xi = xi_opt > 0.0 ? xi_opt : 0.5;

    auto predict = [&](Prediction::Kind kind, long long value = 0) {
        out.prediction = {kind, value};
    };
    long long ladder = (1LL << params.n) - 1;

    if (id == "thm2.1a" || id == "rem2.1") {
        double threshold = id == "rem2.1" ? alpha_star_star(params) : alpha_star(params);
        double worst = kInf;
        for (int i = 0; i < params.n; ++i)
            for (int j = 0; j < params.n; ++j)
                if (i != j) worst = std::min(worst, threshold - params.alpha(i, j));
        v.id = id;
        v.slack = worst;
        v.holds = worst > 0.0;
        v.echo = {{"threshold", threshold}};
        predict(Prediction::Kind::AtLeast, ladder);
    } else if (id == "thm2.1b") {
        double pv = 0.0;
        if (!params.p_constant(&pv) || !(pv < 2.0))
            fail(errc::wrong_regime, "inverse-positivity route needs constant p < 2");
        auto rep = conditions::inverse_positivity(params.coupling_matrix(), params.tol.root);
        auto sums = rep.row_sums();
        v.id = id;
        v.holds = rep.holds();
        v.slack = rep.holds() ? *std::min_element(sums.begin(), sums.end()) : -1.0;
        v.echo = {{"det", rep.det},
                  {"row_sum_min", *std::min_element(sums.begin(), sums.end())}};
        predict(Prediction::Kind::AtLeast, 1);
    } else if (id == "prop3.1") {
        double alpha = 0.0;
        if (!params.alpha_constant(&alpha))
            fail(errc::wrong_regime, "closed forms need a constant coupling");
        if (!(alpha > params.eta.back()))
            fail(errc::wrong_regime, "closed forms need alpha above eta_n");
        auto rep = conditions::inverse_positivity(params.coupling_matrix(), params.tol.root);
        auto closed = conditions::closed_form_inverse(params.eta, alpha);
        double worst = 0.0;
        for (int i = 0; i < params.n; ++i)
            for (int j = 0; j < params.n; ++j)
                worst = std::max(worst, std::fabs(closed(i, j) - rep.inverse(i, j)));
        double det_closed = conditions::constant_coupling_det(params.eta, alpha);
        double gamma0 = conditions::perturbation_radius_estimate(params.eta, alpha);
        v.id = id;
        v.holds = rep.holds() && worst < 1e-8;
        v.slack = v.holds ? 1e-8 - worst : -1.0;
        v.echo = {{"inverse_agreement", worst},
                  {"det_closed_form", det_closed},
                  {"det_numeric", rep.det},
                  {"gamma0_lower_bound", gamma0}};
        predict(Prediction::Kind::AtLeast, 1);
    } else if (id == "prop3.2a" || id == "prop3.2b" || id == "prop3.2c") {
        auto kind = id == "prop3.2a"   ? conditions::TemplateKind::A
                    : id == "prop3.2b" ? conditions::TemplateKind::B
                                       : conditions::TemplateKind::C;
        v = conditions::template_check(params.coupling_matrix(), kind, params.tol.root);
        predict(Prediction::Kind::AtLeast, 1);
    } else if (id == "thm2.2b" || id == "lem4.3") {
        if (!exps.sub()) fail(errc::wrong_regime, "unique-count condition needs p < 2");
        double alpha = 0.0;
        if (!params.alpha_constant(&alpha))
            fail(errc::wrong_regime, "unique-count condition needs a constant coupling");
        v.id = id;
        v.slack = alpha - params.eta.back();
        v.holds = v.slack >= -params.tol.root;
        v.echo = {{"eta_n", params.eta.back()}};
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "lem4.5") {
        v = conditions::upper_window_uniqueness(params, exps);
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "lem4.6") {
        v = conditions::small_coupling_multiplicity(params, exps);
        predict(Prediction::Kind::AtLeast, ladder);
    } else if (id == "lem4.7") {
        v = xi_opt > 0.0 ? conditions::exact_multiplicity_xi(params, exps, xi)
                         : conditions::exact_multiplicity_xi_exists(params, exps);
        predict(Prediction::Kind::Exactly, ladder);
    } else if (id == "lem4.7simple") {
        v = conditions::exact_multiplicity_xi_simple(params, exps);
        predict(Prediction::Kind::Exactly, ladder);
    } else if (id == "lem4.8") {
        v = conditions::exact_multiplicity_chi(params, exps);
        predict(Prediction::Kind::Exactly, ladder);
    } else if (id == "lem4.8simple") {
        v = conditions::exact_multiplicity_chi_simple(params, exps);
        predict(Prediction::Kind::Exactly, ladder);
    } else if (id == "thm2.2c") {
        auto vx = conditions::exact_multiplicity_xi_exists(params, exps);
        auto vc = conditions::exact_multiplicity_chi(params, exps);
        v = vx.slack >= vc.slack ? vx : vc;
        v.id = id;
        v.holds = vx.holds || vc.holds;
        predict(Prediction::Kind::Exactly, ladder);
    } else if (id == "thm2.2d") {
        v = two_block_full(params, exps, out.prediction, out.ran_count, out.computed);
    } else if (id == "thm2.3a") {
        v = quadratic_gap_verdict(params, false);
        double alpha = 0.0;
        params.alpha_constant(&alpha);
        bool all_equal = rel_close(params.eta.front(), params.eta.back(), params.tol.exponent) &&
                         rel_close(alpha, params.eta.front(), params.tol.exponent);
        if (all_equal) predict(Prediction::Kind::Infinite);
        else predict(Prediction::Kind::Exactly, 1);
    } else if (id == "thm2.3b") {
        v = quadratic_gap_verdict(params, true);
        predict(Prediction::Kind::NoSolution);
    } else if (id == "thm2.3c") {
        v = quadratic_gap_verdict(params, false);
        v.id = id;
        double alpha = 0.0;
        params.alpha_constant(&alpha);
        v.holds = alpha > params.eta.back();
        v.slack = alpha - params.eta.back();
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "thm2.4") {
        for (int i = 0; i < params.n; ++i)
            for (int j = 0; j < params.n; ++j)
                if (i != j && !(params.p(i, j) > 2.0 && params.p(i, j) < params.two_star()))
                    fail(errc::wrong_regime, "existence box needs every p in (2, 2s*)");
        double beta = exps.beta;
        std::vector<double> top(params.n);
        for (int i = 0; i < params.n; ++i) top[i] = pow_pos(1.0 / params.eta[i], beta);
        double eps = *std::min_element(top.begin(), top.end()) / 10.0;
        SignCertificate cert;
        for (int tries = 0; tries < 8; ++tries, eps /= 10.0) {
            Box box{std::vector<double>(params.n, eps), top};
            cert = miranda_certify(box, params, std::max(params.tol.grid_min, 64));
            if (cert.certified()) break;
        }
        v.id = id;
        v.holds = cert.certified();
        v.slack = v.holds ? 1.0 : -1.0;
        v.echo = {{"epsilon", eps}, {"sign_parity", double(cert.sign_parity)}};
        predict(Prediction::Kind::AtLeast, 1);
    } else if (id == "thm2.5a" || id == "lem7.1") {
        if (!exps.super()) fail(errc::wrong_regime, "uniqueness condition needs p > 2");
        double alpha = 0.0;
        if (!params.alpha_constant(&alpha))
            fail(errc::wrong_regime, "uniqueness condition needs a constant coupling");
        double eta1 = params.eta.front();
        v.id = id;
        if (alpha <= eta1 + params.tol.root) {
            v.slack = eta1 - alpha;
            v.holds = true;
            v.echo = {{"eta_1", eta1}};
        } else if (params.n >= 2 && alpha < params.eta[1]) {
            v = conditions::lower_window_uniqueness(params, exps);
            v.id = id;
        } else {
            v.slack = eta1 - alpha;
            v.holds = false;
            v.echo = {{"eta_1", eta1}};
        }
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "delta0") {
        v = conditions::lower_window_uniqueness(params, exps);
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "thm2.5b") {
        v = peak_level_multiplicity(params, exps);
        auto table = make_branch_table(params, exps);
        long long j = 0;
        for (int i = 0; i < params.n; ++i)
            if (table.has_k(i)) ++j;
        predict(Prediction::Kind::AtLeast, (1LL << j) - 1);
    } else if (id == "thm2.5c") {
        v = conditions::near_critical_uniqueness(params, exps);
        predict(Prediction::Kind::Exactly, 1);
    } else if (id == "lem7.3") {
        v = conditions::extremum_bounds(params, exps);
    } else if (id == "lem7.4") {
        std::vector<double> seq = {2.1, 2.01, 2.001, 2.0001};
        auto table = conditions::branch_point_decay(params, xi, seq);
        v = table.verdict;
        for (const auto& row : table.rows)
            v.echo.emplace_back("ratio_p_" + format_double(row.p), row.ratio);
    } else {
        fail(errc::invalid_config, "unknown condition id " + id);
    }
    return out;
}

bool prediction_matches(const Prediction& pred, const CountReport& computed) {
    switch (pred.kind) {
    case Prediction::Kind::None: return true;
    case Prediction::Kind::Exactly:
        return computed.kind == TotalKind::Exact && computed.total == pred.value;
    case Prediction::Kind::AtLeast:
        if (computed.kind == TotalKind::Infinite) return true;
        if (computed.kind == TotalKind::None) return false;
        if (computed.kind == TotalKind::LowerBound) return true;  // inconclusive, not a mismatch
        return computed.total >= pred.value;
    case Prediction::Kind::NoSolution: return computed.kind == TotalKind::None;
    case Prediction::Kind::Infinite: return computed.kind == TotalKind::Infinite;
    }
    return true;
}

int cmd_verify(const json& config, const std::string& condition, double xi,
               const std::string& out_path) {
    auto params = io::params_from_json(config);
    auto outcome = run_condition(condition, params, xi);
    json j = io::verdict_to_json(outcome.verdict);
    bool mismatch = false;
    if (outcome.prediction.kind != Prediction::Kind::None) {
        switch (outcome.prediction.kind) {
        case Prediction::Kind::Exactly:
            j["predicted_total"] = outcome.prediction.value;
            break;
        case Prediction::Kind::AtLeast:
            j["predicted_total_at_least"] = outcome.prediction.value;
            break;
        case Prediction::Kind::NoSolution: j["predicted_total"] = "NONE"; break;
        case Prediction::Kind::Infinite: j["predicted_total"] = "INFINITE"; break;
        default: break;
        }
        if (outcome.verdict.holds) {
            CountReport computed =
                outcome.ran_count ? outcome.computed : count_synchronized(params);
            j["computed_total"] = total_cell(computed);
            j["computed_kind"] = total_kind_name(computed.kind);
            mismatch = !prediction_matches(outcome.prediction, computed);
            j["match"] = !mismatch;
        }
    }
    j["params"] = io::params_to_json(params);
    emit(j.dump(2) + "\n", out_path);
    return mismatch ? 3 : 0;
}

int cmd_sweep(const json& config, const std::string& param, double from, double to, int steps,
              const std::string& out_path) {
    if (!(from < to) || steps < 2)
        fail(errc::invalid_config, "sweep needs from < to and at least two steps");
    if (param != "alpha" && param != "p")
        fail(errc::invalid_config, "sweep parameter must be alpha or p");

    std::vector<double> values(steps);
    for (int i = 0; i < steps; ++i) values[i] = from + (to - from) * i / double(steps - 1);

    auto run_point = [&](double value) -> std::string {
        json j = config;
        j[param] = value;
        if (param == "p") j.erase("q");
        std::ostringstream row;
        row << format_double(value) << ",";
        try {
            auto params = io::params_from_json(j);
            auto rep = count_synchronized(params);
            row << rep.rho_star << "," << rep.rho_star_star << "," << total_cell(rep);
        } catch (const solver_error& e) {
            row << "0,0,error:" << errc_name(e.code());
        }
        return row.str();
    };

    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> rows(steps);
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (unsigned w = 0; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < steps; i = next.fetch_add(1))
                rows[i] = run_point(values[i]);
        }));
    for (auto& f : futs) f.get();

    std::ostringstream csv;
    csv << "value,rho_star,rho_star_star,total\n";
    for (const auto& r : rows) csv << r << "\n";
    emit(csv.str(), out_path);
    return 0;
}

int cmd_bubble(const json& config, double from, double to, int steps,
               const std::string& out_path) {
    auto params = io::params_from_json(config);
    auto report = count_synchronized(params);
    if (report.solutions.empty())
        fail(errc::no_convergence, "no solution available for a profile export");
    BubbleSpec spec{params.dim, params.s_max()};
    if (!(from >= 0.0) || !(to > from) || steps < 2)
        fail(errc::invalid_config, "bubble needs 0 <= from < to and at least two steps");
    std::vector<double> radii(steps);
    for (int i = 0; i < steps; ++i) radii[i] = from + (to - from) * i / double(steps - 1);
    auto k = params.to_original(report.solutions.front().k);
    auto table = sync_profile(k, spec, radii);
    std::ostringstream csv;
    table.to_csv(csv);
    emit(csv.str(), out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synchronized solution counter for coupled critical-exponent systems"};
    app.require_subcommand(1);

    std::string config_path, condition, out_path, param = "alpha";
    double from = 0.0, to = 10.0, xi = 0.0;
    int steps = 101, grid = 0;

    auto add_common = [&](CLI::App* sub, bool need_config = true) {
        auto* opt = sub->add_option("--config", config_path, "JSON configuration file");
        if (need_config) opt->required();
        sub->add_option("--out", out_path, "write the report to a file instead of stdout");
    };

    auto* count = app.add_subcommand("count", "count synchronized solutions");
    add_common(count);
    auto* solve = app.add_subcommand("solve", "solve and report solution vectors");
    add_common(solve);
    auto* verify = app.add_subcommand("verify", "evaluate a sufficient condition");
    add_common(verify);
    verify->add_option("--condition", condition, "condition identifier")->required();
    verify->add_option("--xi", xi, "free parameter for conditions that take one");
    auto* sweep = app.add_subcommand("sweep", "sweep a parameter and tabulate counts");
    add_common(sweep);
    sweep->add_option("--param", param, "alpha or p");
    sweep->add_option("--from", from, "sweep start")->required();
    sweep->add_option("--to", to, "sweep end")->required();
    sweep->add_option("--steps", steps, "number of sweep points")->required();
    auto* orc = app.add_subcommand("oracle", "independent brute-force count");
    add_common(orc);
    orc->add_option("--grid", grid, "scan density override");
    auto* bubble = app.add_subcommand("bubble", "export a synchronized profile as CSV");
    add_common(bubble);
    bubble->add_option("--from", from, "first radius");
    bubble->add_option("--to", to, "last radius");
    bubble->add_option("--steps", steps, "number of radii");

    CLI11_PARSE(app, argc, argv);

    try {
        if (count->parsed()) {
            auto params = io::params_from_json(load_config(config_path));
            auto report = count_synchronized(params);
            emit(io::count_report_to_json(report, params).dump(2) + "\n", out_path);
            return 0;
        }
        if (solve->parsed()) {
            auto params = io::params_from_json(load_config(config_path));
            auto report = count_synchronized(params);
            json j;
            j["kind"] = total_kind_name(report.kind);
            json sols = json::array();
            double max_res = 0.0;
            for (const auto& s : report.solutions) {
                sols.push_back(io::solution_to_json(s, params));
                max_res = std::max(max_res, s.residual);
            }
            j["solutions"] = std::move(sols);
            j["max_residual"] = max_res;
            if (!report.note.empty()) j["note"] = report.note;
            j["params"] = io::params_to_json(params);
            emit(j.dump(2) + "\n", out_path);
            return 0;
        }
        if (verify->parsed()) return cmd_verify(load_config(config_path), condition, xi, out_path);
        if (sweep->parsed())
            return cmd_sweep(load_config(config_path), param, from, to, steps, out_path);
        if (orc->parsed()) {
            auto params = io::params_from_json(load_config(config_path));
            auto exps = derive(params);
            oracle::ScanConfig cfg;
            if (grid > 0) {
                cfg.points_per_decade = std::max(32, grid);
                cfg.grid_per_axis = std::max(8, grid);
            }
            CountReport report;
            bool scalar = params.alpha_constant() &&
                          (exps.regime == Regime::Subquadratic ||
                           exps.regime == Regime::Superquadratic);
            report = scalar ? oracle::scalar_scan_count(params, exps, cfg)
                            : oracle::grid_scan_count(params, cfg);
            emit(io::count_report_to_json(report, params).dump(2) + "\n", out_path);
            return 0;
        }
        if (bubble->parsed())
            return cmd_bubble(load_config(config_path), from, to, steps, out_path);
    } catch (const solver_error& e) {
        std::cerr << io::error_to_json(e).dump() << "\n";
        return (e.code() == errc::no_convergence || e.code() == errc::grid_unstable) ? 2 : 1;
    } catch (const std::exception& e) {
        json j;
        j["error"] = "INTERNAL";
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 2;
    }
    return 0;
}
