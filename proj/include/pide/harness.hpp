#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pide/kernels.hpp"
#include "pide/mesh.hpp"
#include "pide/problems.hpp"
#include "pide/stepper.hpp"

namespace pide {

/// Rejected experiment configuration: non-doubling refinement lists, unknown
/// problem ids, malformed CSV, out-of-range sizes.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// One line of a study: field studies fill (alpha, gamma), price studies fill
/// spot. The order entry belongs to the refined row — order on row N is
/// log2(error(N/2) / error(N)) — and is NaN on the first row of each block.
struct ConvergenceRow {
    double alpha = 0.0;
    double gamma = 0.0;
    int N = 0;
    int M = 0;
    double spot = 0.0;
    double error = 0.0;
    double order = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] bool has_order() const { return !std::isnan(order); }
};

enum class StudyKind {
    field_error,  ///< discrete L2 error against a closed-form solution
    price_error,  ///< absolute price error at reference spots
};

struct ConvergenceReport {
    StudyKind kind = StudyKind::field_error;
    std::vector<ConvergenceRow> rows;
};

namespace detail {

inline void require_doubling(const std::vector<int>& values, const char* what) {
    if (values.empty()) throw ConfigError(std::string(what) + ": empty refinement list");
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i + 1] != 2 * values[i])
            throw ConfigError(std::string(what) + ": refinement list must double (" +
                              std::to_string(values[i]) + " -> " +
                              std::to_string(values[i + 1]) + ")");
}

[[nodiscard]] inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

}  // namespace detail

struct StudyOptions {
    double T = 1.0;             ///< final time for the field study
    bool fast_integral = true;  ///< route the nonlocal term through the FFT path
};

/// Measures e(N) = max over steps of the discrete L2 distance to the exact
/// solution. The maximum over the march (rather than the final level alone)
/// is what tracks the min(2, alpha*gamma) rates: the largest error sits in
/// the initial layer, and at the final time the graded runs superconverge.
[[nodiscard]] inline double max_step_error(const PideProblem& prob, const SpatialGrid& g,
                                           const TimeMesh& mesh, bool fast_integral = true) {
    if (!prob.exact) throw ConfigError("max_step_error: problem has no exact solution");
    double worst = 0.0;
    std::vector<double> diff(g.M + 1, 0.0);
    StepperOptions sopt;
    sopt.fast_integral = fast_integral;
    sopt.observer = [&](int n, double t, const std::vector<double>& u) {
        if (n == 0) return;
        for (int i = 0; i <= g.M; ++i) diff[i] = u[i] - prob.exact(g.x[i], t);
        worst = std::max(worst, l2_norm(g, diff));
    };
    (void)run(prob, g, mesh, sopt);
    return worst;
}

/// Temporal convergence study on a problem with a closed-form solution: one
/// row per (gamma, N) with doubling N, orders chained within each gamma
/// block. problem_id selects the benchmark; "manufactured" is the only field
/// benchmark shipped.
[[nodiscard]] inline ConvergenceReport convergence_study(const std::string& problem_id,
                                                         double alpha,
                                                         const std::vector<double>& gamma_list,
                                                         const std::vector<int>& n_list, int M,
                                                         const StudyOptions& opt = {}) {
    if (problem_id != "manufactured")
        throw ConfigError("convergence_study: unknown problem id '" + problem_id + "'");
    if (gamma_list.empty()) throw ConfigError("convergence_study: empty gamma list");
    detail::require_doubling(n_list, "convergence_study");
    if (M < 2) throw ConfigError("convergence_study: need M >= 2");
    const PideProblem prob = manufactured_problem(alpha);
    const SpatialGrid g = manufactured_grid(M);
    ConvergenceReport report;
    report.kind = StudyKind::field_error;
    for (double gamma : gamma_list) {
        double previous = 0.0;
        bool first = true;
        for (int N : n_list) {
            const TimeMesh mesh = build_graded_mesh(opt.T, N, gamma);
            ConvergenceRow row;
            row.alpha = alpha;
            row.gamma = gamma;
            row.N = N;
            row.M = M;
            row.error = max_step_error(prob, g, mesh, opt.fast_integral);
            if (!first && row.error > 0.0 && previous > 0.0)
                row.order = std::log2(previous / row.error);
            previous = row.error;
            first = false;
            report.rows.push_back(row);
        }
    }
    return report;
}

struct MertonStudyOptions {
    double gamma = 4.0;
    std::vector<double> spots{90.0, 100.0, 110.0};
    bool fast_integral = true;
    int series_terms = 30;
};

/// Price-error study for the jump-diffusion call: per (M, N) pair and
/// reference spot, the absolute difference between the interpolated grid
/// price and the conditioning-series price. Orders are chained per spot.
[[nodiscard]] inline ConvergenceReport merton_study(
    const MertonParams& params, const std::vector<std::pair<int, int>>& mn_list,
    const MertonStudyOptions& opt = {}) {
    if (mn_list.empty()) throw ConfigError("merton_study: empty refinement list");
    if (opt.spots.empty()) throw ConfigError("merton_study: empty spot list");
    std::vector<int> ms, ns;
    for (const auto& [m, n] : mn_list) {
        if (m % 2 != 0)
            throw ConfigError("merton_study: M must be even so the strike is a grid node");
        ms.push_back(m);
        ns.push_back(n);
    }
    detail::require_doubling(ms, "merton_study (M)");
    detail::require_doubling(ns, "merton_study (N)");

    std::vector<double> references;
    references.reserve(opt.spots.size());
    for (double s : opt.spots)
        references.push_back(merton_reference_price(s, params, opt.series_terms));

    ConvergenceReport report;
    report.kind = StudyKind::price_error;
    std::vector<double> previous(opt.spots.size(), 0.0);
    bool first = true;
    for (const auto& [m, n] : mn_list) {
        const SpatialGrid g = merton_grid(params, m);
        const TimeMesh mesh = build_graded_mesh(params.maturity, n, opt.gamma);
        const PideProblem prob = merton_problem(params);
        StepperOptions sopt;
        sopt.fast_integral = opt.fast_integral;
        const SolveResult result = run(prob, g, mesh, sopt);
        for (std::size_t s = 0; s < opt.spots.size(); ++s) {
            ConvergenceRow row;
            row.alpha = 0.5;
            row.gamma = opt.gamma;
            row.N = n;
            row.M = m;
            row.spot = opt.spots[s];
            row.error = std::abs(price_at(result, g, params, opt.spots[s]) - references[s]);
            if (!first && row.error > 0.0 && previous[s] > 0.0)
                row.order = std::log2(previous[s] / row.error);
            previous[s] = row.error;
            report.rows.push_back(row);
        }
        first = false;
    }
    return report;
}

/// Human-readable diagnostics for one time mesh: identity residuals, bound
/// slacks, and quadratic-form margins, with an overall PASS/FAIL verdict.
[[nodiscard]] inline std::string kernel_report(const TimeMesh& mesh, int random_draws = 100,
                                               std::uint64_t seed = 0x5eed) {
    const RatioReport ratios = check_ratio_condition(mesh);
    const KernelIdentityReport ident = run_kernel_identity_checks(mesh);
    const Bdf2Kernels kern = bdf2_kernels(mesh);
    const DocTable doc = doc_kernels(kern);
    const DccTable dcc = dcc_from_doc(doc);

    double b_margin = std::numeric_limits<double>::infinity();
    double theta_margin = std::numeric_limits<double>::infinity();
    if (mesh.N >= 2 && ratios.delta_margin > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> omega(mesh.N + 1, 0.0);
        for (int draw = 0; draw < random_draws; ++draw) {
            for (int k = 2; k <= mesh.N; ++k) omega[k] = dist(rng);
            b_margin = std::min(b_margin, quadratic_form_b(kern, omega) -
                                              b_form_lower_bound(mesh, omega, ratios.delta_margin));
            theta_margin =
                std::min(theta_margin,
                         quadratic_form_theta(doc, omega) -
                             theta_form_lower_bound(doc, mesh, omega, ratios.delta_margin));
        }
    }
    const double tol = 1e-12;
    bool pass = ratios.satisfies_A1 && ident.orthogonality <= tol && ident.completeness <= tol &&
                ident.relation <= tol && ident.theta_row_sum <= tol && ident.p_row_sum <= tol &&
                ident.telescope_full <= tol && ident.telescope_step <= tol &&
                ident.explicit_vs_cumulative <= tol && ident.p_two_tau_slack >= 0.0 &&
                ident.doc_positive;
    DccBoundReport bounds;
    if (ratios.satisfies_A1) {
        bounds = dcc_bound_check(mesh, dcc);
        pass = pass && bounds.passed;
    }
    if (mesh.N >= 2 && ratios.delta_margin > 0.0)
        pass = pass && b_margin >= -tol && theta_margin >= -tol;

    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "kernel diagnostics: N=%d gamma=%g T=%g\n", mesh.N,
                  mesh.gamma, mesh.T);
    os << line;
    std::snprintf(line, sizeof line,
                  "  ratio condition: r2=%.6g r_max_observed=%.6g delta=%.6g A1=%s\n", ratios.r2,
                  ratios.r_max_observed, ratios.delta_margin, ratios.satisfies_A1 ? "yes" : "no");
    os << line;
    const auto emit = [&](const char* name, double residual) {
        std::snprintf(line, sizeof line, "  %-28s %.3e  %s\n", name, residual,
                      residual <= tol ? "pass" : "FAIL");
        os << line;
    };
    emit("orthogonality residual", ident.orthogonality);
    emit("completeness residual", ident.completeness);
    emit("relation residual", ident.relation);
    emit("theta row-sum residual", ident.theta_row_sum);
    emit("p row-sum residual", ident.p_row_sum);
    emit("telescope (full) residual", ident.telescope_full);
    emit("telescope (step) residual", ident.telescope_step);
    emit("explicit vs cumulative", ident.explicit_vs_cumulative);
    std::snprintf(line, sizeof line, "  %-28s %.3e  %s\n", "p two-tau slack",
                  ident.p_two_tau_slack, ident.p_two_tau_slack >= 0.0 ? "pass" : "FAIL");
    os << line;
    std::snprintf(line, sizeof line, "  %-28s %s\n", "doc positivity",
                  ident.doc_positive ? "pass" : "FAIL");
    os << line;
    if (ratios.satisfies_A1) {
        std::snprintf(line, sizeof line,
                      "  dcc sharp bounds: tightest slack=%.3e violations=%d  %s\n",
                      bounds.tightest_slack, bounds.violations, bounds.passed ? "pass" : "FAIL");
        os << line;
    }
    if (mesh.N >= 2 && ratios.delta_margin > 0.0) {
        std::snprintf(line, sizeof line, "  quadratic form b margin      %.3e  %s (%d draws)\n",
                      b_margin, b_margin >= -tol ? "pass" : "FAIL", random_draws);
        os << line;
        std::snprintf(line, sizeof line, "  quadratic form theta margin  %.3e  %s (%d draws)\n",
                      theta_margin, theta_margin >= -tol ? "pass" : "FAIL", random_draws);
        os << line;
    }
    os << "overall: " << (pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

/// CSV emission. Field studies use columns alpha,gamma,N,M,error,order and
/// price studies M,N,spot,error,order; the order field is empty where absent.
/// Doubles carry 17 significant digits so parse(emit(report)) == report.
inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
    if (report.kind == StudyKind::field_error) {
        os << "alpha,gamma,N,M,error,order\n";
        for (const ConvergenceRow& row : report.rows) {
            os << detail::format_double(row.alpha) << ',' << detail::format_double(row.gamma)
               << ',' << row.N << ',' << row.M << ',' << detail::format_double(row.error) << ',';
            if (row.has_order()) os << detail::format_double(row.order);
            os << '\n';
        }
    } else {
        os << "M,N,spot,error,order\n";
        for (const ConvergenceRow& row : report.rows) {
            os << row.M << ',' << row.N << ',' << detail::format_double(row.spot) << ','
               << detail::format_double(row.error) << ',';
            if (row.has_order()) os << detail::format_double(row.order);
            os << '\n';
        }
    }
}

namespace detail {

[[nodiscard]] inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    fields.push_back(current);
    return fields;
}

[[nodiscard]] inline double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("CSV: bad ") + what + " value '" + s + "'");
    }
}

[[nodiscard]] inline int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("CSV: bad ") + what + " value '" + s + "'");
    }
}

}  // namespace detail

[[nodiscard]] inline ConvergenceReport read_convergence_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("CSV: empty input");
    ConvergenceReport report;
    if (line == "alpha,gamma,N,M,error,order" || line == "alpha,gamma,N,M,error,order\r") {
        report.kind = StudyKind::field_error;
    } else if (line == "M,N,spot,error,order" || line == "M,N,spot,error,order\r") {
        report.kind = StudyKind::price_error;
    } else {
        throw ConfigError("CSV: unrecognized header '" + line + "'");
    }
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != (report.kind == StudyKind::field_error ? 6u : 5u))
            throw ConfigError("CSV: wrong field count in '" + line + "'");
        ConvergenceRow row;
        if (report.kind == StudyKind::field_error) {
            row.alpha = detail::parse_double(f[0], "alpha");
            row.gamma = detail::parse_double(f[1], "gamma");
            row.N = detail::parse_int(f[2], "N");
            row.M = detail::parse_int(f[3], "M");
            row.error = detail::parse_double(f[4], "error");
            if (!f[5].empty()) row.order = detail::parse_double(f[5], "order");
        } else {
            row.M = detail::parse_int(f[0], "M");
            row.N = detail::parse_int(f[1], "N");
            row.spot = detail::parse_double(f[2], "spot");
            row.error = detail::parse_double(f[3], "error");
            if (!f[4].empty()) row.order = detail::parse_double(f[4], "order");
        }
        report.rows.push_back(row);
    }
    return report;
}

/// Flat dump of the kernel tables for one mesh: one line per (n, j) with the
/// step kernels alongside the DOC/DCC entries at lag n - j.
inline void write_kernel_tables_csv(std::ostream& os, const TimeMesh& mesh) {
    const Bdf2Kernels kern = bdf2_kernels(mesh);
    const DocTable doc = doc_kernels(kern);
    const DccTable dcc = dcc_from_doc(doc);
    os << "n,j,b0,b1,theta,p\n";
    for (int n = 1; n <= mesh.N; ++n)
        for (int j = 1; j <= n; ++j)
            os << n << ',' << j << ',' << detail::format_double(kern.b0[n]) << ','
               << detail::format_double(kern.b1[n]) << ','
               << detail::format_double(doc.theta[n][n - j]) << ','
               << detail::format_double(dcc.p[n][n - j]) << '\n';
}

/// Final-level dump for a single solve: node coordinate, computed value, and
/// (when the problem knows its solution) the exact value and the error.
inline void write_solution_csv(std::ostream& os, const SpatialGrid& g, const PideProblem& prob,
                               double t_final, const std::vector<double>& u) {
    const bool has_exact = static_cast<bool>(prob.exact);
    os << (has_exact ? "x,u,exact,error\n" : "x,u\n");
    for (int i = 0; i <= g.M; ++i) {
        os << detail::format_double(g.x[i]) << ',' << detail::format_double(u[i]);
        if (has_exact) {
            const double e = prob.exact(g.x[i], t_final);
            os << ',' << detail::format_double(e) << ',' << detail::format_double(u[i] - e);
        }
        os << '\n';
    }
}

}  // namespace pide
