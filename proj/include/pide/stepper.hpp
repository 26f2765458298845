#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pide/grid.hpp"
#include "pide/integral.hpp"
#include "pide/kernels.hpp"
#include "pide/mesh.hpp"
#include "pide/tridiag.hpp"

namespace pide {

/// Problem data for  u_t - c1 u_xx + c2 u_x + c3 u + (J u) = f  on (x_l, x_r)
/// with Dirichlet boundary data, where (J u)(x) = integral of rho(y - x) u(y)
/// over the domain. Empty std::function members mean "identically zero" (an
/// empty rho disables the nonlocal term entirely). The source f is never
/// sampled at t = 0, so an initial-time singularity in f is acceptable.
struct PideProblem {
    double c1 = 1.0;  ///< diffusion coefficient, must be positive
    double c2 = 0.0;  ///< advection coefficient
    double c3 = 0.0;  ///< reaction coefficient
    std::function<double(double, double)> f;      ///< source f(x, t)
    std::function<double(double)> u0;             ///< initial data u0(x)
    std::function<double(double)> ub_left;        ///< left Dirichlet value vs t
    std::function<double(double)> ub_right;       ///< right Dirichlet value vs t
    std::function<double(double)> rho;            ///< nonlocal kernel rho(y), signed
    std::function<double(double, double)> exact;  ///< closed-form solution when known
    double alpha = 1.0;  ///< temporal regularity exponent near t = 0 (metadata)
};

/// Second-order extrapolation E u^{n-1} = (1 + r) u^{n-1} - r u^{n-2} on the
/// full node set, boundary values included. With r = 0 this reduces to the
/// first-step convention E u^0 = u^0.
[[nodiscard]] inline std::vector<double> extrapolate(double r, const std::vector<double>& u_prev,
                                                     const std::vector<double>& u_prev2) {
    if (u_prev.size() != u_prev2.size())
        throw std::invalid_argument("extrapolate: size mismatch");
    std::vector<double> e(u_prev.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = (1.0 + r) * u_prev[i] - r * u_prev2[i];
    return e;
}

/// A priori step-size restriction from the energy argument:
///   tau_max <= min{ 1/(2 C1),
///                   1/(2 (c2^2/c1 + 4|c3| + 2 C_J)),
///                   1/(4 (5 C_J + 4|c3|)) },
///   C1 = c2^2/(c1 C_r delta) + 2|c3| + 2 C_J (1 + 2 r_max),
/// with C_r the quadratic-form constant, delta the observed ratio margin of
/// the mesh, and C_J an operator-norm estimate of the nonlocal term. The
/// report is informational: runs proceed whether or not it is satisfied.
struct StabilityReport {
    double c_j = 0.0;          ///< operator norm estimate of the nonlocal term
    double c_r = 0.0;          ///< quadratic-form constant
    double delta = 0.0;        ///< observed ratio margin of the time mesh
    double c1_constant = 0.0;  ///< the constant C1 above
    double tau_bound = 0.0;    ///< admissible maximum step (0 when delta <= 0)
    double tau_max = 0.0;      ///< observed maximum step
    bool satisfied = false;
};

[[nodiscard]] inline StabilityReport stability_report(const PideProblem& prob,
                                                      const TimeMesh& mesh, double c_j) {
    StabilityReport rep;
    rep.c_j = c_j;
    rep.c_r = ratio_form_constant();
    rep.delta = check_ratio_condition(mesh).delta_margin;
    rep.tau_max = mesh.max_step();
    if (!(rep.delta > 0.0) || !(prob.c1 > 0.0)) return rep;
    const double c2sq = prob.c2 * prob.c2;
    const double c3a = std::abs(prob.c3);
    rep.c1_constant = c2sq / (prob.c1 * rep.c_r * rep.delta) + 2.0 * c3a +
                      2.0 * c_j * (1.0 + 2.0 * bdf2_max_ratio());
    // Vanishing denominators mean that term imposes no restriction (IEEE inf).
    const double bound_a = 1.0 / (2.0 * rep.c1_constant);
    const double bound_b = 1.0 / (2.0 * (c2sq / prob.c1 + 4.0 * c3a + 2.0 * c_j));
    const double bound_c = 1.0 / (4.0 * (5.0 * c_j + 4.0 * c3a));
    rep.tau_bound = std::min({bound_a, bound_b, bound_c});
    rep.satisfied = rep.tau_max <= rep.tau_bound;
    return rep;
}

namespace detail {

/// One implicit solve shared by the first and the interior steps: the
/// time-derivative kernel and the reaction/diffusion/advection terms are
/// treated implicitly, the nonlocal term explicitly through extrapolated
/// history (extrapolated boundary values included).
[[nodiscard]] inline std::vector<double> imex_step(
    const PideProblem& prob, const SpatialGrid& g, double t_n, double r_n, double b0_n,
    double b1_n, const std::vector<double>& u_prev, const std::vector<double>& u_prev2,
    const IntegralOperator* jop, bool fast_integral, double* residual_out) {
    const int M = g.M;
    if (static_cast<int>(u_prev.size()) != M + 1 || static_cast<int>(u_prev2.size()) != M + 1)
        throw std::invalid_argument("imex_step: history size mismatch");
    std::vector<double> ju;
    if (jop != nullptr) {
        const std::vector<double> eu = extrapolate(r_n, u_prev, u_prev2);
        ju = fast_integral ? apply_integral_fast(*jop, eu) : apply_integral_direct(*jop, eu);
    }
    const TridiagonalMatrix A = assemble_tridiagonal(b0_n, prob.c1, prob.c2, prob.c3, g);
    std::vector<double> rhs(M - 1);
    for (int i = 1; i < M; ++i) {
        double v = b0_n * u_prev[i] - b1_n * (u_prev[i] - u_prev2[i]);
        if (prob.f) v += prob.f(g.x[i], t_n);
        if (jop != nullptr) v -= ju[i];
        rhs[i - 1] = v;
    }
    const double ubl = prob.ub_left ? prob.ub_left(t_n) : 0.0;
    const double ubr = prob.ub_right ? prob.ub_right(t_n) : 0.0;
    rhs.front() -= A.sub[0] * ubl;
    rhs.back() -= A.super[M - 2] * ubr;
    const std::vector<double> interior = thomas_solve(A, rhs);
    if (residual_out != nullptr) *residual_out = tridiagonal_residual(A, interior, rhs);
    std::vector<double> u(M + 1);
    u[0] = ubl;
    u[M] = ubr;
    std::copy(interior.begin(), interior.end(), u.begin() + 1);
    return u;
}

}  // namespace detail

/// First step: backward Euler from the initial data to t_1, with E u^0 = u^0
/// feeding the nonlocal term.
[[nodiscard]] inline std::vector<double> bdf1_step(const PideProblem& prob, const SpatialGrid& g,
                                                   const TimeMesh& mesh,
                                                   const std::vector<double>& u0,
                                                   const IntegralOperator* jop = nullptr,
                                                   bool fast_integral = true,
                                                   double* residual_out = nullptr) {
    if (mesh.N < 1) throw std::invalid_argument("bdf1_step: empty mesh");
    return detail::imex_step(prob, g, mesh.t[1], 0.0, 1.0 / mesh.tau[1], 0.0, u0, u0, jop,
                             fast_integral, residual_out);
}

/// Interior step n >= 2: variable-step implicit BDF2 in time with the
/// extrapolated nonlocal term.
[[nodiscard]] inline std::vector<double> bdf2_step(
    const PideProblem& prob, const SpatialGrid& g, const TimeMesh& mesh, int n,
    const std::vector<double>& u_prev, const std::vector<double>& u_prev2,
    const IntegralOperator* jop = nullptr, bool fast_integral = true,
    double* residual_out = nullptr) {
    if (n < 2 || n > mesh.N) throw std::invalid_argument("bdf2_step: need 2 <= n <= N");
    const double rn = mesh.r[n];
    const double b0 = (1.0 + 2.0 * rn) / (mesh.tau[n] * (1.0 + rn));
    const double b1 = -rn * rn / (mesh.tau[n] * (1.0 + rn));
    return detail::imex_step(prob, g, mesh.t[n], rn, b0, b1, u_prev, u_prev2, jop, fast_integral,
                             residual_out);
}

struct StepperOptions {
    bool fast_integral = true;   ///< route the nonlocal term through the FFT path
    bool store_history = false;  ///< keep every level u^0..u^N in the snapshots
    int norm_iterations = 100;   ///< power-iteration count for the stability report
    std::vector<int> snapshot_levels;  ///< extra time indices to keep (final level always kept)
    /// Called after every accepted level (including the initial one) with
    /// (n, t_n, u^n) on the full node set.
    std::function<void(int, double, const std::vector<double>&)> observer;
};

struct Snapshot {
    int n = 0;
    double t = 0.0;
    std::vector<double> u;  ///< size M+1, boundary values included
};

struct SchemeDiagnostics {
    StabilityReport stability;             ///< constants behind the bound
    double stability_bound = 0.0;          ///< admissible max step from the report
    double tau_max = 0.0;                  ///< observed max step
    bool bound_satisfied = false;          ///< tau_max <= stability_bound
    std::vector<double> per_step_residual; ///< relative solve residual, entry n for step n
};

struct SolveResult {
    std::vector<Snapshot> snapshots;  ///< requested levels; always holds the final level
    SchemeDiagnostics diagnostics;
    double wall_time_seconds = 0.0;

    [[nodiscard]] const std::vector<double>& final_u() const { return snapshots.back().u; }
};

/// Runs the full time march on the given meshes: one backward-Euler step,
/// then BDF2 up to the final time (a one-step mesh stops after backward
/// Euler). Solver failures are reported with the offending step index.
[[nodiscard]] inline SolveResult run(const PideProblem& prob, const SpatialGrid& g,
                                     const TimeMesh& mesh, const StepperOptions& opt = {}) {
    if (!prob.u0) throw std::invalid_argument("run: problem has no initial data");
    if (mesh.N < 1) throw std::invalid_argument("run: need at least one time step");
    const auto start = std::chrono::steady_clock::now();

    std::optional<IntegralOperator> jop;
    double c_j = 0.0;
    if (prob.rho) {
        jop = build_integral_operator(g, prob.rho);
        c_j = operator_norm_estimate(*jop, opt.norm_iterations);
    }
    SolveResult res;
    res.diagnostics.stability = stability_report(prob, mesh, c_j);
    res.diagnostics.stability_bound = res.diagnostics.stability.tau_bound;
    res.diagnostics.tau_max = res.diagnostics.stability.tau_max;
    res.diagnostics.bound_satisfied = res.diagnostics.stability.satisfied;
    res.diagnostics.per_step_residual.assign(mesh.N + 1, 0.0);

    std::vector<char> keep(mesh.N + 1, opt.store_history ? 1 : 0);
    keep[mesh.N] = 1;
    for (int level : opt.snapshot_levels)
        if (0 <= level && level <= mesh.N) keep[level] = 1;

    std::vector<double> u_prev(g.M + 1);
    for (int i = 0; i <= g.M; ++i) u_prev[i] = prob.u0(g.x[i]);
    std::vector<double> u_prev2 = u_prev;
    if (opt.observer) opt.observer(0, 0.0, u_prev);
    if (keep[0]) res.snapshots.push_back({0, 0.0, u_prev});

    const Bdf2Kernels kern = bdf2_kernels(mesh);
    const IntegralOperator* jp = jop ? &*jop : nullptr;
    for (int n = 1; n <= mesh.N; ++n) {
        double residual = 0.0;
        std::vector<double> u;
        try {
            u = detail::imex_step(prob, g, mesh.t[n], mesh.r[n], kern.b0[n], kern.b1[n], u_prev,
                                  u_prev2, jp, opt.fast_integral, &residual);
        } catch (const SolverError& err) {
            throw SolverError("step " + std::to_string(n) + ": " + err.what());
        }
        res.diagnostics.per_step_residual[n] = residual;
        u_prev2 = std::move(u_prev);
        u_prev = std::move(u);
        if (opt.observer) opt.observer(n, mesh.t[n], u_prev);
        if (keep[n]) res.snapshots.push_back({n, mesh.t[n], u_prev});
    }
    res.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace pide
