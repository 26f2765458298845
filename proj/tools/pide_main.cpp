#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "pide/pide.hpp"

namespace {

constexpr int kMaxM = 8192;
constexpr int kMaxN = 8192;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

void check_desk_caps(const std::vector<int>& ms, const std::vector<int>& ns, bool force_large) {
    if (force_large) return;
    for (int m : ms)
        if (m > kMaxM)
            throw pide::ConfigError("M=" + std::to_string(m) + " exceeds the desk cap " +
                                    std::to_string(kMaxM) + "; pass --force-large to override");
    for (int n : ns)
        if (n > kMaxN)
            throw pide::ConfigError("N=" + std::to_string(n) + " exceeds the desk cap " +
                                    std::to_string(kMaxN) + "; pass --force-large to override");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw pide::ConfigError("cannot open output file '" + path + "'");
    return out;
}

void print_convergence_table(const pide::ConvergenceReport& report) {
    if (report.kind == pide::StudyKind::field_error) {
        std::printf("%7s %7s %6s %6s %14s %7s\n", "alpha", "gamma", "N", "M", "error", "order");
        for (const pide::ConvergenceRow& row : report.rows) {
            std::printf("%7.4f %7.4f %6d %6d %14.4e ", row.alpha, row.gamma, row.N, row.M,
                        row.error);
            if (row.has_order())
                std::printf("%7.2f\n", row.order);
            else
                std::printf("%7s\n", "--");
        }
    } else {
        std::printf("%6s %6s %8s %14s %7s\n", "M", "N", "spot", "error", "order");
        for (const pide::ConvergenceRow& row : report.rows) {
            std::printf("%6d %6d %8.2f %14.4e ", row.M, row.N, row.spot, row.error);
            if (row.has_order())
                std::printf("%7.2f\n", row.order);
            else
                std::printf("%7s\n", "--");
        }
    }
}

void print_diagnostics(const pide::SchemeDiagnostics& diag) {
    double worst_residual = 0.0;
    for (double r : diag.per_step_residual) worst_residual = std::max(worst_residual, r);
    std::printf("stability bound (report-only): tau_max=%.4e admissible=%.4e satisfied=%s\n",
                diag.tau_max, diag.stability_bound, diag.bound_satisfied ? "yes" : "no");
    std::printf("  constants: C_J=%.4e C_r=%.4e delta=%.4e C1=%.4e\n", diag.stability.c_j,
                diag.stability.c_r, diag.stability.delta, diag.stability.c1_constant);
    std::printf("worst linear-solve residual: %.3e\n", worst_residual);
}

struct SolveArgs {
    double alpha = 0.5;
    double gamma = 2.0;
    int N = 256;
    int M = 512;
    double T = 1.0;
    std::string fast = "on";
    std::string out;
    bool force_large = false;
};

int run_solve(const SolveArgs& a) {
    check_desk_caps({a.M}, {a.N}, a.force_large);
    const pide::PideProblem prob = pide::manufactured_problem(a.alpha);
    const pide::SpatialGrid g = pide::manufactured_grid(a.M);
    const pide::TimeMesh mesh = pide::build_graded_mesh(a.T, a.N, a.gamma);

    double worst_error = 0.0;
    std::vector<double> diff(g.M + 1, 0.0);
    pide::StepperOptions opt;
    opt.fast_integral = a.fast == "on";
    opt.observer = [&](int n, double t, const std::vector<double>& u) {
        if (n == 0) return;
        for (int i = 0; i <= g.M; ++i) diff[i] = u[i] - prob.exact(g.x[i], t);
        worst_error = std::max(worst_error, pide::l2_norm(g, diff));
    };
    const pide::SolveResult result = pide::run(prob, g, mesh, opt);

    const std::vector<double>& uN = result.final_u();
    for (int i = 0; i <= g.M; ++i) diff[i] = uN[i] - prob.exact(g.x[i], mesh.T);
    std::printf("solve: alpha=%g gamma=%g N=%d M=%d T=%g\n", a.alpha, a.gamma, a.N, a.M, a.T);
    std::printf("max-over-steps L2 error: %.6e\n", worst_error);
    std::printf("final-time L2 error:     %.6e\n", pide::l2_norm(g, diff));
    print_diagnostics(result.diagnostics);
    std::printf("wall time: %.3f s\n", result.wall_time_seconds);
    if (!a.out.empty()) {
        std::ofstream os = open_output(a.out);
        pide::write_solution_csv(os, g, prob, mesh.T, uN);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

struct ConvergenceArgs {
    double alpha = 0.5;
    std::vector<double> gammas{1.0, 2.0, 3.0, 4.0};
    std::vector<int> ns{128, 256, 512, 1024};
    int M = 2048;
    double T = 1.0;
    std::string fast = "on";
    std::string out;
    bool force_large = false;
};

int run_convergence(const ConvergenceArgs& a) {
    check_desk_caps({a.M}, a.ns, a.force_large);
    pide::StudyOptions opt;
    opt.T = a.T;
    opt.fast_integral = a.fast == "on";
    const pide::ConvergenceReport report =
        pide::convergence_study("manufactured", a.alpha, a.gammas, a.ns, a.M, opt);
    print_convergence_table(report);
    if (!a.out.empty()) {
        std::ofstream os = open_output(a.out);
        pide::write_convergence_csv(os, report);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

struct MertonArgs {
    std::vector<int> ns{256, 512, 1024, 2048};
    std::vector<int> ms;  // defaults to ns
    double gamma = 4.0;
    std::vector<double> spots{90.0, 100.0, 110.0};
    pide::MertonParams params;
    std::string fast = "on";
    std::string out;
    bool force_large = false;
};

int run_merton(const MertonArgs& a) {
    const std::vector<int>& ms = a.ms.empty() ? a.ns : a.ms;
    if (ms.size() != a.ns.size())
        throw pide::ConfigError("merton: --M list must match --N list in length");
    check_desk_caps(ms, a.ns, a.force_large);
    std::vector<std::pair<int, int>> mn;
    for (std::size_t i = 0; i < ms.size(); ++i) mn.emplace_back(ms[i], a.ns[i]);
    pide::MertonStudyOptions opt;
    opt.gamma = a.gamma;
    opt.spots = a.spots;
    opt.fast_integral = a.fast == "on";
    std::printf("reference series prices:");
    for (double s : a.spots)
        std::printf("  S=%g: %.8f", s, pide::merton_reference_price(s, a.params));
    std::printf("\n");
    const pide::ConvergenceReport report = pide::merton_study(a.params, mn, opt);
    print_convergence_table(report);
    if (!a.out.empty()) {
        std::ofstream os = open_output(a.out);
        pide::write_convergence_csv(os, report);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

struct KernelsArgs {
    double gamma = 2.0;
    int N = 64;
    double T = 1.0;
    std::string out;
    bool force_large = false;
};

int run_kernels(const KernelsArgs& a) {
    check_desk_caps({}, {a.N}, a.force_large);
    const pide::TimeMesh mesh = pide::build_graded_mesh(a.T, a.N, a.gamma);
    std::fputs(pide::kernel_report(mesh).c_str(), stdout);
    if (!a.out.empty()) {
        std::ofstream os = open_output(a.out);
        pide::write_kernel_tables_csv(os, mesh);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

void add_common_flags(CLI::App* sub, std::string& fast, std::string& out, bool& force_large) {
    sub->add_option("--fast-integral", fast, "Nonlocal term through the FFT path (on) or the direct sum (off)")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    sub->add_option("--out", out, "Write results as CSV to this path");
    sub->add_flag("--force-large", force_large, "Allow M or N beyond the desk caps");
    sub->set_config("--config", "", "Flat key=value config file; flags override it")
        ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable-step IMEX BDF2 solver for 1-D parabolic integro-differential equations"};
    app.require_subcommand(1);

    SolveArgs sa;
    CLI::App* solve = app.add_subcommand("solve", "Single run of the manufactured benchmark");
    solve->add_option("--alpha", sa.alpha, "Temporal regularity exponent in [1/2, 1]")
        ->capture_default_str();
    solve->add_option("--gamma", sa.gamma, "Time-mesh grading exponent (1 = uniform)")
        ->capture_default_str();
    solve->add_option("--N", sa.N, "Number of time steps")->capture_default_str();
    solve->add_option("--M", sa.M, "Number of space cells")->capture_default_str();
    solve->add_option("--T", sa.T, "Final time")->capture_default_str();
    add_common_flags(solve, sa.fast, sa.out, sa.force_large);

    ConvergenceArgs ca;
    CLI::App* conv = app.add_subcommand("convergence", "Temporal convergence study (manufactured benchmark)");
    conv->add_option("--alpha", ca.alpha, "Temporal regularity exponent in [1/2, 1]")
        ->capture_default_str();
    conv->add_option("--gamma", ca.gammas, "Comma list of grading exponents")
        ->delimiter(',')
        ->capture_default_str();
    conv->add_option("--N", ca.ns, "Comma list of step counts, each double the last")
        ->delimiter(',')
        ->capture_default_str();
    conv->add_option("--M", ca.M, "Number of space cells")->capture_default_str();
    conv->add_option("--T", ca.T, "Final time")->capture_default_str();
    add_common_flags(conv, ca.fast, ca.out, ca.force_large);

    MertonArgs ma;
    CLI::App* mer = app.add_subcommand("merton", "Jump-diffusion call price study");
    mer->add_option("--N", ma.ns, "Comma list of step counts, each double the last")
        ->delimiter(',')
        ->capture_default_str();
    mer->add_option("--M", ma.ms, "Comma list of space cells (defaults to the --N list)")
        ->delimiter(',');
    mer->add_option("--gamma", ma.gamma, "Time-mesh grading exponent")->capture_default_str();
    mer->add_option("--spots", ma.spots, "Comma list of reference spot prices")
        ->delimiter(',')
        ->capture_default_str();
    mer->add_option("--sigma", ma.params.sigma, "Diffusive volatility")->capture_default_str();
    mer->add_option("--rate", ma.params.rate, "Risk-free rate")->capture_default_str();
    mer->add_option("--jump-mean", ma.params.jump_mean, "Mean log-jump size")
        ->capture_default_str();
    mer->add_option("--jump-std", ma.params.jump_std, "Stddev of the log-jump size")
        ->capture_default_str();
    mer->add_option("--intensity", ma.params.intensity, "Jump arrival rate")
        ->capture_default_str();
    mer->add_option("--T", ma.params.maturity, "Time to expiry")->capture_default_str();
    mer->add_option("--strike", ma.params.strike, "Strike price")->capture_default_str();
    add_common_flags(mer, ma.fast, ma.out, ma.force_large);

    KernelsArgs ka;
    CLI::App* ker = app.add_subcommand("kernels", "Kernel identity diagnostics for one time mesh");
    ker->add_option("--gamma", ka.gamma, "Time-mesh grading exponent (1 = uniform)")
        ->capture_default_str();
    ker->add_option("--N", ka.N, "Number of time steps")->capture_default_str();
    ker->add_option("--T", ka.T, "Final time")->capture_default_str();
    ker->add_option("--out", ka.out, "Write the kernel tables as CSV to this path");
    ker->add_flag("--force-large", ka.force_large, "Allow N beyond the desk cap");
    ker->set_config("--config", "", "Flat key=value config file; flags override it")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return run_solve(sa);
        if (conv->parsed()) return run_convergence(ca);
        if (mer->parsed()) return run_merton(ma);
        if (ker->parsed()) return run_kernels(ka);
        return kExitConfig;  // unreachable: a subcommand is required
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const pide::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const pide::SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
}
