#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pide {

/// Largest admissible adjacent step ratio for the variable-step BDF2 kernels:
/// the real root of x^3 = (2x+1)^2, evaluated from the closed Cardano form
/// rather than a hard-coded decimal. Approximately 4.8645.
[[nodiscard]] inline double bdf2_max_ratio() {
    static const double root = [] {
        const double s = 12.0 * std::sqrt(177.0);
        return (std::cbrt(1196.0 - s) + std::cbrt(1196.0 + s)) / 6.0 + 4.0 / 3.0;
    }();
    return root;
}

/// Temporal mesh 0 = t_0 < t_1 < ... < t_N = T with per-step sizes and
/// adjacent step ratios.
///
/// Index convention: `t[k]` for k = 0..N; `tau[k] = t[k] - t[k-1]` and
/// `r[k] = tau[k]/tau[k-1]` are 1-based with padding slots at index 0
/// (and r[1] = 0 by convention, since tau[0] does not exist).
struct TimeMesh {
    double T = 0.0;      ///< final time
    int N = 0;           ///< number of steps
    double gamma = 0.0;  ///< grading exponent; 0 when not built by the graded constructor
    std::vector<double> t;    ///< size N+1, t[0] = 0, t[N] = T
    std::vector<double> tau;  ///< size N+1, tau[0] = 0 (padding), tau[k] for k >= 1
    std::vector<double> r;    ///< size N+1, r[0] = r[1] = 0, r[k] for k >= 2

    [[nodiscard]] double max_step() const {
        double m = 0.0;
        for (int k = 1; k <= N; ++k) m = std::max(m, tau[k]);
        return m;
    }
};

/// Diagnostics for the adjacent-ratio admissibility condition
/// (r_2 > 0 and r_k < r_max for k >= 3).
struct RatioReport {
    double r2 = 0.0;              ///< first meaningful ratio tau_2/tau_1
    double r_max_observed = 0.0;  ///< max over k >= 3 of r[k] (0 when N < 3)
    double delta_margin = 0.0;    ///< bdf2_max_ratio() - r_max_observed
    bool satisfies_A1 = false;
};

/// Builds a mesh from explicit time points (t[0] = 0 required, strictly
/// increasing). The grading exponent is recorded as 0 (unknown).
[[nodiscard]] inline TimeMesh mesh_from_time_points(std::vector<double> t) {
    if (t.size() < 2 || t.front() != 0.0)
        throw std::invalid_argument("mesh_from_time_points: need t[0] = 0 and at least one step");
    const int N = static_cast<int>(t.size()) - 1;
    TimeMesh mesh;
    mesh.T = t.back();
    mesh.N = N;
    mesh.t = std::move(t);
    mesh.tau.assign(N + 1, 0.0);
    mesh.r.assign(N + 1, 0.0);
    for (int k = 1; k <= N; ++k) {
        mesh.tau[k] = mesh.t[k] - mesh.t[k - 1];
        if (!(mesh.tau[k] > 0.0))
            throw std::invalid_argument("mesh_from_time_points: time points must increase");
    }
    for (int k = 2; k <= N; ++k) mesh.r[k] = mesh.tau[k] / mesh.tau[k - 1];
    return mesh;
}

/// Graded mesh t_k = T (k/N)^gamma. gamma = 1 is the uniform mesh; larger
/// gamma concentrates steps near t = 0 to resolve an initial-time singularity.
/// Points are evaluated from the closed form (never accumulated) so t[N] = T
/// exactly in working precision.
[[nodiscard]] inline TimeMesh build_graded_mesh(double T, int N, double gamma) {
    if (!(T > 0.0)) throw std::invalid_argument("build_graded_mesh: T must be positive");
    if (N < 2) throw std::invalid_argument("build_graded_mesh: N must be at least 2");
    if (!(gamma >= 1.0)) throw std::invalid_argument("build_graded_mesh: gamma must be >= 1");
    std::vector<double> t(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k)
        t[k] = T * std::pow(static_cast<double>(k) / N, gamma);
    TimeMesh mesh = mesh_from_time_points(std::move(t));
    mesh.gamma = gamma;
    return mesh;
}

/// Uniform mesh with N equal steps (graded mesh with gamma = 1).
[[nodiscard]] inline TimeMesh build_uniform_mesh(double T, int N) {
    return build_graded_mesh(T, N, 1.0);
}

/// Evaluates the adjacent-ratio condition. The margin uses the sharpest
/// admissible delta, namely r_max minus the observed maximum over k >= 3;
/// callers decide what margin they require.
[[nodiscard]] inline RatioReport check_ratio_condition(const TimeMesh& mesh) {
    RatioReport rep;
    rep.r2 = mesh.N >= 2 ? mesh.r[2] : 0.0;
    double worst = 0.0;
    for (int k = 3; k <= mesh.N; ++k) worst = std::max(worst, mesh.r[k]);
    rep.r_max_observed = worst;
    rep.delta_margin = bdf2_max_ratio() - worst;
    // A single backward-Euler step has no ratios to constrain.
    rep.satisfies_A1 = mesh.N < 2 || (rep.r2 > 0.0 && worst < bdf2_max_ratio());
    return rep;
}

}  // namespace pide
