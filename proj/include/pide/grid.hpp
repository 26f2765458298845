#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pide {

/// Uniform 1-D spatial grid on [x_l, x_r] with M subintervals. Grid functions
/// are arrays of M+1 nodal values; boundary values live at indices 0 and M,
/// interior nodes are 1..M-1.
struct SpatialGrid {
    double x_l = 0.0;
    double x_r = 0.0;
    int M = 0;
    double h = 0.0;
    std::vector<double> x;  ///< size M+1, x[i] = x_l + i h
};

[[nodiscard]] inline SpatialGrid build_grid(double x_l, double x_r, int M) {
    if (!(x_r > x_l)) throw std::invalid_argument("build_grid: need x_r > x_l");
    if (M < 2) throw std::invalid_argument("build_grid: need M >= 2");
    SpatialGrid g;
    g.x_l = x_l;
    g.x_r = x_r;
    g.M = M;
    g.h = (x_r - x_l) / M;
    g.x.resize(M + 1);
    for (int i = 0; i <= M; ++i) g.x[i] = x_l + i * g.h;
    g.x[M] = x_r;
    return g;
}

/// Second-order central Laplacian at interior nodes; endpoints of the result
/// are set to zero.
[[nodiscard]] inline std::vector<double> laplacian(const SpatialGrid& g,
                                                   const std::vector<double>& u) {
    std::vector<double> out(g.M + 1, 0.0);
    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int i = 1; i < g.M; ++i)
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
    return out;
}

/// Second-order central first derivative at interior nodes.
[[nodiscard]] inline std::vector<double> gradient(const SpatialGrid& g,
                                                  const std::vector<double>& u) {
    std::vector<double> out(g.M + 1, 0.0);
    const double inv_2h = 1.0 / (2.0 * g.h);
    for (int i = 1; i < g.M; ++i) out[i] = (u[i + 1] - u[i - 1]) * inv_2h;
    return out;
}

/// Discrete L2 inner product over interior nodes: h * sum_{i=1..M-1} u_i v_i.
[[nodiscard]] inline double inner(const SpatialGrid& g, const std::vector<double>& u,
                                  const std::vector<double>& v) {
    double s = 0.0;
    for (int i = 1; i < g.M; ++i) s += u[i] * v[i];
    return g.h * s;
}

[[nodiscard]] inline double l2_norm(const SpatialGrid& g, const std::vector<double>& u) {
    return std::sqrt(inner(g, u, u));
}

/// H1 seminorm |u|_1 = sqrt(<-laplacian u, u>) for grid functions vanishing
/// at the boundary. The quadratic form is provably nonnegative on that space;
/// a materially negative value indicates a caller error and throws.
[[nodiscard]] inline double h1_seminorm(const SpatialGrid& g, const std::vector<double>& u) {
    const std::vector<double> lap = laplacian(g, u);
    double q = 0.0;
    for (int i = 1; i < g.M; ++i) q += -lap[i] * u[i];
    q *= g.h;
    if (q < 0.0) {
        double scale = 0.0;
        for (int i = 1; i < g.M; ++i) scale += u[i] * u[i] / (g.h * g.h);
        scale *= g.h;
        if (q < -1e-14 * std::max(1.0, scale))
            throw std::domain_error("h1_seminorm: negative quadratic form");
        q = 0.0;
    }
    return std::sqrt(q);
}

/// ||gradient u||^2 over interior nodes (central differences).
[[nodiscard]] inline double gradient_norm_sq(const SpatialGrid& g,
                                             const std::vector<double>& u) {
    const std::vector<double> grad = gradient(g, u);
    return inner(g, grad, grad);
}

/// ||laplacian u||^2 over interior nodes.
[[nodiscard]] inline double laplacian_norm_sq(const SpatialGrid& g,
                                              const std::vector<double>& u) {
    const std::vector<double> lap = laplacian(g, u);
    return inner(g, lap, lap);
}

/// Right-hand side of the seminorm decomposition
///   |u|_1^2 = ||grad u||^2 + (h^2/4) ||lap u||^2 + (u_1^2 + u_{M-1}^2)/(2h),
/// valid for u with u_0 = u_M = 0. Exposed so the identity's two sides can be
/// computed through fully independent code paths.
[[nodiscard]] inline double seminorm_decomposition_rhs(const SpatialGrid& g,
                                                       const std::vector<double>& u) {
    return gradient_norm_sq(g, u) + (g.h * g.h / 4.0) * laplacian_norm_sq(g, u) +
           (u[1] * u[1] + u[g.M - 1] * u[g.M - 1]) / (2.0 * g.h);
}

}  // namespace pide
