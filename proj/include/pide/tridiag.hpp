#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pide/grid.hpp"

namespace pide {

/// Raised when a linear solve cannot proceed (vanishing pivot, NaN input).
class SolverError : public std::runtime_error {
  public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Tridiagonal system over the M-1 interior unknowns. sub[i]/diag[i]/super[i]
/// belong to row i (0-based over interior nodes); sub[0] and super[M-2] are
/// outside the matrix and ignored.
struct TridiagonalMatrix {
    std::vector<double> sub, diag, super;

    [[nodiscard]] int rows() const { return static_cast<int>(diag.size()); }
};

/// Assembles the implicit per-step operator on interior nodes:
/// (b0_n + c3 + 2 c1/h^2) on the diagonal, (-c1/h^2 +- c2/(2h)) off it.
[[nodiscard]] inline TridiagonalMatrix assemble_tridiagonal(double b0_n, double c1, double c2,
                                                            double c3, const SpatialGrid& g) {
    if (!(c1 > 0.0)) throw std::invalid_argument("assemble_tridiagonal: need c1 > 0");
    const int n = g.M - 1;
    TridiagonalMatrix A;
    A.diag.assign(n, b0_n + c3 + 2.0 * c1 / (g.h * g.h));
    A.super.assign(n, -c1 / (g.h * g.h) + c2 / (2.0 * g.h));
    A.sub.assign(n, -c1 / (g.h * g.h) - c2 / (2.0 * g.h));
    return A;
}

/// Thomas algorithm: O(n) elimination and back-substitution. Fails on pivots
/// below 1e-300 in magnitude (the intended diagonally dominant regimes stay
/// far from that).
[[nodiscard]] inline std::vector<double> thomas_solve(const TridiagonalMatrix& A,
                                                      const std::vector<double>& rhs) {
    const int n = A.rows();
    if (static_cast<int>(rhs.size()) != n)
        throw std::invalid_argument("thomas_solve: dimension mismatch");
    std::vector<double> c_prime(n, 0.0), d_prime(n, 0.0);
    double pivot = A.diag[0];
    if (std::abs(pivot) < 1e-300) throw SolverError("thomas_solve: singular pivot at row 0");
    c_prime[0] = (n > 1) ? A.super[0] / pivot : 0.0;
    d_prime[0] = rhs[0] / pivot;
    for (int i = 1; i < n; ++i) {
        pivot = A.diag[i] - A.sub[i] * c_prime[i - 1];
        if (std::abs(pivot) < 1e-300)
            throw SolverError("thomas_solve: singular pivot at row " + std::to_string(i));
        if (i < n - 1) c_prime[i] = A.super[i] / pivot;
        d_prime[i] = (rhs[i] - A.sub[i] * d_prime[i - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d_prime[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    return x;
}

/// Max-norm relative residual ||A x - rhs||_inf / max(1, ||rhs||_inf).
[[nodiscard]] inline double tridiagonal_residual(const TridiagonalMatrix& A,
                                                 const std::vector<double>& x,
                                                 const std::vector<double>& rhs) {
    const int n = A.rows();
    double worst = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i) {
        double ax = A.diag[i] * x[i];
        if (i > 0) ax += A.sub[i] * x[i - 1];
        if (i < n - 1) ax += A.super[i] * x[i + 1];
        worst = std::max(worst, std::abs(ax - rhs[i]));
        scale = std::max(scale, std::abs(rhs[i]));
    }
    return worst / scale;
}

}  // namespace pide
