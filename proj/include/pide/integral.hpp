#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pide/grid.hpp"

namespace pide {
namespace detail {

/// In-place iterative radix-2 transform. `size` must be a power of two.
/// Forward uses the e^{-i...} convention; inverse includes the 1/P scale.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: size must be a power of two");
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> even = a[i + k];
                const std::complex<double> odd = a[i + k + len / 2] * w;
                a[i + k] = even + odd;
                a[i + k + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= scale;
    }
}

[[nodiscard]] inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace detail

/// Composite-trapezoid discretization of the nonlocal term
///   (J u)(x_i) = integral over [x_l, x_r] of u(z) rho(z - x_i) dz,
/// for a stationary (difference-only) kernel rho. Because the kernel depends
/// only on x_j - x_i = (j - i) h, the operator is Toeplitz: it is stored as
/// the O(M) sample array rho(k h), k = -(M-1)..M-1, plus trapezoid weights,
/// and every row sum is reproduced exactly from those samples.
struct IntegralOperator {
    int M = 0;
    double h = 0.0;
    std::vector<double> samples;  ///< rho(k h) at offset M-1: samples[M-1+k]
    std::vector<double> weights;  ///< trapezoid weights, h at interior, h/2 at ends

    // Precomputed transform of the kernel embedding for the fast path.
    std::size_t padded_size = 0;
    std::vector<std::complex<double>> kernel_hat;
};

/// Samples the kernel on the difference grid and precomputes the fast path.
[[nodiscard]] inline IntegralOperator build_integral_operator(
    const SpatialGrid& g, const std::function<double(double)>& rho) {
    IntegralOperator op;
    op.M = g.M;
    op.h = g.h;
    op.samples.resize(2 * g.M - 1);
    for (int k = -(g.M - 1); k <= g.M - 1; ++k)
        op.samples[g.M - 1 + k] = rho(k * g.h);
    op.weights.assign(g.M + 1, g.h);
    op.weights.front() = g.h / 2.0;
    op.weights.back() = g.h / 2.0;

    // Embed samples for circular correlation: b[k] = rho(k h) for k >= 0 and
    // b[P-k] = rho(-k h), padded to P >= 2(M+1) so the aperiodic sum never
    // wraps onto itself.
    op.padded_size = detail::next_power_of_two(2 * static_cast<std::size_t>(g.M + 1));
    std::vector<std::complex<double>> b(op.padded_size, {0.0, 0.0});
    for (int k = 0; k <= g.M - 1; ++k) b[k] = op.samples[g.M - 1 + k];
    for (int k = 1; k <= g.M - 1; ++k) b[op.padded_size - k] = op.samples[g.M - 1 - k];
    detail::fft_radix2(b, /*inverse=*/false);
    op.kernel_hat = std::move(b);
    return op;
}

/// Direct O(M^2) application: out_i = sum_j w_j u_j rho((j - i) h) at interior
/// nodes i = 1..M-1; out[0] = out[M] = 0.
[[nodiscard]] inline std::vector<double> apply_integral_direct(const IntegralOperator& op,
                                                               const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != op.M + 1)
        throw std::invalid_argument("apply_integral_direct: size mismatch");
    std::vector<double> out(op.M + 1, 0.0);
    for (int i = 1; i < op.M; ++i) {
        double s = 0.0;
        const double* c = op.samples.data() + (op.M - 1 - i);
        for (int j = 0; j <= op.M; ++j) s += op.weights[j] * u[j] * c[j];
        out[i] = s;
    }
    return out;
}

/// Fast O(M log M) application via padded circular correlation; agrees with
/// the direct path to roundoff (endpoint half-weights are folded into the
/// transformed input).
[[nodiscard]] inline std::vector<double> apply_integral_fast(const IntegralOperator& op,
                                                             const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != op.M + 1)
        throw std::invalid_argument("apply_integral_fast: size mismatch");
    std::vector<std::complex<double>> a(op.padded_size, {0.0, 0.0});
    for (int j = 0; j <= op.M; ++j) a[j] = op.weights[j] * u[j];
    detail::fft_radix2(a, /*inverse=*/false);
    for (std::size_t k = 0; k < op.padded_size; ++k) a[k] *= std::conj(op.kernel_hat[k]);
    detail::fft_radix2(a, /*inverse=*/true);
    std::vector<double> out(op.M + 1, 0.0);
    for (int i = 1; i < op.M; ++i) out[i] = a[i].real();
    return out;
}

/// Adjoint application (interior input, full-width output), used by the norm
/// estimator: (J^T v)_j = w_j sum_i v_i rho((j - i) h).
[[nodiscard]] inline std::vector<double> apply_integral_adjoint(const IntegralOperator& op,
                                                                const std::vector<double>& v) {
    std::vector<double> out(op.M + 1, 0.0);
    for (int j = 0; j <= op.M; ++j) {
        double s = 0.0;
        for (int i = 1; i < op.M; ++i) s += v[i] * op.samples[op.M - 1 + (j - i)];
        out[j] = op.weights[j] * s;
    }
    return out;
}

/// Adjoint through the same padded-transform embedding (plain convolution, no
/// conjugation); matches apply_integral_adjoint to roundoff.
[[nodiscard]] inline std::vector<double> apply_integral_adjoint_fast(
    const IntegralOperator& op, const std::vector<double>& v) {
    std::vector<std::complex<double>> a(op.padded_size, {0.0, 0.0});
    for (int i = 1; i < op.M; ++i) a[i] = v[i];
    detail::fft_radix2(a, /*inverse=*/false);
    for (std::size_t k = 0; k < op.padded_size; ++k) a[k] *= op.kernel_hat[k];
    detail::fft_radix2(a, /*inverse=*/true);
    std::vector<double> out(op.M + 1, 0.0);
    for (int j = 0; j <= op.M; ++j) out[j] = op.weights[j] * a[j].real();
    return out;
}

/// Power-iteration estimate of the operator bound C_J with ||J u|| <= C_J ||u||
/// in the discrete L2 norm, over inputs supported on interior nodes (the
/// h factors of the two norms cancel). Deterministic start vector makes the
/// estimate reproducible across runs.
[[nodiscard]] inline double operator_norm_estimate(const IntegralOperator& op,
                                                   int iterations = 100) {
    std::vector<double> v(op.M + 1, 0.0);
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (int i = 1; i < op.M; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        v[i] = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> w = apply_integral_fast(op, v);
        std::vector<double> z = apply_integral_adjoint_fast(op, w);
        z[0] = 0.0;
        z[op.M] = 0.0;  // restrict back to interior support
        double norm = 0.0;
        for (int i = 1; i < op.M; ++i) norm += z[i] * z[i];
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (int i = 1; i < op.M; ++i) v[i] = z[i] / norm;
        sigma = std::sqrt(norm);
    }
    return sigma;
}

}  // namespace pide
