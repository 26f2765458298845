#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "pide/mesh.hpp"

namespace pide {

/// Variable-step BDF2 convolution kernels. The discrete derivative is
///   (D2 u)^n = b0[n] (u^n - u^{n-1}) + b1[n] (u^{n-1} - u^{n-2}),
/// with the BDF1 start b0[1] = 1/tau_1 and b1[1] = 0; all higher-lag kernels
/// vanish identically for this scheme.
struct Bdf2Kernels {
    int N = 0;
    std::vector<double> b0;  ///< size N+1, b0[n] for n >= 1
    std::vector<double> b1;  ///< size N+1, b1[n] for n >= 2 (0 at n <= 1)
};

/// DOC (discrete orthogonal convolution) kernels: the step-local inverse of
/// the BDF2 convolution structure. theta[n][i] holds theta_i^{(n)} for
/// i = 0..n-1; row 0 is empty.
struct DocTable {
    std::vector<std::vector<double>> theta;

    [[nodiscard]] int size() const { return static_cast<int>(theta.size()) - 1; }
};

/// DCC (discrete complementary convolution) kernels, cumulative sums of the
/// DOC kernels. p[n][i] holds p_i^{(n)} for i = 0..n-1; row sums equal t_n.
struct DccTable {
    std::vector<std::vector<double>> p;

    [[nodiscard]] int size() const { return static_cast<int>(p.size()) - 1; }
};

[[nodiscard]] inline Bdf2Kernels bdf2_kernels(const TimeMesh& mesh) {
    Bdf2Kernels kern;
    kern.N = mesh.N;
    kern.b0.assign(mesh.N + 1, 0.0);
    kern.b1.assign(mesh.N + 1, 0.0);
    if (mesh.N >= 1) kern.b0[1] = 1.0 / mesh.tau[1];
    for (int n = 2; n <= mesh.N; ++n) {
        const double rn = mesh.r[n];
        kern.b0[n] = (1.0 + 2.0 * rn) / (mesh.tau[n] * (1.0 + rn));
        kern.b1[n] = -rn * rn / (mesh.tau[n] * (1.0 + rn));
    }
    return kern;
}

/// Applies the discrete BDF2 derivative to a scalar sequence u[0..N] at
/// level j (BDF1 at j = 1).
[[nodiscard]] inline double bdf2_derivative(const Bdf2Kernels& kern,
                                            const std::vector<double>& u, int j) {
    double v = kern.b0[j] * (u[j] - u[j - 1]);
    if (j >= 2) v += kern.b1[j] * (u[j - 1] - u[j - 2]);
    return v;
}

/// Builds the DOC kernels by the two-diagonal recurrence
///   theta[n][0] = 1/b0[n],
///   theta[n][n-k] = (-b1[k+1]/b0[k]) * theta[n][n-k-1],  k = n-1..1,
/// which is the orthogonality identity specialized to kernels with only two
/// nonzero diagonals.
[[nodiscard]] inline DocTable doc_kernels(const Bdf2Kernels& kern) {
    DocTable doc;
    doc.theta.resize(kern.N + 1);
    for (int n = 1; n <= kern.N; ++n) {
        auto& row = doc.theta[n];
        row.resize(n);
        row[0] = 1.0 / kern.b0[n];
        for (int k = n - 1; k >= 1; --k)
            row[n - k] = (-kern.b1[k + 1] / kern.b0[k]) * row[n - k - 1];
    }
    return doc;
}

/// DCC kernels from their definition as cumulative sums of DOC kernels:
/// p_{n-j}^{(n)} = sum_{k=j..n} theta_{k-j}^{(k)}. Computed entry-by-entry
/// from the DOC table (no shared code path with dcc_explicit).
[[nodiscard]] inline DccTable dcc_from_doc(const DocTable& doc) {
    const int N = doc.size();
    DccTable dcc;
    dcc.p.resize(N + 1);
    for (int n = 1; n <= N; ++n) {
        auto& row = dcc.p[n];
        row.resize(n);
        for (int j = 1; j <= n; ++j) {
            double sum = 0.0;
            for (int k = j; k <= n; ++k) sum += doc.theta[k][k - j];
            row[n - j] = sum;
        }
    }
    return dcc;
}

/// DCC kernels from the closed product form
///   p_{n-j}^{(n)} = (1+r_j)/(1+2r_j) * sum_{k=j..n} tau_k
///                   * prod_{i=j+1..k} r_i/(1+2 r_i),
/// with the empty product equal to 1 and r_1 = 0 by the mesh convention.
[[nodiscard]] inline DccTable dcc_explicit(const TimeMesh& mesh) {
    DccTable dcc;
    dcc.p.resize(mesh.N + 1);
    for (int n = 1; n <= mesh.N; ++n) {
        auto& row = dcc.p[n];
        row.resize(n);
        for (int j = 1; j <= n; ++j) {
            const double front = (1.0 + mesh.r[j]) / (1.0 + 2.0 * mesh.r[j]);
            double sum = 0.0;
            double prod = 1.0;
            for (int k = j; k <= n; ++k) {
                if (k > j) prod *= mesh.r[k] / (1.0 + 2.0 * mesh.r[k]);
                sum += mesh.tau[k] * prod;
            }
            row[n - j] = front * sum;
        }
    }
    return dcc;
}

/// Quadratic form 2 sum_{k=2..n} omega[k] sum_{j=2..k} b_{k-j}^{(k)} omega[j].
/// omega is 1-based (size n+1); entries 0 and 1 are ignored.
[[nodiscard]] inline double quadratic_form_b(const Bdf2Kernels& kern,
                                             const std::vector<double>& omega) {
    const int n = static_cast<int>(omega.size()) - 1;
    double total = 0.0;
    for (int k = 2; k <= n; ++k) {
        double inner = kern.b0[k] * omega[k];
        if (k >= 3) inner += kern.b1[k] * omega[k - 1];
        total += omega[k] * inner;
    }
    return 2.0 * total;
}

/// Quadratic form 2 sum_{k=2..n} omega[k] sum_{j=2..k} theta_{k-j}^{(k)} omega[j].
[[nodiscard]] inline double quadratic_form_theta(const DocTable& doc,
                                                 const std::vector<double>& omega) {
    const int n = static_cast<int>(omega.size()) - 1;
    double total = 0.0;
    for (int k = 2; k <= n; ++k) {
        double inner = 0.0;
        for (int j = 2; j <= k; ++j) inner += doc.theta[k][k - j] * omega[j];
        total += omega[k] * inner;
    }
    return 2.0 * total;
}

/// C_r = sqrt(r_max)/(1+r_max)^2, the constant in both positive-definiteness
/// lower bounds.
[[nodiscard]] inline double ratio_form_constant() {
    const double rm = bdf2_max_ratio();
    return std::sqrt(rm) / ((1.0 + rm) * (1.0 + rm));
}

/// Lower bound C_r * delta * sum_{k=2..n} omega[k]^2 / tau[k] certified for
/// quadratic_form_b under the ratio condition with margin delta.
[[nodiscard]] inline double b_form_lower_bound(const TimeMesh& mesh,
                                               const std::vector<double>& omega,
                                               double delta) {
    const int n = static_cast<int>(omega.size()) - 1;
    double sum = 0.0;
    for (int k = 2; k <= n; ++k) sum += omega[k] * omega[k] / mesh.tau[k];
    return ratio_form_constant() * delta * sum;
}

/// Lower bound C_r * delta * sum_{k=2..n} tau_k^{-1} (sum_{j=2..k}
/// theta_{k-j}^{(k)} omega[j])^2 certified for quadratic_form_theta.
[[nodiscard]] inline double theta_form_lower_bound(const DocTable& doc,
                                                   const TimeMesh& mesh,
                                                   const std::vector<double>& omega,
                                                   double delta) {
    const int n = static_cast<int>(omega.size()) - 1;
    double sum = 0.0;
    for (int k = 2; k <= n; ++k) {
        double inner = 0.0;
        for (int j = 2; j <= k; ++j) inner += doc.theta[k][k - j] * omega[j];
        sum += inner * inner / mesh.tau[k];
    }
    return ratio_form_constant() * delta * sum;
}

/// Result of checking the sharp DCC bounds
///   p_{n-j}^{(n)} <= c_r delta^{-1} sqrt(tau_j) sqrt(tau_max)   (j >= 2)
///   p_{n-1}^{(n)} <= tau_1 + c_r delta^{-1} sqrt(tau_2) sqrt(tau_max)
/// with c_r = r_max^(5/2), at every admissible (n, j).
struct DccBoundReport {
    double tightest_slack = 0.0;  ///< min over (n, j) of bound - p; negative on violation
    int violations = 0;
    bool passed = false;
};

[[nodiscard]] inline DccBoundReport dcc_bound_check(const TimeMesh& mesh, const DccTable& dcc) {
    const RatioReport ratios = check_ratio_condition(mesh);
    // A single-step mesh has no ratios to restrict; the j = 1 bound is tau_1 itself.
    if (mesh.N > 1 && !(ratios.satisfies_A1 && ratios.delta_margin > 0.0))
        throw std::invalid_argument("dcc_bound_check: mesh must satisfy the ratio condition");
    const double delta = ratios.delta_margin;
    const double c_r = std::pow(bdf2_max_ratio(), 2.5);
    const double sqrt_tau_max = std::sqrt(mesh.max_step());
    DccBoundReport rep;
    bool first = true;
    for (int n = 1; n <= mesh.N; ++n) {
        for (int j = 1; j <= n; ++j) {
            double bound;
            if (j >= 2) {
                bound = c_r / delta * std::sqrt(mesh.tau[j]) * sqrt_tau_max;
            } else if (mesh.N >= 2) {
                bound = mesh.tau[1] + c_r / delta * std::sqrt(mesh.tau[2]) * sqrt_tau_max;
            } else {
                bound = mesh.tau[1];  // N = 1: p_0^{(1)} = tau_1 exactly
            }
            const double slack = bound - dcc.p[n][n - j];
            if (first || slack < rep.tightest_slack) rep.tightest_slack = slack;
            first = false;
            if (slack < 0.0) ++rep.violations;
        }
    }
    rep.passed = rep.violations == 0;
    return rep;
}

/// Worst-case residuals of the kernel identity suite on one mesh. All
/// residuals are scale-aware: |sum - target| divided by max(1, largest |term|
/// in the sum), so 1e-12 means twelve digits relative to the working scale.
struct KernelIdentityReport {
    double orthogonality = 0.0;   ///< sum theta  b = delta_nk, all 1 <= k <= n <= N
    double completeness = 0.0;    ///< sum p b = 1, all 1 <= k <= n <= N
    double relation = 0.0;        ///< theta rows vs adjacent-row p differences
    double theta_row_sum = 0.0;   ///< sum_j theta_{n-j}^{(n)} = tau_n
    double p_row_sum = 0.0;       ///< sum_j p_{n-j}^{(n)} = t_n
    double telescope_full = 0.0;  ///< sum_j p (D2 u)^j = u^n - u^0 on random sequences
    double telescope_step = 0.0;  ///< sum_j theta (D2 u)^j = u^k - u^{k-1} on random sequences
    double explicit_vs_cumulative = 0.0;  ///< dcc_explicit vs dcc_from_doc
    double p_two_tau_slack = 0.0;         ///< min over entries of 2 tau_max - p
    bool doc_positive = false;            ///< every theta entry strictly positive
};

namespace detail {

[[nodiscard]] inline double scaled_residual(double sum, double target, double max_term) {
    return std::abs(sum - target) / std::max(1.0, max_term);
}

}  // namespace detail

/// Runs the full identity suite (orthogonality, completeness, relations, row
/// sums, telescoping on random sequences, positivity, explicit/cumulative
/// cross-check) and reports worst residuals.
[[nodiscard]] inline KernelIdentityReport run_kernel_identity_checks(const TimeMesh& mesh,
                                                                     int random_sequences = 20,
                                                                     std::uint64_t seed = 0x5eed) {
    const Bdf2Kernels kern = bdf2_kernels(mesh);
    const DocTable doc = doc_kernels(kern);
    const DccTable dcc = dcc_from_doc(doc);
    const DccTable dcc2 = dcc_explicit(mesh);
    const int N = mesh.N;
    KernelIdentityReport rep;
    rep.doc_positive = true;

    for (int n = 1; n <= N; ++n) {
        // Orthogonality and completeness at every k <= n. Both kernels b have
        // lags 0 and 1 only, so each inner sum has at most two terms.
        for (int k = 1; k <= n; ++k) {
            double osum = 0.0, omax = 0.0, csum = 0.0, cmax = 0.0;
            for (int j = k; j <= n; ++j) {
                const double bjk = (j == k)       ? kern.b0[j]
                                   : (j == k + 1) ? kern.b1[j]
                                                  : 0.0;
                if (bjk == 0.0) continue;
                const double oterm = doc.theta[n][n - j] * bjk;
                const double cterm = dcc.p[n][n - j] * bjk;
                osum += oterm;
                csum += cterm;
                omax = std::max(omax, std::abs(oterm));
                cmax = std::max(cmax, std::abs(cterm));
            }
            const double target = (n == k) ? 1.0 : 0.0;
            rep.orthogonality = std::max(rep.orthogonality,
                                         detail::scaled_residual(osum, target, omax));
            rep.completeness = std::max(rep.completeness,
                                        detail::scaled_residual(csum, 1.0, cmax));
        }
        // Row sums.
        double tsum = 0.0, psum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!(doc.theta[n][i] > 0.0)) rep.doc_positive = false;
            tsum += doc.theta[n][i];
            psum += dcc.p[n][i];
        }
        rep.theta_row_sum = std::max(rep.theta_row_sum,
                                     std::abs(tsum - mesh.tau[n]) / mesh.tau[n]);
        rep.p_row_sum = std::max(rep.p_row_sum, std::abs(psum - mesh.t[n]) / mesh.t[n]);
        // Relation between the tables: theta_0^{(n)} = p_0^{(n)} and
        // theta_{n-k}^{(n)} = p_{n-k}^{(n)} - p_{n-1-k}^{(n-1)} for k < n.
        rep.relation = std::max(rep.relation,
                                detail::scaled_residual(dcc.p[n][0], doc.theta[n][0],
                                                        std::abs(dcc.p[n][0])));
        for (int k = 1; k < n; ++k) {
            const double diff = dcc.p[n][n - k] - dcc.p[n - 1][n - 1 - k];
            rep.relation = std::max(rep.relation,
                                    detail::scaled_residual(diff, doc.theta[n][n - k],
                                                            std::abs(dcc.p[n][n - k])));
        }
        // Cross-oracle agreement, relative to the entry scale.
        for (int i = 0; i < n; ++i) {
            const double rel = std::abs(dcc.p[n][i] - dcc2.p[n][i]) /
                               std::max(std::abs(dcc.p[n][i]), std::abs(dcc2.p[n][i]));
            rep.explicit_vs_cumulative = std::max(rep.explicit_vs_cumulative, rel);
        }
    }

    // p <= 2 tau_max slack.
    const double two_tau = 2.0 * mesh.max_step();
    double min_slack = two_tau;
    for (int n = 1; n <= N; ++n)
        for (int i = 0; i < n; ++i) min_slack = std::min(min_slack, two_tau - dcc.p[n][i]);
    rep.p_two_tau_slack = min_slack;

    // Telescoping identities on random sequences.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> u(N + 1);
    for (int trial = 0; trial < random_sequences; ++trial) {
        for (auto& v : u) v = dist(rng);
        std::vector<double> d2(N + 1, 0.0);
        for (int j = 1; j <= N; ++j) d2[j] = bdf2_derivative(kern, u, j);
        for (int n = 1; n <= N; ++n) {
            double full = 0.0, fmax = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double term = dcc.p[n][n - j] * d2[j];
                full += term;
                fmax = std::max(fmax, std::abs(term));
            }
            rep.telescope_full = std::max(rep.telescope_full,
                                          detail::scaled_residual(full, u[n] - u[0], fmax));
            double step = 0.0, smax = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double term = doc.theta[n][n - j] * d2[j];
                step += term;
                smax = std::max(smax, std::abs(term));
            }
            rep.telescope_step = std::max(rep.telescope_step,
                                          detail::scaled_residual(step, u[n] - u[n - 1], smax));
        }
    }
    return rep;
}

}  // namespace pide
