// Step-kernel machinery: hand-computed uniform values, exactness of the
// discrete derivative on quadratics, the identity suite across graded meshes,
// a dense triangular-inversion oracle for the two-term recurrence, the
// explicit product formula cross-check, sharp bounds, and positive
// definiteness of both quadratic forms on random data.

#include "pide/kernels.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "pide/mesh.hpp"

namespace {

constexpr double kTol = 1e-12;

std::vector<pide::TimeMesh> criterion_meshes() {
    std::vector<pide::TimeMesh> meshes;
    for (int n : {8, 64, 512}) {
        meshes.push_back(pide::build_uniform_mesh(1.0, n));
        for (double gamma : {2.0, 3.0, 4.0})
            meshes.push_back(pide::build_graded_mesh(1.0, n, gamma));
    }
    return meshes;
}

// Random mesh satisfying the ratio condition: free first ratio, interior
// ratios capped strictly below the root.
pide::TimeMesh random_a1_mesh(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> first(0.1, 8.0);
    std::uniform_real_distribution<double> interior(0.1, 0.95 * pide::bdf2_max_ratio());
    std::vector<double> t(n + 1, 0.0);
    double tau = 1.0;
    t[1] = tau;
    for (int k = 2; k <= n; ++k) {
        tau *= (k == 2) ? first(rng) : interior(rng);
        t[k] = t[k - 1] + tau;
    }
    const double scale = 1.0 / t[n];
    for (double& tk : t) tk *= scale;  // normalize to T = 1
    return pide::mesh_from_time_points(t);
}

TEST(Bdf2KernelsTest, UniformStepValues) {
    const double tau = 0.25;
    const pide::TimeMesh mesh = pide::build_uniform_mesh(1.0, 4);
    const pide::Bdf2Kernels kern = pide::bdf2_kernels(mesh);
    EXPECT_NEAR(kern.b0[1], 1.0 / tau, kTol);
    EXPECT_EQ(kern.b1[1], 0.0);
    for (int n = 2; n <= 4; ++n) {
        EXPECT_NEAR(kern.b0[n], 3.0 / (2.0 * tau), kTol) << "n=" << n;
        EXPECT_NEAR(kern.b1[n], -1.0 / (2.0 * tau), kTol) << "n=" << n;
    }
}

TEST(Bdf2KernelsTest, DerivativeExactOnQuadratics) {
    // The two-step formula differentiates quadratics in t exactly on any mesh.
    std::mt19937_64 rng(7);
    const pide::TimeMesh mesh = random_a1_mesh(rng, 12);
    const pide::Bdf2Kernels kern = pide::bdf2_kernels(mesh);
    const double a = 0.7, b = -1.3, c = 2.1;
    std::vector<double> u(mesh.N + 1);
    for (int j = 0; j <= mesh.N; ++j)
        u[j] = a + b * mesh.t[j] + c * mesh.t[j] * mesh.t[j];
    for (int n = 2; n <= mesh.N; ++n) {
        const double exact = b + 2.0 * c * mesh.t[n];
        EXPECT_NEAR(pide::bdf2_derivative(kern, u, n), exact,
                    1e-10 * std::max(1.0, std::abs(exact)))
            << "n=" << n;
    }
    // The first step is backward Euler: exact on linears only.
    std::vector<double> lin(mesh.N + 1);
    for (int j = 0; j <= mesh.N; ++j) lin[j] = a + b * mesh.t[j];
    EXPECT_NEAR(pide::bdf2_derivative(kern, lin, 1), b, 1e-12);
}

TEST(DocTableTest, HandComputedUniformRows) {
    const double tau = 0.2;
    const pide::TimeMesh mesh = pide::build_uniform_mesh(0.6, 3);
    const pide::DocTable doc = pide::doc_kernels(pide::bdf2_kernels(mesh));
    ASSERT_EQ(doc.size(), 3);
    EXPECT_NEAR(doc.theta[1][0], tau, kTol);
    EXPECT_NEAR(doc.theta[2][0], 2.0 * tau / 3.0, kTol);
    EXPECT_NEAR(doc.theta[2][1], tau / 3.0, kTol);
    EXPECT_NEAR(doc.theta[3][0], 2.0 * tau / 3.0, kTol);
    EXPECT_NEAR(doc.theta[3][1], 2.0 * tau / 9.0, kTol);
    EXPECT_NEAR(doc.theta[3][2], tau / 9.0, kTol);
}

TEST(DccTableTest, HandComputedUniformRows) {
    const double tau = 0.2;
    const pide::TimeMesh mesh = pide::build_uniform_mesh(0.6, 3);
    const pide::DccTable dcc = pide::dcc_from_doc(pide::doc_kernels(pide::bdf2_kernels(mesh)));
    EXPECT_NEAR(dcc.p[1][0], tau, kTol);
    EXPECT_NEAR(dcc.p[2][0], 2.0 * tau / 3.0, kTol);
    EXPECT_NEAR(dcc.p[2][1], 4.0 * tau / 3.0, kTol);
    // Row sums reproduce the time points.
    for (int n = 1; n <= 3; ++n) {
        double sum = 0.0;
        for (double p : dcc.p[n]) sum += p;
        EXPECT_NEAR(sum, mesh.t[n], kTol) << "n=" << n;
    }
}

TEST(DocTableTest, MatchesDenseTriangularInversionOracle) {
    // The recurrence claims to invert the lower-bidiagonal convolution matrix
    // B(n, k) = b_{n-k}^{(n)}. Invert B densely and compare every entry.
    for (int n : {4, 16, 64}) {
        for (double gamma : {1.0, 2.0, 4.0}) {
            const pide::TimeMesh mesh = pide::build_graded_mesh(1.0, n, gamma);
            const pide::Bdf2Kernels kern = pide::bdf2_kernels(mesh);
            const pide::DocTable doc = pide::doc_kernels(kern);
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
            for (int row = 1; row <= n; ++row) {
                b(row - 1, row - 1) = kern.b0[row];
                if (row >= 2) b(row - 1, row - 2) = kern.b1[row];
            }
            const Eigen::MatrixXd theta = b.inverse();
            for (int row = 1; row <= n; ++row)
                for (int k = 1; k <= row; ++k)
                    EXPECT_NEAR(doc.theta[row][row - k], theta(row - 1, k - 1),
                                kTol * std::max(1.0, std::abs(theta(row - 1, k - 1))))
                        << "n=" << n << " gamma=" << gamma << " row=" << row << " k=" << k;
        }
    }
}

TEST(KernelIdentityTest, SuitePassesOnCriterionMeshes) {
    for (const pide::TimeMesh& mesh : criterion_meshes()) {
        const pide::KernelIdentityReport rep = pide::run_kernel_identity_checks(mesh);
        const std::string label =
            "N=" + std::to_string(mesh.N) + " gamma=" + std::to_string(mesh.gamma);
        EXPECT_LE(rep.orthogonality, kTol) << label;
        EXPECT_LE(rep.completeness, kTol) << label;
        EXPECT_LE(rep.relation, kTol) << label;
        EXPECT_LE(rep.theta_row_sum, kTol) << label;
        EXPECT_LE(rep.p_row_sum, kTol) << label;
        EXPECT_LE(rep.telescope_full, kTol) << label;
        EXPECT_LE(rep.telescope_step, kTol) << label;
        EXPECT_LE(rep.explicit_vs_cumulative, kTol) << label;
        EXPECT_GE(rep.p_two_tau_slack, 0.0) << label;
        EXPECT_TRUE(rep.doc_positive) << label;
    }
}

TEST(KernelIdentityTest, SuitePassesOnRandomA1Meshes) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const pide::TimeMesh mesh = random_a1_mesh(rng, 40);
        const pide::KernelIdentityReport rep = pide::run_kernel_identity_checks(mesh);
        EXPECT_LE(rep.orthogonality, kTol) << "trial " << trial;
        EXPECT_LE(rep.completeness, kTol) << "trial " << trial;
        EXPECT_LE(rep.relation, kTol) << "trial " << trial;
        EXPECT_LE(rep.telescope_full, kTol) << "trial " << trial;
        EXPECT_LE(rep.telescope_step, kTol) << "trial " << trial;
        EXPECT_TRUE(rep.doc_positive) << "trial " << trial;
    }
}

TEST(DccExplicitTest, MatchesCumulativeDefinitionEntrywise) {
    for (const pide::TimeMesh& mesh : criterion_meshes()) {
        if (mesh.N > 64) continue;  // the cumulative build is cubic; big runs covered above
        const pide::DccTable from_doc =
            pide::dcc_from_doc(pide::doc_kernels(pide::bdf2_kernels(mesh)));
        const pide::DccTable closed = pide::dcc_explicit(mesh);
        for (int n = 1; n <= mesh.N; ++n)
            for (int i = 0; i < n; ++i)
                EXPECT_NEAR(closed.p[n][i], from_doc.p[n][i],
                            kTol * std::max(1.0, std::abs(from_doc.p[n][i])))
                    << "N=" << mesh.N << " gamma=" << mesh.gamma << " n=" << n << " i=" << i;
    }
}

TEST(DccBoundTest, SharpBoundsHoldOnA1Meshes) {
    for (const pide::TimeMesh& mesh : criterion_meshes()) {
        const pide::DccTable dcc =
            pide::dcc_from_doc(pide::doc_kernels(pide::bdf2_kernels(mesh)));
        const pide::DccBoundReport rep = pide::dcc_bound_check(mesh, dcc);
        EXPECT_TRUE(rep.passed) << "N=" << mesh.N << " gamma=" << mesh.gamma;
        EXPECT_EQ(rep.violations, 0);
        EXPECT_GE(rep.tightest_slack, 0.0);
    }
}

TEST(DccBoundTest, SingleStepMeshIsExactlyTight) {
    const pide::TimeMesh mesh = pide::mesh_from_time_points({0.0, 0.3});
    const pide::DccTable dcc =
        pide::dcc_from_doc(pide::doc_kernels(pide::bdf2_kernels(mesh)));
    EXPECT_NEAR(dcc.p[1][0], 0.3, kTol);
    const pide::DccBoundReport rep = pide::dcc_bound_check(mesh, dcc);
    EXPECT_TRUE(rep.passed);
    EXPECT_NEAR(rep.tightest_slack, 0.0, kTol);  // bound tau_1 met with equality
}

TEST(DccBoundTest, RejectsMeshOutsideRatioCondition) {
    const pide::TimeMesh mesh = pide::build_graded_mesh(1.0, 16, 6.0);
    const pide::DccTable dcc =
        pide::dcc_from_doc(pide::doc_kernels(pide::bdf2_kernels(mesh)));
    EXPECT_THROW((void)pide::dcc_bound_check(mesh, dcc), std::invalid_argument);
}

void expect_forms_positive_definite(const pide::TimeMesh& mesh, int draws, std::uint64_t seed) {
    const pide::Bdf2Kernels kern = pide::bdf2_kernels(mesh);
    const pide::DocTable doc = pide::doc_kernels(kern);
    const pide::RatioReport ratios = pide::check_ratio_condition(mesh);
    ASSERT_TRUE(ratios.satisfies_A1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> omega(mesh.N + 1, 0.0);
    int violations_b = 0, violations_theta = 0;
    for (int draw = 0; draw < draws; ++draw) {
        for (int k = 2; k <= mesh.N; ++k) omega[k] = dist(rng);
        const double qb = pide::quadratic_form_b(kern, omega);
        const double lb = pide::b_form_lower_bound(mesh, omega, ratios.delta_margin);
        if (qb < lb - kTol * std::max(1.0, std::abs(qb))) ++violations_b;
        const double qt = pide::quadratic_form_theta(doc, omega);
        const double lt =
            pide::theta_form_lower_bound(doc, mesh, omega, ratios.delta_margin);
        if (qt < lt - kTol * std::max(1.0, std::abs(qt))) ++violations_theta;
    }
    EXPECT_EQ(violations_b, 0) << "N=" << mesh.N << " gamma=" << mesh.gamma;
    EXPECT_EQ(violations_theta, 0) << "N=" << mesh.N << " gamma=" << mesh.gamma;
}

TEST(QuadraticFormTest, LowerBoundsHoldOnRandomData) {
    for (int n : {8, 64}) {
        expect_forms_positive_definite(pide::build_uniform_mesh(1.0, n), 1000, 1234 + n);
        for (double gamma : {2.0, 3.0, 4.0})
            expect_forms_positive_definite(pide::build_graded_mesh(1.0, n, gamma), 1000,
                                           5678 + n + static_cast<int>(gamma));
    }
    // One large mesh with fewer draws keeps the unit suite quick; the
    // acceptance gate runs the full 10^3 draws at N = 512.
    expect_forms_positive_definite(pide::build_graded_mesh(1.0, 512, 4.0), 100, 99);
}

TEST(QuadraticFormTest, RatioFormConstantValue) {
    const double rm = pide::bdf2_max_ratio();
    EXPECT_NEAR(pide::ratio_form_constant(), std::sqrt(rm) / ((1.0 + rm) * (1.0 + rm)),
                1e-15);
    EXPECT_NEAR(pide::ratio_form_constant(), 0.0641, 5e-4);  // sanity magnitude
}

}  // namespace
