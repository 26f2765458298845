#include "pide/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "pide/grid.hpp"
#include "pide/integral.hpp"
#include "pide/mesh.hpp"
#include "pide/stepper.hpp"

namespace {

TEST(Manufactured, AlphaRangeValidated) {
    EXPECT_THROW((void)pide::manufactured_problem(0.49), std::domain_error);
    EXPECT_THROW((void)pide::manufactured_problem(1.01), std::domain_error);
    EXPECT_NO_THROW((void)pide::manufactured_problem(0.5));
    EXPECT_NO_THROW((void)pide::manufactured_problem(1.0));
}

TEST(Manufactured, InitialDataMatchesExactSolutionAtTimeZero) {
    auto prob = pide::manufactured_problem(0.7);
    for (double x : {0.0, 0.3, 1.0, 2.5, std::numbers::pi}) {
        EXPECT_NEAR(prob.u0(x), prob.exact(x, 0.0), 1e-15);
        EXPECT_NEAR(prob.u0(x), std::sin(x), 1e-15);
    }
}

TEST(Manufactured, SourceHandValue) {
    // At x = pi/2, t = 1: time derivative alpha, diffusion/reaction pair
    // 2 sin + cos = 2, integral term 2 * (1 + 1) = 4, so f = alpha + 8.
    for (double alpha : {0.5, 0.75, 1.0}) {
        auto prob = pide::manufactured_problem(alpha);
        EXPECT_NEAR(prob.f(std::numbers::pi / 2.0, 1.0), alpha + 8.0, 1e-13);
    }
}

TEST(Manufactured, SourceMatchesContinuousOperatorAppliedToExactSolution) {
    // Independent re-derivation: u = (1 + t^alpha) sin x satisfies
    //   u_t - u_xx + u_x + u + Integral(u) = f
    // with kernel 1 on (0, pi), where Integral(u) = 2 (1 + t^alpha).
    std::mt19937_64 rng(3141);
    std::uniform_real_distribution<double> xs(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> ts(0.05, 1.0);
    for (double alpha : {0.5, 0.6, 0.85, 1.0}) {
        auto prob = pide::manufactured_problem(alpha);
        for (int k = 0; k < 50; ++k) {
            const double x = xs(rng);
            const double t = ts(rng);
            const double shape = 1.0 + std::pow(t, alpha);
            const double u_t = alpha * std::pow(t, alpha - 1.0) * std::sin(x);
            const double expected = u_t + shape * std::sin(x)        // -u_xx
                                    + shape * std::cos(x)            // +u_x
                                    + shape * std::sin(x)            // +u
                                    + 2.0 * shape;                   // +J u
            EXPECT_NEAR(prob.f(x, t), expected, 1e-12 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST(Manufactured, DiscreteResidualOfExactSolutionIsSecondOrder) {
    // Substituting exact samples into the spatial operators at fixed time
    // leaves only the O(h^2) truncation error, which must shrink 4x per
    // mesh doubling.
    auto prob = pide::manufactured_problem(0.5);
    const double t = 0.5;
    const double u_t_coef = 0.5 * std::pow(t, -0.5);
    double prev = 0.0;
    for (int m : {256, 512, 1024}) {
        auto g = pide::manufactured_grid(m);
        std::vector<double> v(static_cast<std::size_t>(m) + 1);
        for (int i = 0; i <= m; ++i) v[static_cast<std::size_t>(i)] = prob.exact(g.x[static_cast<std::size_t>(i)], t);
        auto lap = pide::laplacian(g, v);
        auto grad = pide::gradient(g, v);
        auto jop = pide::build_integral_operator(g, prob.rho);
        auto ju = pide::apply_integral_direct(jop, v);
        double worst = 0.0;
        for (int i = 1; i < m; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double res = u_t_coef * std::sin(g.x[k]) - lap[k] + grad[k] + v[k] + ju[k] - prob.f(g.x[k], t);
            worst = std::max(worst, std::abs(res));
        }
        if (prev > 0.0) {
            EXPECT_NEAR(prev / worst, 4.0, 0.4) << "M = " << m;
        }
        prev = worst;
    }
}

TEST(Manufactured, GridSpansZeroToPi) {
    auto g = pide::manufactured_grid(64);
    EXPECT_DOUBLE_EQ(g.x_l, 0.0);
    EXPECT_DOUBLE_EQ(g.x_r, std::numbers::pi);
    EXPECT_EQ(g.M, 64);
}

TEST(Manufactured, ErrorDecreasesUnderTimeRefinement) {
    auto prob = pide::manufactured_problem(0.5);
    auto g = pide::manufactured_grid(256);
    double errs[2];
    int idx = 0;
    for (int n : {32, 64}) {
        auto mesh = pide::build_graded_mesh(1.0, n, 2.0);
        double worst = 0.0;
        pide::StepperOptions opt;
        opt.observer = [&](int level, double t, const std::vector<double>& u) {
            if (level == 0) return;
            std::vector<double> diff(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - prob.exact(g.x[i], t);
            worst = std::max(worst, pide::l2_norm(g, diff));
        };
        (void)pide::run(prob, g, mesh, opt);
        errs[idx++] = worst;
    }
    EXPECT_LT(errs[1], errs[0]);
    EXPECT_NEAR(errs[0] / errs[1], 2.0, 0.5);  // first-order in N at gamma = 2, alpha = 0.5
}

TEST(Merton, KappaHandValue) {
    pide::MertonParams p;
    EXPECT_NEAR(pide::merton_kappa(p), -0.550109023493, 1e-12);
}

TEST(Merton, CoefficientsFromParameters) {
    pide::MertonParams p;
    auto prob = pide::merton_problem(p);
    EXPECT_NEAR(prob.c1, 0.01125, 1e-15);               // sigma^2 / 2
    EXPECT_NEAR(prob.c2, -0.093760902349, 1e-12);       // -(r - sigma^2/2 - lambda kappa)
    EXPECT_NEAR(prob.c3, 0.15, 1e-15);                  // r + lambda
}

TEST(Merton, KernelIsScaledGaussian) {
    pide::MertonParams p;
    auto prob = pide::merton_problem(p);
    // Peak value -lambda / (sigma_jump sqrt(2 pi)) at the jump mean.
    EXPECT_NEAR(prob.rho(p.jump_mean), -0.088653840089, 1e-12);
    EXPECT_LT(prob.rho(0.0), 0.0);
    // Trapezoid mass over the truncated domain matches the analytic normal
    // probability of [-1.5, 1.5] scaled by -lambda.
    auto g = pide::merton_grid(p, 2048);
    double mass = 0.0;
    for (int i = 0; i <= g.M; ++i) {
        const double w = (i == 0 || i == g.M) ? g.h / 2.0 : g.h;
        mass += w * prob.rho(g.x[static_cast<std::size_t>(i)]);
    }
    EXPECT_NEAR(mass, -p.intensity * 0.908788732061, 1e-7);  // trapezoid is O(h^2) here
}

TEST(Merton, PayoffAndBoundaryData) {
    pide::MertonParams p;
    auto prob = pide::merton_problem(p);
    EXPECT_DOUBLE_EQ(prob.u0(0.0), 0.0);
    EXPECT_DOUBLE_EQ(prob.u0(-0.5), 0.0);
    EXPECT_NEAR(prob.u0(0.5), 100.0 * (std::exp(0.5) - 1.0), 1e-12);
    EXPECT_FALSE(prob.ub_left);  // empty boundary data means homogeneous
    // Right boundary: forward minus discounted strike, continuous with the
    // payoff at t = 0.
    EXPECT_NEAR(prob.ub_right(0.0), prob.u0(p.x_right), 1e-12);
    EXPECT_NEAR(prob.ub_right(0.25), 100.0 * std::exp(1.5) - 100.0 * std::exp(-0.05 * 0.25), 1e-12);
    EXPECT_FALSE(prob.exact);  // no closed form on the grid
}

TEST(Merton, ParameterValidation) {
    pide::MertonParams p;
    p.sigma = 0.0;
    EXPECT_THROW((void)pide::merton_problem(p), std::invalid_argument);
    p = {};
    p.intensity = -0.1;
    EXPECT_THROW((void)pide::merton_problem(p), std::invalid_argument);
    p = {};
    p.maturity = 0.0;
    EXPECT_THROW((void)pide::merton_problem(p), std::invalid_argument);
    p = {};
    p.x_left = 2.0;  // empty log-price interval
    EXPECT_THROW((void)pide::merton_problem(p), std::invalid_argument);
}

TEST(BlackScholes, KnownValueAndLimits) {
    EXPECT_NEAR(pide::black_scholes_call(100.0, 100.0, 1.0, 0.2, 0.05), 10.450583572186, 1e-9);
    // Degenerate cases collapse to the discounted intrinsic value.
    EXPECT_DOUBLE_EQ(pide::black_scholes_call(120.0, 100.0, 1.0, 0.0, 0.05),
                     120.0 - 100.0 * std::exp(-0.05));
    EXPECT_DOUBLE_EQ(pide::black_scholes_call(80.0, 100.0, 1.0, 0.0, 0.05), 0.0);
    EXPECT_DOUBLE_EQ(pide::black_scholes_call(120.0, 100.0, 0.0, 0.2, 0.05), 20.0);
    // Monotone in spot.
    double prev = 0.0;
    for (double s : {60.0, 80.0, 100.0, 120.0, 140.0}) {
        const double c = pide::black_scholes_call(s, 100.0, 0.5, 0.3, 0.02);
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(MertonReference, SeriesPricesMatchIndependentComputation) {
    pide::MertonParams p;
    EXPECT_NEAR(pide::merton_reference_price(90.0, p), 0.527638024760, 1e-9);
    EXPECT_NEAR(pide::merton_reference_price(100.0, p), 4.391245689203, 1e-9);
    EXPECT_NEAR(pide::merton_reference_price(110.0, p), 12.643405833395, 1e-9);
    EXPECT_THROW((void)pide::merton_reference_price(100.0, p, 0), std::invalid_argument);
}

TEST(MertonReference, ZeroIntensityReducesToBlackScholes) {
    pide::MertonParams p;
    p.intensity = 0.0;
    for (double s : {90.0, 100.0, 110.0}) {
        EXPECT_NEAR(pide::merton_reference_price(s, p),
                    pide::black_scholes_call(s, p.strike, p.maturity, p.sigma, p.rate), 1e-12);
    }
}

TEST(PriceAt, NodalValueRecoveredAtTheStrike) {
    pide::MertonParams p;
    auto g = pide::merton_grid(p, 64);  // even M puts log-moneyness 0 on a node
    std::vector<double> u(static_cast<std::size_t>(g.M) + 1);
    for (int i = 0; i <= g.M; ++i) u[static_cast<std::size_t>(i)] = std::cos(g.x[static_cast<std::size_t>(i)]);
    const double at_strike = pide::price_at(g, u, p.strike, p.strike);
    EXPECT_NEAR(at_strike, u[32], 1e-13);
}

TEST(PriceAt, ExactOnCubicData) {
    pide::MertonParams p;
    auto g = pide::merton_grid(p, 48);
    auto poly = [](double x) { return 2.0 - x + 0.5 * x * x - 0.25 * x * x * x; };
    std::vector<double> u(static_cast<std::size_t>(g.M) + 1);
    for (int i = 0; i <= g.M; ++i) u[static_cast<std::size_t>(i)] = poly(g.x[static_cast<std::size_t>(i)]);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> xe(p.x_left, p.x_right);
    for (int k = 0; k < 100; ++k) {
        const double x = xe(rng);
        const double spot = p.strike * std::exp(x);
        EXPECT_NEAR(pide::price_at(g, u, p.strike, spot), poly(x), 1e-12 * std::max(1.0, std::abs(poly(x))));
    }
}

TEST(PriceAt, FourthOrderOnSmoothData) {
    pide::MertonParams p;
    const double x_star = 0.1234;  // generic off-node evaluation point
    const double spot = p.strike * std::exp(x_star);
    double prev = 0.0;
    for (int m : {32, 64, 128}) {
        auto g = pide::merton_grid(p, m);
        std::vector<double> u(static_cast<std::size_t>(m) + 1);
        for (int i = 0; i <= m; ++i) u[static_cast<std::size_t>(i)] = std::sin(3.0 * g.x[static_cast<std::size_t>(i)]);
        const double err = std::abs(pide::price_at(g, u, p.strike, spot) - std::sin(3.0 * x_star));
        if (prev > 0.0) {
            const double ratio = prev / err;
            EXPECT_GT(ratio, 10.0) << "M = " << m;
            EXPECT_LT(ratio, 26.0) << "M = " << m;
        }
        prev = err;
    }
}

TEST(PriceAt, ArgumentValidation) {
    pide::MertonParams p;
    auto g = pide::merton_grid(p, 16);
    std::vector<double> u(static_cast<std::size_t>(g.M) + 1, 1.0);
    EXPECT_THROW((void)pide::price_at(g, u, p.strike, p.strike * std::exp(2.0)), std::domain_error);
    EXPECT_THROW((void)pide::price_at(g, u, p.strike, p.strike * std::exp(-2.0)), std::domain_error);
    EXPECT_THROW((void)pide::price_at(g, u, -1.0, 100.0), std::invalid_argument);
    EXPECT_THROW((void)pide::price_at(g, u, 100.0, -1.0), std::invalid_argument);
    std::vector<double> wrong(4, 0.0);
    EXPECT_THROW((void)pide::price_at(g, wrong, 100.0, 100.0), std::invalid_argument);
}

TEST(Merton, SmallSolveApproximatesSeriesPrice) {
    pide::MertonParams p;
    auto g = pide::merton_grid(p, 128);
    auto mesh = pide::build_graded_mesh(p.maturity, 128, 4.0);
    auto prob = pide::merton_problem(p);
    auto result = pide::run(prob, g, mesh);
    const double price = pide::price_at(g, result.final_u(), p.strike, 100.0);
    EXPECT_NEAR(price, 4.391245689203, 0.05);
}

}  // namespace
