#include "accsp/approx.hpp"
#include "accsp/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace accsp;

namespace {

const ThetaPair kId = ThetaPair::identity();
ThetaPair two_piece() { return ThetaPair::piecewise({0, 0.5, 1}, {0, 0.25, 1}, {0, 0.75, 1}); }

Vec v1(double a) { return Vec::Constant(1, a); }

// Problem whose L functionals are Z_l = s_l * x (no randomness beyond a dummy table).
AccProblem linear_problem(std::vector<double> slopes, std::vector<double> e, double zeta) {
    AccProblem p;
    p.n = 1;
    p.domain.lo = v1(-1);
    p.domain.hi = v1(1);
    p.objective.g = {SmoothConvexPiece::constant(1, 0)};
    p.objective.h = {SmoothConvexPiece::constant(1, 0)};
    for (double s : slopes) {
        DcMaxFunction f;
        f.g = {SmoothConvexPiece::affine(v1(s), 0)};
        f.h = {SmoothConvexPiece::constant(1, 0)};
        p.functionals.push_back(f);
    }
    p.rows = {ConstraintRow{std::move(e), zeta}};
    p.source.kind = RandomSource::Kind::table;
    p.source.dim = 1;
    p.source.rows = {{0.0}};
    p.source.probs = {1.0};
    return p;
}

}  // namespace

TEST(Phi, UpperExamples) {
    EXPECT_EQ(phi_ub(0.0, 1.0, kId), 1.0);
    EXPECT_EQ(phi_ub(-0.5, 1.0, kId), 0.5);
    EXPECT_EQ(phi_ub(-0.5, 0.0, kId), 0.0);
    EXPECT_EQ(phi_ub(0.0, 0.0, kId), 1.0);
}

TEST(Phi, LowerExamples) {
    EXPECT_EQ(phi_lb(0.5, 1.0, kId), 0.5);
    EXPECT_EQ(phi_lb(-0.1, 0.5, kId), 0.0);
    EXPECT_EQ(phi_lb(2.0, 1.0, kId), 1.0);
    EXPECT_EQ(phi_lb(0.0, 0.0, kId), 0.0);
    EXPECT_EQ(phi_lb(1e-300, 0.0, kId), 1.0);
}

TEST(Phi, NanThrows) {
    EXPECT_THROW(phi_ub(std::nan(""), 0.1, kId), std::domain_error);
    EXPECT_THROW(phi_lb(std::nan(""), 0.1, kId), std::domain_error);
}

TEST(Phi, SandwichAndMonotonicityFuzz) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> T(-2, 2), G(1e-6, 2);
    for (const auto& th : {kId, two_piece()}) {
        for (int i = 0; i < 20000; ++i) {
            double t = T(rng), g1 = G(rng), g2 = G(rng);
            if (g1 < g2) std::swap(g1, g2);
            ASSERT_LE(phi_lb(t, g1, th), heaviside_open(t));
            ASSERT_LE(heaviside_closed(t), phi_ub(t, g1, th));
            ASSERT_GE(phi_ub(t, g1, th), phi_ub(t, g2, th));
            ASSERT_LE(phi_lb(t, g1, th), phi_lb(t, g2, th));
        }
    }
}

TEST(Phi, LimitsAsGammaShrinks) {
    for (double t : {-0.3, -1e-3, 0.0, 1e-3, 0.3}) {
        const double g = 1e-8;
        EXPECT_EQ(phi_ub(t, g, kId), heaviside_closed(t)) << t;
        EXPECT_EQ(phi_lb(t, g, kId), heaviside_open(t)) << t;
    }
    // The error never grows along a shrinking chain.
    for (double t : {-0.05, 0.05}) {
        double prev_ub = 2, prev_lb = -1;
        for (int k = 1; k <= 8; ++k) {
            double g = std::pow(10.0, -k);
            EXPECT_LE(phi_ub(t, g, kId), prev_ub);
            EXPECT_GE(phi_lb(t, g, kId), prev_lb);
            prev_ub = phi_ub(t, g, kId);
            prev_lb = phi_lb(t, g, kId);
        }
    }
}

TEST(Phi, SemicontinuityAlongAdversarialSequences) {
    for (double ts : {-0.2, 0.0, 0.2}) {
        double sup_ub = 0, inf_lb = 1;
        for (int n = 1000; n <= 100000; n *= 10) {
            for (double sgn : {-1.0, 1.0}) {
                double t = ts + sgn / n, g = 1.0 / std::sqrt(static_cast<double>(n));
                sup_ub = std::max(sup_ub, phi_ub(t, g, kId));
                inf_lb = std::min(inf_lb, phi_lb(t, g, kId));
            }
        }
        EXPECT_LE(sup_ub, phi_ub(ts, 0.0, kId));
        EXPECT_GE(inf_lb, phi_lb(ts, 0.0, kId));
    }
}

TEST(Theta, ValidationAndParsing) {
    EXPECT_NO_THROW(kId.validate());
    EXPECT_NO_THROW(two_piece().validate());
    EXPECT_NO_THROW(ThetaPair::smooth(2.0).validate());
    EXPECT_THROW(ThetaPair::piecewise({0, 0.5, 1}, {0, 0.75, 1}, {0, 0.75, 1}).validate(), std::invalid_argument);
    EXPECT_THROW(ThetaPair::piecewise({0, 0.5, 1}, {0, 0.25, 0.9}, {0, 0.75, 1}).validate(), std::invalid_argument);
    for (const auto& s : {"identity", "pa:0,0.5,1:0,0.25,1:0,0.75,1", "smooth:3"}) {
        auto t = parse_theta(s);
        EXPECT_EQ(parse_theta(format_theta(t)), t) << s;
    }
    EXPECT_THROW(parse_theta("bogus"), std::invalid_argument);
}

TEST(Theta, SmoothPairEndpoints) {
    auto t = ThetaPair::smooth(3.0);
    EXPECT_EQ(t.cvx.value(0), 0.0);
    EXPECT_EQ(t.cvx.value(1), 1.0);
    EXPECT_EQ(t.cve.value(0), 0.0);
    EXPECT_EQ(t.cve.value(1), 1.0);
    EXPECT_NEAR(t.cvx.value(0.5), 0.125, 1e-15);
    EXPECT_NEAR(t.cve.value(0.5), 0.875, 1e-15);
}

TEST(Rows, BernoulliExampleAtZero) {
    auto p = ex31_problem(1.0, 0.1);
    for (double g : {0.05, 0.3, 1.0})
        for (double z : {-1.0, 1.0}) {
            std::vector<double> zz{z};
            EXPECT_EQ(c_row_rlx(p, 0, v1(0), zz, g, kId), 0.0);
            EXPECT_EQ(c_row_rst(p, 0, v1(0), zz, g, kId), 1.0);
        }
}

TEST(Rows, NegativeCoefficientReducesToSingleApproximation) {
    auto p = linear_problem({1.0}, {-1.0}, 0.0);
    std::vector<double> z{0.0};
    for (double x : {-0.7, -0.05, 0.0, 0.2}) {
        EXPECT_EQ(c_row_rlx(p, 0, v1(x), z, 0.3, kId), -phi_ub(x, 0.3, kId));
        EXPECT_EQ(c_row_rst(p, 0, v1(x), z, 0.3, kId), -phi_lb(x, 0.3, kId));
    }
}

TEST(Rows, OpposedTermsOnSameFunctional) {
    auto p = linear_problem({1.0, 1.0}, {1.0, -1.0}, 0.0);
    std::vector<double> z{0.0};
    for (int i = 0; i <= 200; ++i) {
        double x = -1 + i / 100.0;
        EXPECT_LE(c_row_rlx(p, 0, v1(x), z, 0.25, kId), 0.0);
    }
}

TEST(Rows, RestrictedDominatesRelaxed) {
    auto p = ex41_problem(false);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1, 1), G(0.01, 0.49);
    for (int i = 0; i < 5000; ++i) {
        std::vector<double> z{U(rng)};
        Vec x = v1(U(rng));
        double g = G(rng);
        ASSERT_LE(c_row_rlx(p, 0, x, z, g, kId), c_row_rst(p, 0, x, z, g, kId));
    }
}

TEST(Rows, ProbabilitySandwichByEnumeration) {
    for (double e : {1.0, -1.0}) {
        auto p = ex31_problem(e, 0.0);
        for (int i = 0; i <= 40; ++i) {
            Vec x = v1(-1 + i / 20.0);
            double rst = 0, rlx = 0, prob = 0;
            for (std::size_t s = 0; s < 2; ++s) {
                const auto& z = p.source.rows[s];
                rst += 0.5 * c_row_rst(p, 0, x, z, 0.3, kId);
                rlx += 0.5 * c_row_rlx(p, 0, x, z, 0.3, kId);
                prob += 0.5 * c_row_indicator(p, 0, x, z);
            }
            EXPECT_LE(rlx, prob);
            EXPECT_LE(prob, rst);
        }
    }
}

TEST(Rows, FeasibleSetsNestInGamma) {
    const double zr = 0.25, zl = 0.125;
    for (int i = 0; i <= 400; ++i) {
        double x = -1 + i / 200.0;
        for (double g1 : {0.1, 0.2, 0.4})
            for (double g2 : {0.05, 0.1, 0.2})
                if (g1 >= g2) {
                    if (ex41_cbar_rst(x, g1) <= zr) EXPECT_LE(ex41_cbar_rst(x, g2), zr) << x;
                    if (ex41_cbar_rlx(x, g2) <= zl) EXPECT_LE(ex41_cbar_rlx(x, g1), zl) << x;
                }
    }
}

TEST(Rows, DirectionalDerivativeMatchesFiniteDifference) {
    auto p = ex41_problem(false);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> z{U(rng)};
        Vec x = v1(U(rng) * 0.9);
        for (double v : {1.0, -1.0})
            for (auto var : {Variant::rst, Variant::rlx}) {
                const double t = 1e-7;
                double fd = (c_row(p, 0, x + v1(t * v), z, 0.2, kId, var) - c_row(p, 0, x, z, 0.2, kId, var)) / t;
                double dd = c_row_dd(p, 0, x, z, 0.2, kId, var, v1(v));
                ASSERT_NEAR(fd, dd, 1e-5);
                ASSERT_GE(c_row_clarke(p, 0, x, z, 0.2, kId, var, v1(v)), dd - 1e-12);
            }
    }
}

TEST(HZ, UniformClosedForm) {
    auto u = DistributionOracle::uniform(-1, 1);
    for (double g : {0.1, 0.5, 1.0}) {
        EXPECT_NEAR(u.h(g, Side::ub), 0.5 - g / 4, 1e-12);
        EXPECT_NEAR(u.h(g, Side::lb), 0.5 + g / 4, 1e-12);
    }
}

TEST(HZ, MinAffineModelByQuadrature) {
    // Z = min(2z, z + 1), z ~ U(-2, 2): F(t) = P(z <= max(t/2, t - 1)).
    auto F = [](double t) { return std::clamp((std::max(t / 2, t - 1) + 2) / 4, 0.0, 1.0); };
    const double g = 0.5;
    double hlb = adaptive_simpson(F, 0, g, 1e-12) / g;
    EXPECT_NEAR(hlb, 0.53125, 1e-10);
    EXPECT_NEAR(hlb, ex61_h(2, g, Side::lb), 1e-10);
}

TEST(HZ, EmpiricalEdgeCases) {
    EXPECT_EQ(h_Z({0.6, 0.8, 2.0}, 0.5, Side::lb), 0.0);
    EXPECT_EQ(h_Z({-3.0, -2.0}, 0.5, Side::ub), 1.0);
    // Two atoms at -0.25 and 0.25, gamma = 0.5: CDF is 1/2 on [-0.25, 0.25).
    EXPECT_NEAR(h_Z({-0.25, 0.25}, 0.5, Side::ub), 0.25, 1e-15);
    EXPECT_NEAR(h_Z({-0.25, 0.25}, 0.5, Side::lb), 0.75, 1e-15);
    EXPECT_THROW(h_Z({0.0}, 0.0, Side::lb), std::invalid_argument);
}

TEST(HZ, EmpiricalMatchesUniform) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> v(200000);
    for (auto& x : v) x = U(rng);
    std::sort(v.begin(), v.end());
    EXPECT_NEAR(h_Z(v, 0.3, Side::ub), 0.5 - 0.3 / 4, 3 / std::sqrt(2e5));
}

TEST(GammaShift, TightUniformCase) {
    auto r = check_gamma_shift_bound(DistributionOracle::uniform(-1, 1), 0.4, 0.2, kId);
    EXPECT_NEAR(r.lhs_ub, 0.05, 1e-9);
    EXPECT_NEAR(r.rhs_ub, 0.05, 1e-9);
    EXPECT_NEAR(r.lhs_lb, 0.05, 1e-9);
    EXPECT_NEAR(r.rhs_lb, 0.05, 1e-9);
    EXPECT_TRUE(r.holds);
}

TEST(GammaShift, EqualGammasAndBernoulli) {
    auto r = check_gamma_shift_bound(DistributionOracle::uniform(-1, 1), 0.3, 0.3, kId);
    EXPECT_EQ(r.lhs_ub, 0.0);
    EXPECT_EQ(r.rhs_ub, 0.0);
    auto b = check_gamma_shift_bound(DistributionOracle::bernoulli(0.5, -1, 1), 0.9, 0.2, kId);
    EXPECT_EQ(b.lhs_ub, 0.0);
    EXPECT_TRUE(b.holds);
    EXPECT_THROW(check_gamma_shift_bound(DistributionOracle::uniform(-1, 1), 0.1, 0.2, kId), std::invalid_argument);
}

TEST(Quadrature, KinkedIntegrand) {
    EXPECT_NEAR(adaptive_simpson([](double t) { return std::abs(t); }, -1, 2, 1e-12, {0.0}), 2.5, 1e-12);
    EXPECT_NEAR(adaptive_simpson([](double t) { return t >= 0.3 ? 1.0 : 0.0; }, 0, 1, 1e-12, {0.3}), 0.7, 1e-12);
}
