#include "accsp/approx.hpp"
#include "accsp/oracles.hpp"
#include "accsp/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace accsp;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

const ThetaPair kTh = ThetaPair::identity();

// Integral over z ~ U(-1, 1) of the sample row, with kinks of Z = z - max(2x, 1 - 2x) as breakpoints.
double quadrature_row(const AccProblem& p, double x, double gamma, Variant var) {
    const double m = std::max(2 * x, 1 - 2 * x);
    auto f = [&](double z) {
        std::vector<double> zz{z};
        return c_row(p, 0, v1(x), zz, gamma, kTh, var);
    };
    std::vector<double> br;
    for (double t : {m - gamma, m, m + gamma})
        if (t > -1 && t < 1) br.push_back(t);
    return adaptive_simpson(f, -1, 1, 1e-12, br) / 2;
}

}  // namespace

TEST(Ex41, ProbabilityClosedForm) {
    EXPECT_EQ(ex41_probability(0.25), 0.25);
    EXPECT_EQ(ex41_probability(0.3), (1 - 0.6) / 2);
    EXPECT_EQ(ex41_probability(0.0), 0.0);
    EXPECT_EQ(ex41_probability(0.75), 0.0);
    EXPECT_EQ(ex41_probability(-1.0), 0.0);
}

TEST(Ex41, RowsMatchQuadrature) {
    auto p = ex41_problem(false);
    for (double g : {0.05, 0.2, 0.4})
        for (int i = 0; i <= 40; ++i) {
            double x = -1 + 0.05 * i;
            EXPECT_NEAR(ex41_cbar_rst(x, g), quadrature_row(p, x, g, Variant::rst), 1e-8) << x << " " << g;
            EXPECT_NEAR(ex41_cbar_rlx(x, g), quadrature_row(p, x, g, Variant::rlx), 1e-8) << x << " " << g;
        }
}

TEST(Ex41, RowsSandwichTheProbability) {
    for (int i = 0; i <= 200; ++i) {
        double x = -1 + 0.01 * i;
        EXPECT_LE(ex41_cbar_rlx(x, 0.2), ex41_probability(x) + 1e-15);
        EXPECT_GE(ex41_cbar_rst(x, 0.2), ex41_probability(x) - 1e-15);
    }
}

TEST(Ex41, FeasibleCrossings) {
    // The restricted row meets 1/4 at (1 - gamma)/4 and at (1 + gamma)/4.
    EXPECT_NEAR(ex41_cbar_rst(0.3, 0.2), 0.25, 1e-12);
    EXPECT_NEAR(ex41_cbar_rst(0.2, 0.2), 0.25, 1e-12);
    EXPECT_GT(ex41_cbar_rst(0.25, 0.2), 0.25);
    EXPECT_LT(ex41_cbar_rst(0.35, 0.2), 0.25);
}

TEST(Ex41, OneSidedDerivativesMatchDifferences) {
    const double h = 1e-7;
    for (double g : {0.1, 0.2})
        for (double x : {-0.4, 0.1, 0.2, 0.25, 0.3, 0.45, 0.6}) {
            EXPECT_NEAR(ex41_cbar_rst_dd(x, g, 1), (ex41_cbar_rst(x + h, g) - ex41_cbar_rst(x, g)) / h, 1e-5) << x;
            EXPECT_NEAR(ex41_cbar_rst_dd(x, g, -1), (ex41_cbar_rst(x - h, g) - ex41_cbar_rst(x, g)) / h, 1e-5) << x;
            EXPECT_NEAR(ex41_cbar_rlx_dd(x, g, 1), (ex41_cbar_rlx(x + h, g) - ex41_cbar_rlx(x, g)) / h, 1e-5) << x;
            EXPECT_NEAR(ex41_cbar_rlx_dd(x, g, -1), (ex41_cbar_rlx(x - h, g) - ex41_cbar_rlx(x, g)) / h, 1e-5) << x;
        }
}

TEST(Ex41, GammaOutsideRangeRejected) {
    EXPECT_THROW(ex41_cbar_rst(0.1, 0.0), std::invalid_argument);
    EXPECT_THROW(ex41_cbar_rlx(0.1, 0.6), std::invalid_argument);
}

TEST(Ex41, MonteCarloWithinEnvelope) {
    auto p = ex41_problem(false);
    SampleStore st(p.source, 99);
    const std::size_t N = 20000;
    auto z = st.extend(N);
    for (double x : {-0.5, 0.2, 0.3, 0.7}) {
        double s = 0;
        for (double zi : z) {
            std::vector<double> zz{zi};
            s += c_row_rst(p, 0, v1(x), zz, 0.2, kTh);
        }
        EXPECT_NEAR(s / N, ex41_cbar_rst(x, 0.2), 4 * 0.5 / std::sqrt(double(N))) << x;
    }
}

TEST(Ex61, ClosedFormAgainstEmpiricalWindow) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-2, 2);
    const std::size_t N = 100000;
    for (double f : {2.0, 3.0}) {
        std::vector<double> Z(N);
        for (auto& v : Z) {
            double z = U(rng);
            v = std::min(f * z, z + 1);
        }
        for (double g : {0.1, 0.5, 1.0}) {
            EXPECT_NEAR(ex61_h(f, g, Side::lb), h_Z(Z, g, Side::lb), 3 / std::sqrt(double(N))) << f << " " << g;
            EXPECT_NEAR(ex61_h(f, g, Side::ub), h_Z(Z, g, Side::ub), 3 / std::sqrt(double(N))) << f << " " << g;
        }
    }
    EXPECT_THROW(ex61_h(2.0, 0.0, Side::lb), std::invalid_argument);
    EXPECT_THROW(ex61_h(0.0, 0.5, Side::lb), std::invalid_argument);
}

TEST(Ex31, RowMatchesTwoPointEnumeration) {
    for (double e : {1.0, -1.0, 0.5}) {
        auto p = ex31_problem(e, 0.1);
        for (double x : {-0.7, -0.1, 0.0, 0.05, 0.4})
            for (auto var : {Variant::rst, Variant::rlx}) {
                std::vector<double> zp{1.0}, zm{-1.0};
                double enumd = 0.5 * (c_row(p, 0, v1(x), zp, 0.3, kTh, var) + c_row(p, 0, v1(x), zm, 0.3, kTh, var));
                EXPECT_NEAR(ex31_row(x, e, 0.3, var), enumd, 1e-15) << e << " " << x;
            }
    }
    EXPECT_EQ(ex31_row(0.0, 1.0, 0.3, Variant::rst), 1.0);
    EXPECT_EQ(ex31_row(0.0, 1.0, 0.3, Variant::rlx), 0.0);
}

TEST(ExpectationOracle, DispatchesByProblem) {
    auto p = ex41_problem(false);
    auto o = make_expectation_oracle(p, kTh);
    ASSERT_TRUE(o.has_value());
    EXPECT_EQ(o->id, "ex41");
    EXPECT_EQ(o->value(0, v1(0.37), 0.2, Variant::rst), ex41_cbar_rst(0.37, 0.2));
    EXPECT_EQ(o->dd(0, v1(0.37), 0.2, Variant::rlx, v1(-1)), ex41_cbar_rlx_dd(0.37, 0.2, -1));

    auto t = make_expectation_oracle(ex31_problem(1.0, 0.1), kTh);
    ASSERT_TRUE(t.has_value());
    EXPECT_NEAR(t->value(0, v1(0.1), 0.3, Variant::rst), ex31_row(0.1, 1.0, 0.3, Variant::rst), 1e-15);

    EXPECT_FALSE(make_expectation_oracle(ex61_problem(3.0), kTh).has_value());
}

TEST(ObjectiveOracle, DeterministicAndTable) {
    auto p = ex41_problem(false);
    auto o = make_objective_oracle(p, {});
    EXPECT_EQ(o.value(v1(0.25)), 1.25);
    EXPECT_EQ(o.dd(v1(0.25), v1(-1)), -1.0);
    auto r = ex41_problem(true);
    auto q = make_objective_oracle(r, {});
    EXPECT_EQ(q.value(v1(0.375)), 2.0);
    EXPECT_EQ(q.dd(v1(0.375), v1(1)), -1.0);
    EXPECT_EQ(q.dd(v1(0.375), v1(-1)), -1.0);
}

TEST(BruteForce, OneAndTwoDimensions) {
    Polytope d;
    d.lo = v1(-1);
    d.hi = v1(1);
    auto r = brute_force_min([](const Vec& x) { return (x(0) - 0.3137) * (x(0) - 0.3137); }, d, 1e-3);
    EXPECT_NEAR(r.x(0), 0.3137, 2e-4);
    EXPECT_GT(r.evaluations, 2000u);

    Polytope tri;
    tri.A = Mat::Ones(1, 2);
    tri.b = Vec::Ones(1);
    tri.lo = Vec::Zero(2);
    tri.hi = Vec::Ones(2);
    auto s = brute_force_min([](const Vec& x) { return -x(0) - 2 * x(1); }, tri, 1e-2);
    EXPECT_NEAR(s.x(0), 0.0, 1e-9);
    EXPECT_NEAR(s.x(1), 1.0, 1e-9);
    EXPECT_NEAR(s.value, -2.0, 1e-9);

    Polytope cube;
    cube.lo = Vec::Zero(3);
    cube.hi = Vec::Ones(3);
    EXPECT_THROW(brute_force_min([](const Vec&) { return 0.0; }, cube, 0.1), std::invalid_argument);
}

TEST(Problems, BundledProblemsAreWellFormed) {
    for (const auto& p : {ex41_problem(false), ex41_problem(true), ex31_problem(1.0, 0.1), ex61_problem(3.0),
                          penalty_threshold_problem()}) {
        EXPECT_NO_THROW(p.check()) << p.name;
        EXPECT_GE(p.K(), 1) << p.name;
    }
    EXPECT_EQ(ex41_problem(false).rows[0].zeta, 0.25);
    EXPECT_EQ(ex41_problem(true).rows[0].zeta, 0.125);
}
