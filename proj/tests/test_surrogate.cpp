#include "accsp/oracles.hpp"
#include "accsp/surrogate.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace accsp;

namespace {

const auto kTheta = std::make_shared<const ThetaPair>(ThetaPair::identity());

Vec v1(double a) { return Vec::Constant(1, a); }

DcMaxFunction affine_x() {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::affine(v1(1), 0)};
    f.h = {SmoothConvexPiece::constant(1, 0)};
    return f;
}

DcMaxFunction abs_x() {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::affine(v1(1), 0), SmoothConvexPiece::affine(v1(-1), 0)};
    f.h = {SmoothConvexPiece::constant(1, 0)};
    return f;
}

AccProblem single_row(std::vector<DcMaxFunction> fs, std::vector<double> e) {
    AccProblem p;
    p.n = 1;
    p.domain.lo = v1(-1);
    p.domain.hi = v1(1);
    p.objective.g = {SmoothConvexPiece::constant(1, 0)};
    p.objective.h = {SmoothConvexPiece::constant(1, 0)};
    p.functionals = std::move(fs);
    p.rows = {ConstraintRow{std::move(e), 0.0}};
    p.source.kind = RandomSource::Kind::table;
    p.source.dim = 1;
    p.source.rows = {{0.0}};
    p.source.probs = {1.0};
    return p;
}

std::vector<Vec> grid(int n) {
    std::vector<Vec> g;
    for (int i = 0; i < n; ++i) g.push_back(v1(-1 + 2.0 * i / (n - 1)));
    return g;
}

const std::vector<Vec> kDirs{v1(1), v1(-1)};

SurrogateCheckReport check(const AccProblem& p, const SurrogateRow& row, Variant var, double gamma,
                           const std::vector<double>& z, int probes = 1001) {
    const auto& th = *kTheta;
    return check_surrogate_conditions(
        row, [&](const Vec& x) { return c_row(p, 0, x, z, gamma, th, var); },
        [&](const Vec& x, const Vec& v) { return c_row_dd(p, 0, x, z, gamma, th, var, v); }, grid(probes), kDirs);
}

}  // namespace

TEST(Surrogate, AffineFunctionalIsReproducedExactly) {
    // With every index kept the min over options rebuilds the truncation exactly.
    auto p = single_row({affine_x()}, {1.0});
    std::vector<double> z{0.0};
    for (double xb : {-0.5, 0.0, 0.3}) {
        auto row = build_surrogate_rst(p, 0, z, 0.4, kTheta, v1(xb), SurrogatePolicy::full());
        for (const auto& x : grid(201))
            EXPECT_NEAR(row.value(x), c_row_rst(p, 0, x, z, 0.4, *kTheta), 1e-12) << x(0);
    }
}

TEST(Surrogate, AffineFunctionalSingleIndexIsExactOnReferenceSide) {
    auto p = single_row({affine_x()}, {1.0});
    std::vector<double> z{0.0};
    for (auto pol : {SurrogatePolicy::subgradient(), SurrogatePolicy::eps_argmax()}) {
        auto row = build_surrogate_rst(p, 0, z, 0.4, kTheta, v1(-0.5), pol);
        for (const auto& x : grid(201)) {
            double c = c_row_rst(p, 0, x, z, 0.4, *kTheta);
            EXPECT_GE(row.value(x), c - 1e-15);
            if (x(0) <= 0) EXPECT_NEAR(row.value(x), c, 1e-12) << x(0);
        }
    }
}

TEST(Surrogate, AbsoluteValueTouchesAndMajorizes) {
    auto p = single_row({abs_x()}, {1.0});
    std::vector<double> z{0.0};
    auto row = build_surrogate_rst(p, 0, z, 1.0, kTheta, v1(0.5), SurrogatePolicy::eps_argmax());
    EXPECT_NEAR(row.value(v1(0.5)), c_row_rst(p, 0, v1(0.5), z, 1.0, *kTheta), 1e-12);
    EXPECT_GE(row.value(v1(-0.5)), c_row_rst(p, 0, v1(-0.5), z, 1.0, *kTheta));
}

TEST(Surrogate, RestrictedExampleOnGrid) {
    auto p = ex41_problem(false);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> z{U(rng)};
        for (auto pol : {SurrogatePolicy::subgradient(), SurrogatePolicy::eps_argmax(), SurrogatePolicy::full(),
                         SurrogatePolicy::linearized_full()}) {
            for (auto var : {Variant::rst, Variant::rlx}) {
                auto row = build_surrogate_row(p, 0, z, 0.2, kTheta, v1(0.3), pol, var);
                auto rep = check(p, row, var, 0.2, z, 41);
                EXPECT_LE(rep.touching_error, 1e-10);
                EXPECT_EQ(rep.majorization_violations, 0u) << format_policy(pol) << " z=" << z[0];
            }
        }
    }
}

TEST(Surrogate, LinearizedFunctionalsBracketZ) {
    auto f = ex41_problem(false).functionals[0];
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> z{U(rng)};
        Vec x = v1(U(rng)), xb = v1(U(rng));
        double Z = dc_value(f, x, z);
        EXPECT_LE(LZ_g(f, x, z, xb), Z + 1e-15);
        EXPECT_GE(LZ_h(f, x, z, xb), Z - 1e-15);
        EXPECT_NEAR(LZ_g(f, xb, z, xb), dc_value(f, xb, z), 1e-15);
        EXPECT_NEAR(LZ_h(f, xb, z, xb), dc_value(f, xb, z), 1e-15);
    }
}

TEST(Surrogate, RelaxedBuildersAgreeAtReference) {
    auto p = ex41_problem(false);
    std::vector<double> z{0.35};
    for (double xb : {-0.2, 0.1, 0.3, 0.6}) {
        auto a = build_surrogate_rlx(p, 0, z, 0.2, kTheta, v1(xb), SurrogatePolicy::eps_argmax());
        auto b = build_surrogate_rlx(p, 0, z, 0.2, kTheta, v1(xb), SurrogatePolicy::linearized_full());
        EXPECT_NEAR(a.value(v1(xb)), b.value(v1(xb)), 1e-12);
        EXPECT_NEAR(a.value(v1(xb)), c_row_rlx(p, 0, v1(xb), z, 0.2, *kTheta), 1e-12);
    }
}

TEST(Surrogate, SingleTermRelaxedTouches) {
    auto p = single_row({abs_x(), affine_x()}, {1.0, 0.0});
    std::vector<double> z{0.0};
    for (double xb : {-0.3, 0.05, 0.4}) {
        auto row = build_surrogate_rlx(p, 0, z, 0.5, kTheta, v1(xb), SurrogatePolicy::eps_argmax());
        EXPECT_NEAR(row.value(v1(xb)), phi_lb(std::abs(xb), 0.5, *kTheta), 1e-12);
    }
}

TEST(SurrogateConditions, AffineOnlyHasNoViolations) {
    auto p = single_row({affine_x()}, {-1.0});
    std::vector<double> z{0.0};
    auto row = build_surrogate_rst(p, 0, z, 0.3, kTheta, v1(0.1), SurrogatePolicy::eps_argmax());
    auto rep = check(p, row, Variant::rst, 0.3, z);
    EXPECT_EQ(rep.majorization_violations, 0u);
    EXPECT_LE(rep.touching_error, 1e-12);
    EXPECT_TRUE(rep.dd_consistent);
}

TEST(SurrogateConditions, EpsArgmaxKeepsDirectionalDerivatives) {
    auto p = single_row({abs_x()}, {-1.0});
    std::vector<double> z{0.0};
    auto row = build_surrogate_rst(p, 0, z, 0.5, kTheta, v1(0.05), SurrogatePolicy::eps_argmax(0.1));
    auto rep = check(p, row, Variant::rst, 0.5, z);
    EXPECT_EQ(rep.majorization_violations, 0u);
    EXPECT_TRUE(rep.dd_consistent);
    EXPECT_LE(rep.dd_error, 1e-8);
}

TEST(SurrogateConditions, SingleIndexAtTieLosesDirectionalDerivative) {
    auto p = single_row({abs_x()}, {-1.0});
    std::vector<double> z{0.0};
    auto row = build_surrogate_rst(p, 0, z, 0.5, kTheta, v1(0.0), SurrogatePolicy::single());
    auto rep = check(p, row, Variant::rst, 0.5, z);
    EXPECT_EQ(rep.majorization_violations, 0u);
    EXPECT_FALSE(rep.dd_consistent);
    EXPECT_GT(rep.dd_error, 1.0);
}

TEST(SurrogateConditions, UpperSemicontinuityOfEpsFamily) {
    auto p = single_row({abs_x()}, {-1.0});
    std::vector<double> z{0.0};
    const Vec xs = v1(0.2);
    auto limit = build_surrogate_rst(p, 0, z, 0.5, kTheta, v1(0.0), SurrogatePolicy::eps_argmax(0.1));
    double lim_val = limit.value(xs);
    for (int n = 10; n <= 100000; n *= 10) {
        auto row = build_surrogate_rst(p, 0, z, 0.5, kTheta, v1(1.0 / n), SurrogatePolicy::eps_argmax(0.1));
        EXPECT_LE(row.value(xs + v1(1.0 / n)), lim_val + 2.0 / n / 0.5 + 1e-12);
    }
}

TEST(Surrogate, ObjectiveSurrogateOfConvexObjectiveIsExact) {
    auto p = ex41_problem(false);
    auto row = build_surrogate_objective(p, {}, v1(0.4), SurrogatePolicy::eps_argmax());
    for (const auto& x : grid(21)) EXPECT_NEAR(row.value(x), x(0) + 1, 1e-14);
    auto q = ex41_problem(true);
    auto r2 = build_surrogate_objective(q, {}, v1(0.1), SurrogatePolicy::subgradient());
    for (const auto& x : grid(21)) EXPECT_GE(r2.value(x), dc_value(q.objective, x, {}) - 1e-14);
    EXPECT_NEAR(r2.value(v1(0.1)), dc_value(q.objective, v1(0.1), {}), 1e-14);
}

TEST(Surrogate, FullIndexConvergesToLimitFunctions) {
    auto p = ex41_problem(false);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1, 1);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        std::vector<double> z{U(rng)};
        Vec x = v1(U(rng)), xb = v1(U(rng));
        const auto& f = p.functionals[0];
        if (std::abs(LZ_h(f, x, z, xb)) < 0.05 || std::abs(LZ_g(f, x, z, xb)) < 0.05) continue;
        auto ub = build_surrogate_rst(p, 0, z, 1e-4, kTheta, xb, SurrogatePolicy::linearized_full());
        auto lb = build_surrogate_rlx(p, 0, z, 1e-4, kTheta, xb, SurrogatePolicy::linearized_full());
        EXPECT_NEAR(ub.value(x), c_limit_ub(p, 0, x, z, xb), 1e-9);
        EXPECT_NEAR(lb.value(x), c_limit_lb(p, 0, x, z, xb), 1e-9);
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(Policy, ParseAndFormat) {
    for (const auto& s : {"subgradient", "full", "single", "linearized-full", "eps-argmax:0.001"})
        EXPECT_EQ(format_policy(parse_policy(s)), s);
    EXPECT_EQ(parse_policy("eps-argmax").eps, 1e-9);
    EXPECT_THROW(parse_policy("nearest"), std::invalid_argument);
}

TEST(Surrogate, RejectsNonpositiveGamma) {
    auto p = ex41_problem(false);
    std::vector<double> z{0.1};
    EXPECT_THROW(build_surrogate_rst(p, 0, z, 0.0, kTheta, v1(0), SurrogatePolicy::full()), std::invalid_argument);
}
