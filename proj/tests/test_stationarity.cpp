#include "accsp/drivers.hpp"
#include "accsp/oracles.hpp"
#include "accsp/sampling.hpp"
#include "accsp/stationarity.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace accsp;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Polytope box(double lo, double hi) {
    Polytope d;
    d.lo = v1(lo);
    d.hi = v1(hi);
    return d;
}

DcMaxFunction abs_fn() {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::affine(v1(1), 0), SmoothConvexPiece::affine(v1(-1), 0)};
    f.h = {SmoothConvexPiece::constant(1, 0)};
    return f;
}

DcMaxFunction neg_abs_fn() {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::constant(1, 0)};
    f.h = {SmoothConvexPiece::affine(v1(1), 0), SmoothConvexPiece::affine(v1(-1), 0)};
    return f;
}

const DdFn kLinear = [](const Vec& v) { return v(0); };

std::vector<double> uniform_samples(const AccProblem& p, std::size_t N) {
    SampleStore st(p.source, 3);
    auto z = st.extend(N);
    return {z.begin(), z.end()};
}

}  // namespace

TEST(Stationarity, LinearObjectiveOnInterval) {
    auto d = box(-1, 1);
    auto left = check_stationarity(kLinear, kLinear, {}, d, v1(-1), StationarityMode::B);
    EXPECT_EQ(left.kind, StationarityVerdict::Kind::B_stationary);
    EXPECT_TRUE(left.stationary());
    EXPECT_EQ(left.regime, "exact cone enumeration (n = 1)");
    auto mid = check_stationarity(kLinear, kLinear, {}, d, v1(0), StationarityMode::d);
    EXPECT_EQ(mid.kind, StationarityVerdict::Kind::not_stationary);
    EXPECT_EQ(mid.witness(0), -1.0);
    EXPECT_EQ(mid.witness_dd, -1.0);
}

TEST(Stationarity, ActiveConstraintBlocksDescent) {
    // minimize x subject to -x - 1/2 <= 0 on [-1, 1]: the constraint stops descent at -1/2.
    ConstraintAtPoint c;
    c.value = 0.0;
    c.dd = [](const Vec& v) { return -v(0); };
    c.clarke = c.dd;
    auto v = check_stationarity(kLinear, kLinear, {c}, box(-1, 1), v1(-0.5), StationarityMode::B);
    EXPECT_EQ(v.kind, StationarityVerdict::Kind::B_stationary);
    auto d = check_stationarity(kLinear, kLinear, {c}, box(-1, 1), v1(-0.5), StationarityMode::d);
    EXPECT_EQ(d.kind, StationarityVerdict::Kind::not_stationary);
}

TEST(Stationarity, WeakClarkeModeIsConservative) {
    // Constraint -|x| <= 0 at 0: its Clarke bound |v| excludes every direction, its dd -|v| excludes none.
    ConstraintAtPoint c;
    c.dd = [](const Vec& v) { return -std::abs(v(0)); };
    c.clarke = [](const Vec& v) { return std::abs(v(0)); };
    auto b = check_stationarity(kLinear, kLinear, {c}, box(-1, 1), v1(0), StationarityMode::B);
    EXPECT_EQ(b.kind, StationarityVerdict::Kind::not_stationary);
    auto w = check_stationarity(kLinear, kLinear, {c}, box(-1, 1), v1(0), StationarityMode::weak_C);
    EXPECT_EQ(w.kind, StationarityVerdict::Kind::weak_C);
}

TEST(Stationarity, InfeasiblePointsThrow) {
    EXPECT_THROW(check_stationarity(kLinear, kLinear, {}, box(-1, 1), v1(1.5), StationarityMode::B),
                 std::invalid_argument);
    ConstraintAtPoint c;
    c.value = 0.1;
    c.dd = kLinear;
    c.clarke = kLinear;
    EXPECT_THROW(check_stationarity(kLinear, kLinear, {c}, box(-1, 1), v1(0), StationarityMode::B),
                 std::invalid_argument);
}

TEST(Stationarity, TwoDimensionalCornerIsSearchBounded) {
    Polytope d;
    d.lo = Vec::Constant(2, -1);
    d.hi = Vec::Constant(2, 1);
    DdFn f = [](const Vec& v) { return v(0) + v(1); };
    auto corner = check_stationarity(f, f, {}, d, Vec::Constant(2, -1), StationarityMode::B);
    EXPECT_EQ(corner.kind, StationarityVerdict::Kind::B_stationary);
    EXPECT_NE(corner.regime.find("search-bounded"), std::string::npos);
    auto edge = check_stationarity(f, f, {}, d, Vec{{-1.0, 0.0}}, StationarityMode::B);
    EXPECT_EQ(edge.kind, StationarityVerdict::Kind::not_stationary);
    EXPECT_LT(edge.witness_dd, 0);
}

TEST(Stationarity, VerdictNames) {
    EXPECT_EQ(to_string(StationarityVerdict::Kind::B_stationary), to_string(StationarityVerdict::Kind::B_stationary));
    EXPECT_NE(to_string(StationarityVerdict::Kind::B_stationary), to_string(StationarityVerdict::Kind::d_stationary));
    EXPECT_NE(to_string(StationarityVerdict::Kind::not_stationary), to_string(StationarityVerdict::Kind::indeterminate));
}

TEST(ResidualDd, AbsoluteValueRow) {
    DcRows rows({abs_fn()}, {0.0});
    EXPECT_EQ(penalty_residual(rows, v1(0.3)), 0.3);
    auto at0 = residual_dd(rows, v1(0), v1(1));
    EXPECT_EQ(at0.exact, 1.0);
    EXPECT_EQ(residual_dd(rows, v1(0), v1(-1)).exact, 1.0);
    auto right = residual_dd(rows, v1(0.3), v1(-1));
    EXPECT_EQ(right.exact, -1.0);
    EXPECT_GE(right.clarke_upper, right.exact);
}

TEST(ResidualDd, NegativeAbsoluteValueRow) {
    DcRows rows({neg_abs_fn()}, {0.0});
    EXPECT_EQ(penalty_residual(rows, v1(0.0)), 0.0);
    for (double s : {1.0, -1.0}) {
        auto r = residual_dd(rows, v1(0), v1(s));
        EXPECT_EQ(r.exact, 0.0);
        EXPECT_EQ(r.clarke_upper, 1.0);
    }
    EXPECT_EQ(residual_dd(rows, v1(0.5), v1(1)).exact, 0.0);
}

TEST(ResidualDd, InactiveRowContributesNothing) {
    DcRows rows({abs_fn()}, {0.5});
    auto r = residual_dd(rows, v1(0.1), v1(1));
    EXPECT_EQ(r.exact, 0.0);
    EXPECT_EQ(r.clarke_upper, 0.0);
}

TEST(ConvexLike, AbsoluteValueIsCertified) {
    auto f = [](const Vec& x) { return std::abs(x(0)); };
    auto dd = [](const Vec&, const Vec& s) { return std::abs(s(0)); };
    auto rep = convexlike_localmin_test(f, dd, v1(0), {0.1, 0.01}, true, false);
    EXPECT_TRUE(rep.certified);
    EXPECT_EQ(rep.holds, (std::vector<bool>{true, true}));
    EXPECT_EQ(rep.worst_gap, 0.0);
}

TEST(ConvexLike, ConcaveCurvatureFailsUnlessStructural) {
    auto f = [](const Vec& x) { return x(0) - x(0) * x(0); };
    auto dd = [](const Vec&, const Vec& s) { return s(0); };
    auto rep = convexlike_localmin_test(f, dd, v1(0), {0.1}, true, false);
    EXPECT_FALSE(rep.certified);
    EXPECT_NEAR(rep.worst_gap, -0.01, 1e-12);
    EXPECT_TRUE(convexlike_localmin_test(f, dd, v1(0), {0.1}, true, true).certified);
    EXPECT_FALSE(convexlike_localmin_test(f, dd, v1(0), {0.1}, false, true).certified);
}

TEST(ConvexLike, AffinePiecesAreStructural) {
    EXPECT_TRUE(rows_structurally_convexlike(ex41_problem(false)));
    auto p = ex41_problem(false);
    p.functionals[0].g[0].Q = Mat::Identity(1, 1);
    EXPECT_FALSE(rows_structurally_convexlike(p));
}

TEST(ExampleStationarity, RestrictedProblemPoints) {
    // Restricted feasible set at gamma = 0.2 is [-1, 0.2] U [0.3, 1] and the objective is x + 1.
    auto p = ex41_problem(false);
    auto th = ThetaPair::identity();
    auto z = uniform_samples(p, 2000);
    auto at = [&](double x) { return constrained_stationarity(p, z, v1(x), 0.2, th, Variant::rst); };
    EXPECT_EQ(at(-1.0).kind, StationarityVerdict::Kind::B_stationary);
    EXPECT_EQ(at(0.3).kind, StationarityVerdict::Kind::B_stationary);
    EXPECT_EQ(at(0.2).kind, StationarityVerdict::Kind::not_stationary);
    EXPECT_EQ(at(0.6).kind, StationarityVerdict::Kind::not_stationary);
    EXPECT_EQ(at(0.25).kind, StationarityVerdict::Kind::indeterminate);
}

TEST(ExampleStationarity, PenalizedObjectiveAtLeftEnd) {
    auto p = ex41_problem(false);
    auto th = ThetaPair::identity();
    auto z = uniform_samples(p, 500);
    auto v = penalized_stationarity(p, z, v1(-1), 0.2, th, Variant::rst, 10.0);
    EXPECT_EQ(v.kind, StationarityVerdict::Kind::d_stationary);
    auto w = penalized_stationarity(p, z, v1(0.9), 0.2, th, Variant::rst, 10.0);
    EXPECT_EQ(w.kind, StationarityVerdict::Kind::not_stationary);
}
