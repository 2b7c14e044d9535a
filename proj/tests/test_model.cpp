#include "accsp/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace accsp;

namespace {

const std::vector<double> kNoZ;

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { Vec v(2); v << a, b; return v; }

DcMaxFunction abs_fn() {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::affine(v1(1), 0), SmoothConvexPiece::affine(v1(-1), 0)};
    f.h = {SmoothConvexPiece::constant(1, 0)};
    return f;
}

// t_i - a_i and b_i - t_i as affine functions of t in R^2.
DcMaxFunction coord(int i, double sign, double offset) {
    Vec a = Vec::Zero(2);
    a(i) = sign;
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::affine(a, offset)};
    f.h = {SmoothConvexPiece::constant(2, 0)};
    return f;
}

double box_direct(const Vec& t, double a1, double b1, double a2, double b2) {
    return std::max(std::min(b1 - t(0), t(0) - a1), std::min(b2 - t(1), t(1) - a2));
}

// max_i min(u_i, v_i) with u_i + v_i constant, written as a 4-max minus a 4-max.
DcMaxFunction box_identity(double a1, double b1, double a2, double b2) {
    auto aff = [](double c0, double c1, double off) { return SmoothConvexPiece::affine(v2(c0, c1), off); };
    // u1 = b1 - t1, v1 = t1 - a1, u2 = b2 - t2, v2 = t2 - a2
    DcMaxFunction f;
    f.g = {aff(0, -1, b1 - a1 + b2), aff(0, 1, b1 - a1 - a2), aff(-1, 0, b2 - a2 + b1), aff(1, 0, b2 - a2 - a1)};
    f.h = {aff(-1, -1, b1 + b2), aff(-1, 1, b1 - a2), aff(1, -1, b2 - a1), aff(1, 1, -a1 - a2)};
    return f;
}

}  // namespace

TEST(EvalDc, AbsoluteValueAwayFromKink) {
    auto r = eval_dc(abs_fn(), v1(0.3), kNoZ);
    EXPECT_DOUBLE_EQ(r.value, 0.3);
    ASSERT_EQ(r.argmax_g.size(), 1u);
    EXPECT_EQ(r.argmax_g[0], 0);
}

TEST(EvalDc, AbsoluteValueTieAtKink) {
    auto r = eval_dc(abs_fn(), v1(0.0), kNoZ);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.argmax_g, (std::vector<int>{0, 1}));
}

TEST(EvalDc, EpsActiveSetsWiden) {
    auto r = eval_dc(abs_fn(), v1(0.05), kNoZ, 0.1);
    EXPECT_EQ(r.argmax_g, (std::vector<int>{0, 1}));
    auto exact = eval_dc(abs_fn(), v1(0.05), kNoZ, 0.0);
    EXPECT_EQ(exact.argmax_g, (std::vector<int>{0}));
}

TEST(EvalDc, DimensionMismatchThrows) {
    EXPECT_THROW(eval_dc(abs_fn(), v2(0, 0), kNoZ), std::invalid_argument);
}

TEST(EvalDc, BoxDisjunctionBothFormsAtCenter) {
    Vec t = v2(0.5, 0.5);
    EXPECT_DOUBLE_EQ(box_direct(t, 0, 1, 0, 1), 0.5);
    EXPECT_DOUBLE_EQ(dc_value(box_identity(0, 1, 0, 1), t, kNoZ), 0.5);
}

TEST(DirDeriv, AbsoluteValueAtZero) {
    EXPECT_DOUBLE_EQ(dir_deriv_dc(abs_fn(), v1(0), kNoZ, v1(1)), 1.0);
    EXPECT_DOUBLE_EQ(dir_deriv_dc(abs_fn(), v1(0), kNoZ, v1(-1)), 1.0);
}

TEST(DirDeriv, ZeroDirection) {
    EXPECT_EQ(dir_deriv_dc(abs_fn(), v1(0.7), kNoZ, v1(0)), 0.0);
    EXPECT_EQ(dir_deriv_dc(box_identity(0, 1, 0, 1), v2(0.2, 0.9), kNoZ, v2(0, 0)), 0.0);
}

TEST(DirDeriv, ClarkeUpperOfConcaveKink) {
    DcMaxFunction f;
    f.g = {SmoothConvexPiece::constant(1, 0)};
    f.h = abs_fn().g;
    EXPECT_DOUBLE_EQ(dir_deriv_dc(f, v1(0), kNoZ, v1(1)), -1.0);
    EXPECT_DOUBLE_EQ(clarke_dc(f, v1(0), kNoZ, v1(1)), 1.0);
}

TEST(Pieces, QuadraticValueAndGradient) {
    SmoothConvexPiece q;
    q.a = v2(1, 0);
    q.b = 2;
    q.Q = Mat::Identity(2, 2) * 2;
    Vec x = v2(1, 2);
    EXPECT_DOUBLE_EQ(q.value(x, kNoZ), 0.5 * 2 * 5 + 1 + 2);
    EXPECT_TRUE(q.gradient(x, kNoZ).isApprox(v2(3, 4)));
}

TEST(Pieces, LinearInZAndTable) {
    SmoothConvexPiece q = SmoothConvexPiece::affine(v1(0), 0.5);
    q.A_z = Mat::Constant(1, 2, 1.0);
    q.b_z = v2(0, 3);
    TableTerm t;
    t.column = 0;
    t.grad = {v1(10), v1(20)};
    t.offset = {100, 200};
    q.tables = {t};
    std::vector<double> z{1, 2};
    // a = 0 + (1 + 2) + 20, b = 0.5 + 6 + 200
    EXPECT_DOUBLE_EQ(q.value(v1(1), z), 23 + 206.5);
}

TEST(Compose, IdentityLeavesValues) {
    PiecewiseAffine phi;
    phi.a = {v1(1)};
    phi.alpha = {0};
    phi.b = {v1(0)};
    phi.beta = {0};
    auto f = abs_fn();
    auto c = dc_compose(phi, {f});
    for (double x : {-1.0, -0.3, 0.0, 0.4, 2.0}) EXPECT_DOUBLE_EQ(dc_value(c, v1(x), kNoZ), std::abs(x));
}

TEST(Compose, DifferenceOfTwoFunctions) {
    PiecewiseAffine phi;
    phi.a = {v2(1, -1)};
    phi.alpha = {0};
    phi.b = {v2(0, 0)};
    phi.beta = {0};
    auto f = abs_fn();
    DcMaxFunction g;
    g.g = {SmoothConvexPiece::affine(v1(2), -1), SmoothConvexPiece::affine(v1(-1), 0.5)};
    g.h = {SmoothConvexPiece::affine(v1(0.5), 0), SmoothConvexPiece::affine(v1(-3), 1)};
    auto c = dc_compose(phi, {f, g});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 100; ++i) {
        Vec x = v1(U(rng));
        EXPECT_NEAR(dc_value(c, x, kNoZ), dc_value(f, x, kNoZ) - dc_value(g, x, kNoZ), 1e-12);
    }
}

TEST(Compose, BoxDisjunctionMatchesDirectAndIdentity) {
    double a1 = -0.3, b1 = 0.8, a2 = 0.1, b2 = 1.4;
    PiecewiseAffine mn;  // min(y1, y2) = 0 - max(-y1, -y2)
    mn.a = {v2(0, 0)};
    mn.alpha = {0};
    mn.b = {v2(-1, 0), v2(0, -1)};
    mn.beta = {0, 0};
    auto m1 = dc_compose(mn, {coord(0, -1, b1), coord(0, 1, -a1)});
    auto m2 = dc_compose(mn, {coord(1, -1, b2), coord(1, 1, -a2)});
    PiecewiseAffine mx;
    mx.a = {v2(1, 0), v2(0, 1)};
    mx.alpha = {0, 0};
    mx.b = {v2(0, 0)};
    mx.beta = {0};
    auto composed = dc_compose(mx, {m1, m2});
    auto ident = box_identity(a1, b1, a2, b2);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2, 3);
    for (int i = 0; i < 100; ++i) {
        Vec t = v2(U(rng), U(rng));
        double d = box_direct(t, a1, b1, a2, b2);
        EXPECT_NEAR(dc_value(ident, t, kNoZ), d, 1e-12);
        EXPECT_NEAR(dc_value(composed, t, kNoZ), d, 1e-12);
    }
}

TEST(Compose, PieceCapEnforced) {
    PiecewiseAffine mx;
    mx.a = {v2(1, 0), v2(0, 1)};
    mx.alpha = {0, 0};
    mx.b = {v2(0, 0)};
    mx.beta = {0};
    auto f = box_identity(0, 1, 0, 1);
    EXPECT_THROW(dc_compose(mx, {f, f}, 10), std::length_error);
}

TEST(LogicalEvent, SingleLeafIsItself) {
    auto f = abs_fn();
    auto e = build_logical_event(LogicalEvent::leaf(f));
    for (double x : {-1.0, 0.0, 0.25}) EXPECT_DOUBLE_EQ(dc_value(e, v1(x), kNoZ), std::abs(x));
}

TEST(LogicalEvent, ConjunctionSignsMatchMin) {
    DcMaxFunction f1, f2;
    f1.g = {SmoothConvexPiece::affine(v1(1), -0.2)};
    f1.h = {SmoothConvexPiece::constant(1, 0)};
    f2.g = {SmoothConvexPiece::affine(v1(-1), 0.6)};
    f2.h = {SmoothConvexPiece::constant(1, 0)};
    auto e = build_logical_event(LogicalEvent::all({LogicalEvent::leaf(f1), LogicalEvent::leaf(f2)}));
    for (int i = 0; i <= 200; ++i) {
        double x = -1 + i * 0.01;
        double m = std::min(x - 0.2, 0.6 - x);
        double v = dc_value(e, v1(x), kNoZ);
        EXPECT_NEAR(v, m, 1e-12);
        EXPECT_EQ(v >= 0, m >= 0);
    }
}

TEST(LogicalEvent, DisjunctionOfIntervals) {
    auto id = coord(0, 1, 0);
    id.g[0] = SmoothConvexPiece::affine(v1(1), 0);
    id.h[0] = SmoothConvexPiece::constant(1, 0);
    auto e = build_logical_event(
        LogicalEvent::any({LogicalEvent::interval(id, 0, 1), LogicalEvent::interval(id, 2, 2.5)}));
    for (double x : {-0.5, 0.5, 1.5, 2.2, 3.0})
        EXPECT_NEAR(dc_value(e, v1(x), kNoZ), std::max(std::min(x, 1 - x), std::min(x - 2, 2.5 - x)), 1e-12);
    EXPECT_THROW(build_logical_event(LogicalEvent::all({})), std::invalid_argument);
}

TEST(Polytope, BoundsOfBoxAndRows) {
    Polytope p;
    p.A = Mat(1, 2);
    p.A << 1, 1;
    p.b = Vec::Constant(1, 1.0);
    p.lo = v2(0, 0);
    p.hi = v2(2, 2);
    auto bd = polytope_bounds(p);
    EXPECT_NEAR(bd.lower(0), 0, 1e-7);
    EXPECT_NEAR(bd.upper(0), 1, 1e-7);
    EXPECT_NEAR(bd.upper(1), 1, 1e-7);
    EXPECT_TRUE(p.contains(v2(0.5, 0.5)));
    EXPECT_FALSE(p.contains(v2(0.8, 0.5)));
    EXPECT_EQ(p.active_rows(v2(0.5, 0.5)), (std::vector<int>{0}));
}

TEST(Polytope, UnboundedAndEmptyRejected) {
    Polytope un;
    un.A = Mat::Constant(1, 1, -1.0);
    un.b = Vec::Zero(1);
    EXPECT_THROW(polytope_bounds(un), std::invalid_argument);
    Polytope empty;
    empty.lo = v1(1);
    empty.hi = v1(-1);
    EXPECT_THROW(polytope_bounds(empty), std::invalid_argument);
}
