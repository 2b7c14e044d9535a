#include "accsp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace accsp {

namespace {

struct Branch {
    double lo, hi;
    std::function<double(double)> f, df;
};

void check_ex41_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("closed form needs gamma in (0, 1/2)");
}

std::vector<Branch> rst_branches(double g) {
    return {
        {-g / 2, 0.0, [g](double x) { return (g + 2 * x) * (g + 2 * x) / (4 * g); },
         [g](double x) { return (g + 2 * x) / g; }},
        {0.0, 0.25, [g](double x) { return x + g / 4; }, [](double) { return 1.0; }},
        {0.25, 0.5, [g](double x) { return (1 - 2 * x) / 2 + g / 4; }, [](double) { return -1.0; }},
        {0.5, (1 + g) / 2, [g](double x) { return (g + 1 - 2 * x) * (g + 1 - 2 * x) / (4 * g); },
         [g](double x) { return -(g + 1 - 2 * x) / g; }},
    };
}

std::vector<Branch> rlx_branches(double g) {
    return {
        {0.0, g / 2, [g](double x) { return x * x / g; }, [g](double x) { return 2 * x / g; }},
        {g / 2, 0.25, [g](double x) { return x - g / 4; }, [](double) { return 1.0; }},
        {0.25, (1 - g) / 2, [g](double x) { return (1 - 2 * x) / 2 - g / 4; }, [](double) { return -1.0; }},
        {(1 - g) / 2, 0.5, [g](double x) { return (1 - 2 * x) * (1 - 2 * x) / (4 * g); },
         [g](double x) { return -(1 - 2 * x) / g; }},
    };
}

double eval_branches(const std::vector<Branch>& br, double x) {
    for (const auto& b : br)
        if (x >= b.lo && x < b.hi) return b.f(x);
    return 0.0;
}

// One-sided slope: right slope uses the branch holding [x, x+), left slope the branch holding (x-, x].
double dd_branches(const std::vector<Branch>& br, double x, double v) {
    if (v == 0.0) return 0.0;
    for (const auto& b : br) {
        bool in = v > 0 ? (x >= b.lo && x < b.hi) : (x > b.lo && x <= b.hi);
        if (in) return v * b.df(x);
    }
    return 0.0;
}

}  // namespace

double ex41_cbar_rst(double x, double gamma) {
    check_ex41_gamma(gamma);
    return eval_branches(rst_branches(gamma), x);
}

double ex41_cbar_rlx(double x, double gamma) {
    check_ex41_gamma(gamma);
    return eval_branches(rlx_branches(gamma), x);
}

double ex41_cbar_rst_dd(double x, double gamma, double v) {
    check_ex41_gamma(gamma);
    return dd_branches(rst_branches(gamma), x, v);
}

double ex41_cbar_rlx_dd(double x, double gamma, double v) {
    check_ex41_gamma(gamma);
    return dd_branches(rlx_branches(gamma), x, v);
}

double ex41_probability(double x) {
    double m = std::max(2 * x, 1 - 2 * x);
    return std::clamp((1 - m) / 2, 0.0, 1.0);
}

double ex61_h(double f, double gamma, Side side) {
    if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("closed form needs gamma in (0, 1]");
    if (!(f > 0.0)) throw std::invalid_argument("closed form needs f > 0");
    double d = gamma / (8 * f);
    return side == Side::lb ? 0.5 + d : 0.5 - d;
}

double ex31_row(double x, double e, double gamma, Variant variant) {
    const auto th = ThetaPair::identity();
    auto term = [&](double t) {
        double ep = std::max(e, 0.0), em = std::max(-e, 0.0);
        if (variant == Variant::rst) return ep * phi_ub(t, gamma, th) - em * phi_lb(t, gamma, th);
        return ep * phi_lb(t, gamma, th) - em * phi_ub(t, gamma, th);
    };
    return 0.5 * (term(x) + term(-x));
}

BruteForceResult brute_force_min(const std::function<double(const Vec&)>& f, const Polytope& domain,
                                 double resolution) {
    const int n = domain.dim();
    if (n < 1 || n > 2) throw std::invalid_argument("brute force oracle supports n = 1 or 2");
    if (!(resolution > 0)) throw std::invalid_argument("resolution must be positive");
    auto b = polytope_bounds(domain);
    BruteForceResult r;
    r.value = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& x) {
        Vec y = x.cwiseMax(b.lower).cwiseMin(b.upper);
        if (!domain.contains(y)) return;
        double v = f(y);
        ++r.evaluations;
        if (v < r.value) {
            r.value = v;
            r.x = y;
        }
    };
    auto steps = [&](int i) {
        return static_cast<long>(std::ceil((b.upper(i) - b.lower(i)) / resolution - 1e-9));
    };
    if (n == 1) {
        long m = steps(0);
        for (long i = 0; i <= m; ++i) consider(Vec::Constant(1, std::min(b.lower(0) + i * resolution, b.upper(0))));
    } else {
        long m0 = steps(0), m1 = steps(1);
        for (long i = 0; i <= m0; ++i)
            for (long j = 0; j <= m1; ++j) {
                Vec x(2);
                x << std::min(b.lower(0) + i * resolution, b.upper(0)), std::min(b.lower(1) + j * resolution, b.upper(1));
                consider(x);
            }
    }
    if (r.evaluations == 0) throw std::runtime_error("brute force grid missed the domain");
    // One refinement pass on a ten times finer grid around the best point.
    const Vec center = r.x;
    const double fine = resolution / 10;
    if (n == 1) {
        for (int i = -10; i <= 10; ++i) consider(center + Vec::Constant(1, i * fine));
    } else {
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                Vec d(2);
                d << i * fine, j * fine;
                consider(center + d);
            }
    }
    return r;
}

std::optional<ExpectationOracle> make_expectation_oracle(const AccProblem& p, const ThetaPair& theta) {
    const bool identity =
        theta.cvx.kind == ScalarTheta::Kind::identity && theta.cve.kind == ScalarTheta::Kind::identity;
    if (p.oracle == "ex41" && identity) {
        ExpectationOracle o;
        o.id = "ex41";
        o.value = [](int k, const Vec& x, double gamma, Variant variant) {
            if (k != 0) throw std::out_of_range("closed form has a single row");
            return variant == Variant::rst ? ex41_cbar_rst(x(0), gamma) : ex41_cbar_rlx(x(0), gamma);
        };
        o.dd = [](int k, const Vec& x, double gamma, Variant variant, const Vec& v) {
            if (k != 0) throw std::out_of_range("closed form has a single row");
            return variant == Variant::rst ? ex41_cbar_rst_dd(x(0), gamma, v(0)) : ex41_cbar_rlx_dd(x(0), gamma, v(0));
        };
        return o;
    }
    if (p.source.kind == RandomSource::Kind::table) {
        ExpectationOracle o;
        o.id = "enumeration";
        auto prob = std::make_shared<AccProblem>(p);
        o.value = [prob, theta](int k, const Vec& x, double gamma, Variant variant) {
            double s = 0.0;
            for (std::size_t i = 0; i < prob->source.rows.size(); ++i)
                s += prob->source.probs[i] * c_row(*prob, k, x, prob->source.rows[i], gamma, theta, variant);
            return s;
        };
        o.dd = [prob, theta](int k, const Vec& x, double gamma, Variant variant, const Vec& v) {
            double s = 0.0;
            for (std::size_t i = 0; i < prob->source.rows.size(); ++i)
                s += prob->source.probs[i] * c_row_dd(*prob, k, x, prob->source.rows[i], gamma, theta, variant, v);
            return s;
        };
        return o;
    }
    return std::nullopt;
}

ObjectiveOracle make_objective_oracle(const AccProblem& p, std::span<const double> samples) {
    auto prob = std::make_shared<AccProblem>(p);
    ObjectiveOracle o;
    if (!p.objective.depends_on_z()) {
        o.value = [prob](const Vec& x) { return dc_value(prob->objective, x, {}); };
        o.dd = [prob](const Vec& x, const Vec& v) { return dir_deriv_dc(prob->objective, x, {}, v); };
        o.clarke = [prob](const Vec& x, const Vec& v) { return clarke_dc(prob->objective, x, {}, v); };
        return o;
    }
    std::vector<std::vector<double>> pts;
    std::vector<double> w;
    if (p.source.kind == RandomSource::Kind::table) {
        pts = p.source.rows;
        w = p.source.probs;
    } else {
        const auto d = static_cast<std::size_t>(p.source.dim);
        const std::size_t N = samples.size() / d;
        if (N == 0) throw std::invalid_argument("objective oracle needs samples for a random objective");
        for (std::size_t s = 0; s < N; ++s) {
            pts.emplace_back(samples.begin() + s * d, samples.begin() + (s + 1) * d);
            w.push_back(1.0 / static_cast<double>(N));
        }
    }
    auto P = std::make_shared<std::vector<std::vector<double>>>(std::move(pts));
    auto W = std::make_shared<std::vector<double>>(std::move(w));
    o.value = [prob, P, W](const Vec& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < P->size(); ++i) s += (*W)[i] * dc_value(prob->objective, x, (*P)[i]);
        return s;
    };
    o.dd = [prob, P, W](const Vec& x, const Vec& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < P->size(); ++i) s += (*W)[i] * dir_deriv_dc(prob->objective, x, (*P)[i], v);
        return s;
    };
    o.clarke = [prob, P, W](const Vec& x, const Vec& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < P->size(); ++i) s += (*W)[i] * clarke_dc(prob->objective, x, (*P)[i], v);
        return s;
    };
    return o;
}

namespace {

Vec one(double v) { return Vec::Constant(1, v); }

SmoothConvexPiece affine1(double a, double b) { return SmoothConvexPiece::affine(one(a), b); }

Polytope interval(double lo, double hi) {
    Polytope d;
    d.lo = one(lo);
    d.hi = one(hi);
    return d;
}

RandomSource uniform_source(double a, double b) {
    RandomSource s;
    s.kind = RandomSource::Kind::parametric;
    s.dim = 1;
    RandomComponent c;
    c.dist = RandomComponent::Dist::uniform;
    c.a = a;
    c.b = b;
    s.components = {c};
    return s;
}

}  // namespace

AccProblem ex41_problem(bool relaxed) {
    AccProblem p;
    p.name = relaxed ? "ex41-relaxed" : "ex41-restricted";
    p.n = 1;
    p.domain = interval(-1, 1);
    if (relaxed) {
        p.objective.g = {affine1(0, 2)};
        p.objective.h = {affine1(1, -0.375), affine1(-1, 0.375)};
    } else {
        p.objective.g = {affine1(1, 1)};
        p.objective.h = {affine1(0, 0)};
    }
    DcMaxFunction Z;
    SmoothConvexPiece zp = affine1(0, 0);
    zp.b_z = one(1.0);
    Z.g = {zp};
    Z.h = {affine1(2, 0), affine1(-2, 1)};
    p.functionals = {Z};
    p.rows = {ConstraintRow{{1.0}, relaxed ? 0.125 : 0.25}};
    p.source = uniform_source(-1, 1);
    p.oracle = "ex41";
    return p;
}

AccProblem ex31_problem(double e, double zeta) {
    AccProblem p;
    p.name = "ex31-bernoulli";
    p.n = 1;
    p.domain = interval(-1, 1);
    p.objective.g = {affine1(0, 0)};
    p.objective.h = {affine1(0, 0)};
    DcMaxFunction Z;
    SmoothConvexPiece zp = affine1(0, 0);
    zp.A_z = Mat::Constant(1, 1, 1.0);
    Z.g = {zp};
    Z.h = {affine1(0, 0)};
    p.functionals = {Z};
    p.rows = {ConstraintRow{{e}, zeta}};
    p.source.kind = RandomSource::Kind::table;
    p.source.dim = 1;
    p.source.rows = {{-1.0}, {1.0}};
    p.source.probs = {0.5, 0.5};
    p.oracle = "ex31";
    return p;
}

AccProblem ex61_problem(double a) {
    if (!(a > 2)) throw std::invalid_argument("need a > 2");
    AccProblem p;
    p.name = "ex61-minaffine";
    p.n = 1;
    p.domain = interval(2, a);
    p.objective.g = {affine1(1, 0)};
    p.objective.h = {affine1(0, 0)};
    // min(x z, z + 1) = 0 - max(-x z, -z - 1)
    DcMaxFunction Z;
    Z.g = {affine1(0, 0)};
    SmoothConvexPiece h1 = affine1(0, 0);
    h1.A_z = Mat::Constant(1, 1, -1.0);
    SmoothConvexPiece h2 = affine1(0, -1);
    h2.b_z = one(-1.0);
    Z.h = {h1, h2};
    p.functionals = {Z};
    p.rows = {ConstraintRow{{1.0}, 0.5}};
    p.source = uniform_source(-2, 2);
    p.oracle = "ex61";
    return p;
}

AccProblem penalty_threshold_problem() {
    AccProblem p;
    p.name = "penalty-threshold";
    p.n = 1;
    p.domain = interval(-0.5, 0.5);
    p.objective.g = {affine1(1, 1)};
    p.objective.h = {affine1(0, 0)};
    DcMaxFunction Z;
    SmoothConvexPiece zp = affine1(-2, 0);
    zp.b_z = one(1.0);
    Z.g = {zp};
    Z.h = {affine1(0, 0)};
    p.functionals = {Z};
    p.rows = {ConstraintRow{{1.0}, 0.5}};
    p.source = uniform_source(-1, 1);
    return p;
}

}  // namespace accsp
