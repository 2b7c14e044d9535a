#include "accsp/approx.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace accsp {

namespace {

constexpr double kSlopeTie = 1e-12;

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number in theta spec: '" + item + "'");
        }
        if (pos != item.size()) throw std::invalid_argument("bad number in theta spec: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

void check_nan(double t) {
    if (std::isnan(t)) throw std::domain_error("NaN argument to Heaviside approximation");
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
}

}  // namespace

std::vector<double> ScalarTheta::slopes() const {
    std::vector<double> m;
    for (std::size_t i = 0; i + 1 < bx.size(); ++i) m.push_back((by[i + 1] - by[i]) / (bx[i + 1] - bx[i]));
    return m;
}

double ScalarTheta::value(double s) const {
    switch (kind) {
        case Kind::identity:
            return s;
        case Kind::piecewise_affine: {
            auto m = slopes();
            double v = convex ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m.size(); ++i) {
                double piece = by[i] + m[i] * (s - bx[i]);
                v = convex ? std::max(v, piece) : std::min(v, piece);
            }
            return v;
        }
        case Kind::smooth_power:
            return s <= 0.0 ? 0.0 : std::pow(s, p);
        case Kind::smooth_root:
            return s >= 1.0 ? 1.0 : 1.0 - std::pow(1.0 - s, p);
    }
    return s;
}

double ScalarTheta::right_slope(double s) const {
    switch (kind) {
        case Kind::identity:
            return 1.0;
        case Kind::piecewise_affine: {
            auto m = slopes();
            double v = value(s);
            double best = convex ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m.size(); ++i) {
                double piece = by[i] + m[i] * (s - bx[i]);
                if (std::abs(piece - v) > kSlopeTie * (1.0 + std::abs(v))) continue;
                best = convex ? std::max(best, m[i]) : std::min(best, m[i]);
            }
            return best;
        }
        case Kind::smooth_power:
            if (s < 0.0) return 0.0;
            if (s == 0.0) return p == 1.0 ? 1.0 : 0.0;
            return p * std::pow(s, p - 1.0);
        case Kind::smooth_root:
            if (s >= 1.0) return 0.0;
            return p * std::pow(1.0 - s, p - 1.0);
    }
    return 1.0;
}

double ScalarTheta::left_slope(double s) const {
    switch (kind) {
        case Kind::identity:
            return 1.0;
        case Kind::piecewise_affine: {
            auto m = slopes();
            double v = value(s);
            double best = convex ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m.size(); ++i) {
                double piece = by[i] + m[i] * (s - bx[i]);
                if (std::abs(piece - v) > kSlopeTie * (1.0 + std::abs(v))) continue;
                best = convex ? std::min(best, m[i]) : std::max(best, m[i]);
            }
            return best;
        }
        case Kind::smooth_power:
            if (s <= 0.0) return 0.0;
            return p * std::pow(s, p - 1.0);
        case Kind::smooth_root:
            if (s > 1.0) return 0.0;
            if (s == 1.0) return p == 1.0 ? 1.0 : 0.0;
            return p * std::pow(1.0 - s, p - 1.0);
    }
    return 1.0;
}

double ScalarTheta::lipschitz() const {
    switch (kind) {
        case Kind::identity:
            return 1.0;
        case Kind::piecewise_affine: {
            double l = 0.0;
            for (double m : slopes()) l = std::max(l, std::abs(m));
            return l;
        }
        case Kind::smooth_power:
        case Kind::smooth_root:
            return p;
    }
    return 1.0;
}

bool ScalarTheta::differentiable() const {
    return kind != Kind::piecewise_affine || bx.size() == 2;
}

bool ScalarTheta::piecewise_affine() const { return kind == Kind::identity || kind == Kind::piecewise_affine; }

std::string ScalarTheta::describe() const {
    std::ostringstream os;
    os << std::setprecision(17);
    switch (kind) {
        case Kind::identity:
            return "identity";
        case Kind::piecewise_affine:
            os << (convex ? "pa-convex(" : "pa-concave(") << join(bx) << ":" << join(by) << ")";
            return os.str();
        case Kind::smooth_power:
            os << "power(" << p << ")";
            return os.str();
        case Kind::smooth_root:
            os << "root(" << p << ")";
            return os.str();
    }
    return "?";
}

ThetaPair ThetaPair::identity() {
    ThetaPair t;
    t.cvx.kind = ScalarTheta::Kind::identity;
    t.cve.kind = ScalarTheta::Kind::identity;
    t.cve.convex = false;
    t.lip_theta = 1.0;
    return t;
}

ThetaPair ThetaPair::piecewise(std::vector<double> bx, std::vector<double> cvx_y, std::vector<double> cve_y) {
    ThetaPair t;
    t.cvx.kind = ScalarTheta::Kind::piecewise_affine;
    t.cvx.convex = true;
    t.cvx.bx = bx;
    t.cvx.by = std::move(cvx_y);
    t.cve.kind = ScalarTheta::Kind::piecewise_affine;
    t.cve.convex = false;
    t.cve.bx = std::move(bx);
    t.cve.by = std::move(cve_y);
    t.validate();
    t.lip_theta = std::max(t.cvx.lipschitz(), t.cve.lipschitz());
    return t;
}

ThetaPair ThetaPair::smooth(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("smooth theta needs p >= 1");
    ThetaPair t;
    t.cvx.kind = ScalarTheta::Kind::smooth_power;
    t.cvx.p = p;
    t.cve.kind = ScalarTheta::Kind::smooth_root;
    t.cve.convex = false;
    t.cve.p = p;
    t.lip_theta = p;
    return t;
}

void ThetaPair::validate() const {
    auto check_one = [](const ScalarTheta& th, bool want_convex, const char* label) {
        if (th.convex != want_convex) throw std::invalid_argument(std::string(label) + ": wrong curvature flag");
        if (th.kind == ScalarTheta::Kind::piecewise_affine) {
            if (th.bx.size() < 2 || th.bx.size() != th.by.size())
                throw std::invalid_argument(std::string(label) + ": piecewise theta needs matching breakpoints");
            if (th.bx.front() != 0.0 || th.bx.back() != 1.0)
                throw std::invalid_argument(std::string(label) + ": breakpoints must start at 0 and end at 1");
            for (std::size_t i = 0; i + 1 < th.bx.size(); ++i)
                if (!(th.bx[i] < th.bx[i + 1]))
                    throw std::invalid_argument(std::string(label) + ": breakpoints must increase");
        }
        if ((th.kind == ScalarTheta::Kind::smooth_power || th.kind == ScalarTheta::Kind::smooth_root) && th.p < 1.0)
            throw std::invalid_argument(std::string(label) + ": exponent must be at least 1");
        if (std::abs(th.value(0.0)) > 1e-12 || std::abs(th.value(1.0) - 1.0) > 1e-12)
            throw std::invalid_argument(std::string(label) + ": theta(0) = 0 and theta(1) = 1 are required");
        constexpr int kGrid = 1000;
        double prev_slope = want_convex ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity();
        for (int i = 0; i < kGrid; ++i) {
            double s0 = double(i) / kGrid, s1 = double(i + 1) / kGrid;
            double sl = (th.value(s1) - th.value(s0)) * kGrid;
            if (!(sl > 0.0)) throw std::invalid_argument(std::string(label) + ": theta must increase on [0,1]");
            if (want_convex ? sl < prev_slope - 1e-9 : sl > prev_slope + 1e-9)
                throw std::invalid_argument(std::string(label) + (want_convex ? ": theta_cvx is not convex"
                                                                               : ": theta_cve is not concave"));
            prev_slope = sl;
        }
    };
    check_one(cvx, true, "theta_cvx");
    check_one(cve, false, "theta_cve");
}

ThetaPair parse_theta(const std::string& spec) {
    if (spec == "identity") return ThetaPair::identity();
    if (spec.rfind("smooth:", 0) == 0) {
        auto v = parse_list(spec.substr(7));
        if (v.size() != 1) throw std::invalid_argument("smooth theta takes one exponent");
        auto t = ThetaPair::smooth(v[0]);
        t.validate();
        return t;
    }
    if (spec.rfind("pa:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(spec.substr(3));
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw std::invalid_argument("pa theta needs breakpoints:cvx values:cve values");
        return ThetaPair::piecewise(parse_list(parts[0]), parse_list(parts[1]), parse_list(parts[2]));
    }
    throw std::invalid_argument("unknown theta spec '" + spec + "'");
}

std::string format_theta(const ThetaPair& t) {
    if (t.cvx.kind == ScalarTheta::Kind::identity && t.cve.kind == ScalarTheta::Kind::identity) return "identity";
    if (t.cvx.kind == ScalarTheta::Kind::smooth_power) {
        std::ostringstream os;
        os << std::setprecision(17) << "smooth:" << t.cvx.p;
        return os.str();
    }
    return "pa:" + join(t.cvx.bx) + ":" + join(t.cvx.by) + ":" + join(t.cve.by);
}

double phi_ub(double t, double gamma, const ThetaPair& theta) {
    check_nan(t);
    check_gamma(gamma);
    if (gamma == 0.0) return heaviside_closed(t);
    double s = 1.0 + t / gamma;
    if (s >= 1.0) return 1.0;
    if (s <= 0.0) return 0.0;
    return std::clamp(theta.cvx.value(s), 0.0, 1.0);
}

double phi_lb(double t, double gamma, const ThetaPair& theta) {
    check_nan(t);
    check_gamma(gamma);
    if (gamma == 0.0) return heaviside_open(t);
    double s = t / gamma;
    if (s >= 1.0) return 1.0;
    if (s <= 0.0) return 0.0;
    return std::clamp(theta.cve.value(s), 0.0, 1.0);
}

Slopes phi_ub_slopes(double t, double gamma, const ThetaPair& theta) {
    check_nan(t);
    check_gamma(gamma);
    if (gamma == 0.0) return {};
    double s = 1.0 + t / gamma;
    Slopes r;
    if (s > 1.0 || s < 0.0) return r;
    if (s < 1.0) r.right = theta.cvx.right_slope(s) / gamma;
    if (s > 0.0) r.left = theta.cvx.left_slope(s) / gamma;
    return r;
}

Slopes phi_lb_slopes(double t, double gamma, const ThetaPair& theta) {
    check_nan(t);
    check_gamma(gamma);
    if (gamma == 0.0) return {};
    double s = t / gamma;
    Slopes r;
    if (s > 1.0 || s < 0.0) return r;
    if (s < 1.0) r.right = theta.cve.right_slope(s) / gamma;
    if (s > 0.0) r.left = theta.cve.left_slope(s) / gamma;
    return r;
}

namespace {

void check_row(const AccProblem& p, int k) {
    if (k < 0 || k >= p.K()) throw std::out_of_range("constraint row index out of range");
}

double chain(const Slopes& sl, double dz) {
    if (dz > 0) return dz * sl.right;
    if (dz < 0) return dz * sl.left;
    return 0.0;
}

double clarke_chain(const Slopes& sl, double zc) {
    double hi = std::max(sl.left, sl.right), lo = std::min(sl.left, sl.right);
    return zc >= 0 ? hi * zc : lo * zc;
}

}  // namespace

double c_row_rst(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta) {
    check_row(p, k);
    const auto& row = p.rows[k];
    double v = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] == 0.0) continue;
        double t = dc_value(p.functionals[l], x, z);
        v += row.e_plus(l) * phi_ub(t, gamma, theta) - row.e_minus(l) * phi_lb(t, gamma, theta);
    }
    return v;
}

double c_row_rlx(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta) {
    check_row(p, k);
    const auto& row = p.rows[k];
    double v = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] == 0.0) continue;
        double t = dc_value(p.functionals[l], x, z);
        v += row.e_plus(l) * phi_lb(t, gamma, theta) - row.e_minus(l) * phi_ub(t, gamma, theta);
    }
    return v;
}

double c_row(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
             Variant variant) {
    return variant == Variant::rst ? c_row_rst(p, k, x, z, gamma, theta) : c_row_rlx(p, k, x, z, gamma, theta);
}

double c_row_dd(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
                Variant variant, const Vec& v) {
    check_row(p, k);
    const auto& row = p.rows[k];
    double d = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] == 0.0) continue;
        const auto& f = p.functionals[l];
        double t = dc_value(f, x, z);
        double dz = dir_deriv_dc(f, x, z, v);
        Slopes plus = variant == Variant::rst ? phi_ub_slopes(t, gamma, theta) : phi_lb_slopes(t, gamma, theta);
        Slopes minus = variant == Variant::rst ? phi_lb_slopes(t, gamma, theta) : phi_ub_slopes(t, gamma, theta);
        d += row.e_plus(l) * chain(plus, dz) - row.e_minus(l) * chain(minus, dz);
    }
    return d;
}

double c_row_clarke(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
                    Variant variant, const Vec& v) {
    check_row(p, k);
    const auto& row = p.rows[k];
    double d = 0.0;
    Vec mv = -v;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] == 0.0) continue;
        const auto& f = p.functionals[l];
        double t = dc_value(f, x, z);
        Slopes plus = variant == Variant::rst ? phi_ub_slopes(t, gamma, theta) : phi_lb_slopes(t, gamma, theta);
        Slopes minus = variant == Variant::rst ? phi_lb_slopes(t, gamma, theta) : phi_ub_slopes(t, gamma, theta);
        if (row.e_plus(l) > 0) d += row.e_plus(l) * clarke_chain(plus, clarke_dc(f, x, z, v));
        if (row.e_minus(l) > 0) d += row.e_minus(l) * clarke_chain(minus, clarke_dc(f, x, z, mv));
    }
    return d;
}

double c_row_indicator(const AccProblem& p, int k, const Vec& x, Realization z) {
    check_row(p, k);
    const auto& row = p.rows[k];
    double v = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] == 0.0) continue;
        v += row.e[l] * heaviside_closed(dc_value(p.functionals[l], x, z));
    }
    return v;
}

double h_Z(const std::vector<double>& values, double gamma, Side side) {
    if (!(gamma > 0.0)) throw std::invalid_argument("h_Z needs gamma > 0");
    if (values.empty()) throw std::invalid_argument("h_Z needs a nonempty sample");
    // Each sample v contributes the length of {t in window : v <= t}.
    double acc = 0.0;
    for (double v : values) {
        if (side == Side::lb) acc += gamma - std::clamp(v, 0.0, gamma);
        else acc += -std::clamp(v, -gamma, 0.0);
    }
    return acc / (gamma * static_cast<double>(values.size()));
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15 * tol) return left + right + diff / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        std::vector<double> breakpoints) {
    if (!(a <= b)) throw std::invalid_argument("integration bounds out of order");
    if (a == b) return 0.0;
    std::vector<double> pts{a};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double t : breakpoints)
        if (t > a && t < b && t > pts.back()) pts.push_back(t);
    pts.push_back(b);
    double total = 0.0;
    double seg_tol = tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double lo = pts[i], hi = pts[i + 1];
        // Sample strictly inside the segment so one-sided limits are used at breakpoints.
        double eps = (hi - lo) * 1e-15;
        auto g = [&](double t) { return f(std::clamp(t, lo + eps, hi - eps)); };
        double fa = g(lo), fb = g(hi), fm = g(0.5 * (lo + hi));
        double whole = (hi - lo) / 6.0 * (fa + 4 * fm + fb);
        total += simpson_rec(g, lo, hi, fa, fm, fb, whole, seg_tol, 40);
    }
    return total;
}

DistributionOracle DistributionOracle::uniform(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("uniform oracle needs a < b");
    DistributionOracle d;
    d.kind = Kind::uniform;
    d.a = a;
    d.b = b;
    return d;
}

DistributionOracle DistributionOracle::bernoulli(double p, double v0, double v1) {
    return table({v0, v1}, {1.0 - p, p});
}

DistributionOracle DistributionOracle::table(std::vector<double> values, std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size()) throw std::invalid_argument("table oracle shape mismatch");
    DistributionOracle d;
    d.kind = Kind::discrete;
    d.values = std::move(values);
    d.probs = std::move(probs);
    return d;
}

double DistributionOracle::cdf(double t) const {
    if (kind == Kind::uniform) return std::clamp((t - a) / (b - a), 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] <= t) s += probs[i];
    return s;
}

double DistributionOracle::integral_cdf(double lo, double hi) const {
    if (kind == Kind::uniform) {
        auto G = [&](double t) {
            if (t <= a) return 0.0;
            if (t >= b) return 0.5 * (b - a) + (t - b);
            return (t - a) * (t - a) / (2.0 * (b - a));
        };
        return G(hi) - G(lo);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += probs[i] * std::max(0.0, hi - std::max(values[i], lo));
    return s;
}

double DistributionOracle::expect(const std::function<double(double)>& f,
                                  const std::vector<double>& breakpoints) const {
    if (kind == Kind::uniform) return adaptive_simpson(f, a, b, 1e-12, breakpoints) / (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += probs[i] * f(values[i]);
    return s;
}

double DistributionOracle::point_mass(double t) const {
    if (kind == Kind::uniform) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == t) s += probs[i];
    return s;
}

double DistributionOracle::h(double gamma, Side side) const {
    if (!(gamma > 0.0)) throw std::invalid_argument("h needs gamma > 0");
    return side == Side::lb ? integral_cdf(0.0, gamma) / gamma : integral_cdf(-gamma, 0.0) / gamma;
}

GammaShiftReport check_gamma_shift_bound(const DistributionOracle& dist, double gamma1, double gamma2,
                                         const ThetaPair& theta, double tol) {
    if (!(gamma2 > 0.0) || gamma1 < gamma2) throw std::invalid_argument("need gamma1 >= gamma2 > 0");
    std::vector<double> bp{0.0};
    for (double g : {gamma1, gamma2}) {
        bp.push_back(-g);
        bp.push_back(g);
        for (double s : theta.cvx.bx) bp.push_back(g * (s - 1.0));
        for (double s : theta.cve.bx) bp.push_back(g * s);
    }
    GammaShiftReport r;
    r.lhs_ub = dist.expect([&](double t) { return phi_ub(t, gamma1, theta) - phi_ub(t, gamma2, theta); }, bp);
    r.rhs_ub = theta.lip_theta * (dist.h(gamma2, Side::ub) - dist.h(gamma1, Side::ub));
    r.lhs_lb = dist.expect([&](double t) { return phi_lb(t, gamma2, theta) - phi_lb(t, gamma1, theta); }, bp);
    r.rhs_lb = theta.lip_theta * (dist.h(gamma1, Side::lb) - dist.h(gamma2, Side::lb));
    r.holds = r.lhs_ub >= -tol && r.lhs_ub <= r.rhs_ub + tol && r.lhs_lb >= -tol && r.lhs_lb <= r.rhs_lb + tol;
    return r;
}

}  // namespace accsp
