#include "accsp/stationarity.hpp"

#include "accsp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace accsp {

std::string to_string(StationarityVerdict::Kind k) {
    switch (k) {
        case StationarityVerdict::Kind::d_stationary:
            return "d-stationary";
        case StationarityVerdict::Kind::B_stationary:
            return "B-stationary";
        case StationarityVerdict::Kind::C_stationary_upper:
            return "C-stationary-upper";
        case StationarityVerdict::Kind::weak_C:
            return "weak-C";
        case StationarityVerdict::Kind::not_stationary:
            return "not-stationary";
        case StationarityVerdict::Kind::indeterminate:
            return "indeterminate";
    }
    return "?";
}

namespace {

Vec sup_normalize(const Vec& v) {
    double m = v.cwiseAbs().maxCoeff();
    return m > 0 ? Vec(v / m) : v;
}

// Euclidean projection of v onto {w : A w <= 0}.
Vec project_cone(const Mat& A, const Vec& v) {
    if (A.rows() == 0) return v;
    QpProblem qp;
    const auto n = v.size();
    qp.H = Mat::Identity(n, n);
    qp.c = -v;
    qp.G = A;
    qp.h = Vec::Zero(A.rows());
    auto r = solve_qp(qp);
    Vec w = r.y;
    // Clean tiny positive violations so membership tests are exact.
    for (int pass = 0; pass < 3; ++pass) {
        Vec viol = A * w;
        if ((viol.array() <= 0).all()) break;
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (viol(i) > 0) w -= viol(i) / A.row(i).squaredNorm() * A.row(i).transpose();
    }
    return w;
}

std::vector<Vec> candidate_directions(const Mat& A, int n, const StationarityOptions& opt, bool& exact) {
    std::vector<Vec> dirs;
    exact = n == 1;
    if (n == 1) {
        dirs.push_back(Vec::Constant(1, 1.0));
        dirs.push_back(Vec::Constant(1, -1.0));
        return dirs;
    }
    for (int i = 0; i < n; ++i) {
        dirs.push_back(Vec::Unit(n, i));
        dirs.push_back(-Vec::Unit(n, i));
    }
    // Rays of a planar cone lie along the boundary lines of the active half-planes.
    if (n == 2) {
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            Vec t(2);
            t << -A(r, 1), A(r, 0);
            dirs.push_back(t);
            dirs.push_back(-t);
        }
    }
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int i = 0; i < opt.direction_budget; ++i) {
        Vec v(n);
        for (int j = 0; j < n; ++j) v(j) = N(rng);
        dirs.push_back(project_cone(A, v));
    }
    return dirs;
}

}  // namespace

StationarityVerdict check_stationarity(const DdFn& objective_dd, const DdFn& objective_clarke,
                                       const std::vector<ConstraintAtPoint>& constraints, const Polytope& domain,
                                       const Vec& x, StationarityMode mode, const StationarityOptions& opt) {
    if (!domain.contains(x, opt.feas_tol)) throw std::invalid_argument("point is outside the domain");
    for (const auto& c : constraints)
        if (c.value > opt.feas_tol) throw std::invalid_argument("point violates a constraint");
    const int n = static_cast<int>(x.size());
    Mat G;
    Vec h;
    domain.as_inequalities(G, h);
    auto act = domain.active_rows(x, opt.active_tol);
    Mat A(static_cast<Eigen::Index>(act.size()), n);
    for (std::size_t i = 0; i < act.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = G.row(act[i]);
    std::vector<const ConstraintAtPoint*> active;
    for (const auto& c : constraints)
        if (c.value >= -opt.active_tol) active.push_back(&c);

    bool exact = false;
    auto dirs = candidate_directions(A, n, opt, exact);
    StationarityVerdict v;
    v.tolerance = opt.dd_tol;
    v.regime = exact ? "exact cone enumeration (n = 1)" : "search-bounded (" + std::to_string(dirs.size()) + " directions)";
    const bool use_clarke = mode == StationarityMode::weak_C;
    double worst = std::numeric_limits<double>::infinity();
    for (auto d : dirs) {
        if (d.cwiseAbs().maxCoeff() <= 1e-14) continue;
        d = sup_normalize(d);
        if (A.rows() > 0 && ((A * d).array() > opt.active_tol).any()) continue;
        if (mode != StationarityMode::d) {
            bool in_cone = true;
            for (const auto* c : active) {
                double cd = use_clarke ? c->clarke(d) : c->dd(d);
                if (cd > opt.dd_tol) {
                    in_cone = false;
                    break;
                }
            }
            if (!in_cone) continue;
        }
        double od = use_clarke ? objective_clarke(d) : objective_dd(d);
        if (od < worst) {
            worst = od;
            v.witness = d;
            v.witness_dd = od;
        }
    }
    if (worst < -opt.dd_tol) {
        v.kind = StationarityVerdict::Kind::not_stationary;
        v.note = "descent direction found in the tested cone";
        return v;
    }
    switch (mode) {
        case StationarityMode::d:
            v.kind = StationarityVerdict::Kind::d_stationary;
            break;
        case StationarityMode::B:
            v.kind = StationarityVerdict::Kind::B_stationary;
            break;
        case StationarityMode::weak_C:
            v.kind = StationarityVerdict::Kind::weak_C;
            v.note = "conservative: Clarke upper bounds of sample dds";
            break;
    }
    if (!exact) v.note += (v.note.empty() ? "" : "; ") + std::string("no violating direction found");
    if (v.witness.size() == 0) v.witness = Vec::Zero(n);
    return v;
}

EmpiricalRows::EmpiricalRows(const AccProblem& p, std::span<const double> samples, double gamma,
                             const ThetaPair& theta, Variant variant)
    : p_(p), samples_(samples), gamma_(gamma), theta_(theta), variant_(variant) {
    N_ = samples.size() / static_cast<std::size_t>(p.source.dim);
    if (N_ == 0) throw std::invalid_argument("empirical rows need at least one sample");
}

int EmpiricalRows::rows() const { return p_.K(); }
double EmpiricalRows::zeta(int k) const { return p_.rows.at(static_cast<std::size_t>(k)).zeta; }

namespace {

template <class F>
double sample_mean(std::size_t N, int d, std::span<const double> samples, F&& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += f(samples.subspan(i * d, d));
    return s / static_cast<double>(N);
}

}  // namespace

double EmpiricalRows::value(int k, const Vec& x) const {
    return sample_mean(N_, p_.source.dim, samples_,
                       [&](Realization z) { return c_row(p_, k, x, z, gamma_, theta_, variant_); });
}

double EmpiricalRows::dd(int k, const Vec& x, const Vec& v) const {
    return sample_mean(N_, p_.source.dim, samples_,
                       [&](Realization z) { return c_row_dd(p_, k, x, z, gamma_, theta_, variant_, v); });
}

double EmpiricalRows::clarke(int k, const Vec& x, const Vec& v) const {
    return sample_mean(N_, p_.source.dim, samples_,
                       [&](Realization z) { return c_row_clarke(p_, k, x, z, gamma_, theta_, variant_, v); });
}

double DcRows::value(int k, const Vec& x) const { return dc_value(f_.at(static_cast<std::size_t>(k)), x, {}); }
double DcRows::dd(int k, const Vec& x, const Vec& v) const {
    return dir_deriv_dc(f_.at(static_cast<std::size_t>(k)), x, {}, v);
}
double DcRows::clarke(int k, const Vec& x, const Vec& v) const {
    return clarke_dc(f_.at(static_cast<std::size_t>(k)), x, {}, v);
}

double penalty_residual(const RowSystem& rows, const Vec& x) {
    double r = 0.0;
    for (int k = 0; k < rows.rows(); ++k) r += std::max(rows.value(k, x) - rows.zeta(k), 0.0);
    return r;
}

ResidualDd residual_dd(const RowSystem& rows, const Vec& x, const Vec& v, double active_tol) {
    ResidualDd out;
    for (int k = 0; k < rows.rows(); ++k) {
        double gap = rows.value(k, x) - rows.zeta(k);
        if (gap < -active_tol) continue;
        double d = rows.dd(k, x, v), c = rows.clarke(k, x, v);
        if (gap > active_tol) {
            out.exact += d;
            out.clarke_upper += c;
        } else {
            out.exact += std::max(d, 0.0);
            out.clarke_upper += std::max(c, 0.0);
        }
    }
    return out;
}

ConvexLikeReport convexlike_localmin_test(const std::function<double(const Vec&)>& f,
                                          const std::function<double(const Vec&, const Vec&)>& f_dd, const Vec& xbar,
                                          const std::vector<double>& radii, bool b_stationary, bool structural,
                                          int probes_per_radius, double tol) {
    ConvexLikeReport rep;
    rep.radii = radii;
    rep.structural = structural;
    const double f0 = f(xbar);
    const auto n = xbar.size();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    bool all = true;
    for (double r : radii) {
        bool ok = true;
        for (int i = 0; i < probes_per_radius; ++i) {
            Vec d(n);
            double len = 0.0;
            if (n == 1) {
                int half = std::max(1, probes_per_radius / 2);
                d(0) = (i % 2 == 0) ? 1.0 : -1.0;
                len = r * double(i / 2 + 1) / half;
                len = std::min(len, r);
            } else {
                for (Eigen::Index j = 0; j < n; ++j) d(j) = N(rng);
                d.normalize();
                len = r * U(rng);
            }
            Vec step = len * d;
            double gap = f(xbar + step) - f0 - f_dd(xbar, step);
            rep.worst_gap = std::min(rep.worst_gap, gap);
            if (gap < -tol) ok = false;
        }
        rep.holds.push_back(ok);
        all = all && ok;
    }
    rep.certified = b_stationary && (all || structural);
    rep.label = rep.certified ? "certified-local-min (convex-like route)" : "not certified";
    return rep;
}

bool rows_structurally_convexlike(const AccProblem& p) {
    for (const auto& f : p.functionals) {
        for (const auto& q : f.g)
            if (!q.is_affine()) return false;
        for (const auto& q : f.h)
            if (!q.is_affine()) return false;
    }
    return true;
}

}  // namespace accsp
