#include "accsp/model.hpp"

#include "accsp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace accsp {

namespace {

bool same_matrix(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool same_vector(const Vec& a, const Vec& b) { return a.size() == b.size() && (a.size() == 0 || a == b); }

Mat add_optional(const Mat& a, const Mat& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("piece sum: shape mismatch");
    return a + b;
}

Vec add_optional(const Vec& a, const Vec& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.size() != b.size()) throw std::invalid_argument("piece sum: shape mismatch");
    return a + b;
}

void check_dim(const DcMaxFunction& f, const Vec& x) {
    if (f.g.empty() || f.h.empty()) throw std::invalid_argument("dc function needs at least one g and one h piece");
    if (x.size() != f.dim()) throw std::invalid_argument("dimension mismatch in dc evaluation");
}

}  // namespace

SmoothConvexPiece SmoothConvexPiece::affine(Vec a, double b) {
    SmoothConvexPiece p;
    p.a = std::move(a);
    p.b = b;
    return p;
}

SmoothConvexPiece SmoothConvexPiece::constant(int n, double b) { return affine(Vec::Zero(n), b); }

bool SmoothConvexPiece::depends_on_z() const { return A_z.size() > 0 || b_z.size() > 0 || !tables.empty(); }

Vec SmoothConvexPiece::grad_at(const Vec& /*x*/, Realization z) const {
    Vec g = a;
    if (A_z.size() > 0) {
        if (static_cast<std::size_t>(A_z.cols()) > z.size()) throw std::invalid_argument("realization too short");
        for (Eigen::Index c = 0; c < A_z.cols(); ++c) g += A_z.col(c) * z[c];
    }
    for (const auto& t : tables) {
        if (static_cast<std::size_t>(t.column) >= z.size()) throw std::invalid_argument("table column out of range");
        auto r = static_cast<long>(std::lround(z[t.column]));
        if (r < 0 || static_cast<std::size_t>(r) >= t.grad.size()) throw std::out_of_range("table row out of range");
        g += t.grad[r];
    }
    return g;
}

double SmoothConvexPiece::offset_at(Realization z) const {
    double o = b;
    if (b_z.size() > 0) {
        if (static_cast<std::size_t>(b_z.size()) > z.size()) throw std::invalid_argument("realization too short");
        for (Eigen::Index c = 0; c < b_z.size(); ++c) o += b_z(c) * z[c];
    }
    for (const auto& t : tables) {
        if (static_cast<std::size_t>(t.column) >= z.size()) throw std::invalid_argument("table column out of range");
        auto r = static_cast<long>(std::lround(z[t.column]));
        if (r < 0 || static_cast<std::size_t>(r) >= t.offset.size()) throw std::out_of_range("table row out of range");
        o += t.offset[r];
    }
    return o;
}

double SmoothConvexPiece::value(const Vec& x, Realization z) const {
    double v = grad_at(x, z).dot(x) + offset_at(z);
    if (!is_affine()) v += 0.5 * x.dot(Q * x);
    return v;
}

Vec SmoothConvexPiece::gradient(const Vec& x, Realization z) const {
    Vec g = grad_at(x, z);
    if (!is_affine()) g += Q * x;
    return g;
}

SmoothConvexPiece SmoothConvexPiece::scaled(double s) const {
    SmoothConvexPiece p = *this;
    p.a *= s;
    p.b *= s;
    if (p.Q.size() > 0) p.Q *= s;
    if (p.A_z.size() > 0) p.A_z *= s;
    if (p.b_z.size() > 0) p.b_z *= s;
    for (auto& t : p.tables) {
        for (auto& g : t.grad) g *= s;
        for (auto& o : t.offset) o *= s;
    }
    return p;
}

SmoothConvexPiece SmoothConvexPiece::plus(const SmoothConvexPiece& o) const {
    if (a.size() != o.a.size()) throw std::invalid_argument("piece sum: dimension mismatch");
    SmoothConvexPiece p;
    p.a = a + o.a;
    p.b = b + o.b;
    p.Q = add_optional(Q, o.Q);
    p.A_z = add_optional(A_z, o.A_z);
    p.b_z = add_optional(b_z, o.b_z);
    p.tables = tables;
    p.tables.insert(p.tables.end(), o.tables.begin(), o.tables.end());
    return p;
}

bool SmoothConvexPiece::operator==(const SmoothConvexPiece& o) const {
    return same_vector(a, o.a) && b == o.b && same_matrix(Q, o.Q) && same_matrix(A_z, o.A_z) &&
           same_vector(b_z, o.b_z) && tables == o.tables;
}

int DcMaxFunction::dim() const {
    if (!g.empty()) return g.front().dim();
    if (!h.empty()) return h.front().dim();
    return 0;
}

bool DcMaxFunction::depends_on_z() const {
    auto dep = [](const SmoothConvexPiece& p) { return p.depends_on_z(); };
    return std::any_of(g.begin(), g.end(), dep) || std::any_of(h.begin(), h.end(), dep);
}

void DcMaxFunction::check() const {
    if (g.empty() || h.empty()) throw std::invalid_argument("dc function needs at least one g and one h piece");
    const int n = dim();
    auto check_piece = [n](const SmoothConvexPiece& p) {
        if (p.dim() != n) throw std::invalid_argument("piece dimension mismatch");
        if (!p.is_affine()) {
            if (p.Q.rows() != n || p.Q.cols() != n) throw std::invalid_argument("quadratic term has wrong shape");
            double scale = 1.0 + p.Q.cwiseAbs().maxCoeff();
            if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw std::invalid_argument("quadratic term is not symmetric");
            Eigen::SelfAdjointEigenSolver<Mat> es(p.Q);
            if (es.eigenvalues().minCoeff() < -1e-10 * scale)
                throw std::invalid_argument("quadratic term is not positive semidefinite");
        }
        if (p.A_z.size() > 0 && p.A_z.rows() != n) throw std::invalid_argument("z-gradient map has wrong row count");
        for (const auto& t : p.tables) {
            if (t.grad.size() != t.offset.size()) throw std::invalid_argument("table gradient/offset length mismatch");
            for (const auto& v : t.grad)
                if (v.size() != n) throw std::invalid_argument("table gradient dimension mismatch");
        }
    };
    for (const auto& p : g) check_piece(p);
    for (const auto& p : h) check_piece(p);
}

std::vector<int> eps_active(const std::vector<double>& values, double eps) {
    if (values.empty()) return {};
    double m = *std::max_element(values.begin(), values.end());
    double tol = std::max(eps, kTieTol);
    std::vector<int> idx;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= m - tol) idx.push_back(static_cast<int>(i));
    return idx;
}

DcEval eval_dc(const DcMaxFunction& f, const Vec& x, Realization z, double eps) {
    check_dim(f, x);
    std::vector<double> gv(f.g.size()), hv(f.h.size());
    for (std::size_t i = 0; i < f.g.size(); ++i) gv[i] = f.g[i].value(x, z);
    for (std::size_t j = 0; j < f.h.size(); ++j) hv[j] = f.h[j].value(x, z);
    DcEval r;
    r.gmax = *std::max_element(gv.begin(), gv.end());
    r.hmax = *std::max_element(hv.begin(), hv.end());
    r.value = r.gmax - r.hmax;
    r.argmax_g = eps_active(gv, eps);
    r.argmax_h = eps_active(hv, eps);
    return r;
}

double dc_value(const DcMaxFunction& f, const Vec& x, Realization z) {
    check_dim(f, x);
    double gm = -std::numeric_limits<double>::infinity(), hm = gm;
    for (const auto& p : f.g) gm = std::max(gm, p.value(x, z));
    for (const auto& p : f.h) hm = std::max(hm, p.value(x, z));
    return gm - hm;
}

namespace {

double max_active_slope(const std::vector<SmoothConvexPiece>& pieces, const std::vector<int>& act, const Vec& x,
                        Realization z, const Vec& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (int i : act) m = std::max(m, pieces[i].gradient(x, z).dot(v));
    return m;
}

}  // namespace

double dir_deriv_dc(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& v) {
    auto e = eval_dc(f, x, z);
    if (v.size() != x.size()) throw std::invalid_argument("direction dimension mismatch");
    return max_active_slope(f.g, e.argmax_g, x, z, v) - max_active_slope(f.h, e.argmax_h, x, z, v);
}

double clarke_dc(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& v) {
    auto e = eval_dc(f, x, z);
    if (v.size() != x.size()) throw std::invalid_argument("direction dimension mismatch");
    Vec mv = -v;
    return max_active_slope(f.g, e.argmax_g, x, z, v) + max_active_slope(f.h, e.argmax_h, x, z, mv);
}

double PiecewiseAffine::value(const Vec& y) const {
    double am = -std::numeric_limits<double>::infinity(), bm = am;
    for (std::size_t i = 0; i < a.size(); ++i) am = std::max(am, a[i].dot(y) + alpha[i]);
    for (std::size_t j = 0; j < b.size(); ++j) bm = std::max(bm, b[j].dot(y) + beta[j]);
    return am - bm;
}

namespace {

using PieceMax = std::vector<SmoothConvexPiece>;  // pointwise maximum of its members

void push_unique(PieceMax& out, SmoothConvexPiece p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
}

PieceMax cross_sum(const PieceMax& u, const PieceMax& v, std::size_t cap) {
    if (u.size() * v.size() > cap) throw std::length_error("dc composition exceeds the piece cap");
    PieceMax out;
    for (const auto& p : u)
        for (const auto& q : v) push_unique(out, p.plus(q));
    return out;
}

PieceMax scale_max(const PieceMax& u, double s) {
    PieceMax out;
    for (const auto& p : u) push_unique(out, p.scaled(s));
    return out;
}

PieceMax add_constant(const PieceMax& u, double c) {
    PieceMax out;
    for (const auto& p : u) {
        auto q = p;
        q.b += c;
        push_unique(out, std::move(q));
    }
    return out;
}

// Sum_k w_k * M_k for nonnegative weights, as a single pointwise maximum.
PieceMax weighted_sum(const std::vector<double>& w, const std::vector<const PieceMax*>& terms, int n,
                      std::size_t cap) {
    PieceMax acc{SmoothConvexPiece::constant(n, 0.0)};
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (w[k] == 0.0) continue;
        acc = cross_sum(acc, scale_max(*terms[k], w[k]), cap);
    }
    return acc;
}

}  // namespace

DcMaxFunction dc_compose(const PiecewiseAffine& phi, const std::vector<DcMaxFunction>& inner, std::size_t piece_cap) {
    if (inner.empty()) throw std::invalid_argument("dc_compose needs at least one inner function");
    if (phi.a.empty() || phi.b.empty()) throw std::invalid_argument("piecewise affine outer needs both maxima");
    if (phi.alpha.size() != phi.a.size() || phi.beta.size() != phi.b.size())
        throw std::invalid_argument("piecewise affine offsets do not match slopes");
    const std::size_t m = inner.size();
    const int n = inner.front().dim();
    for (const auto& f : inner) {
        f.check();
        if (f.dim() != n) throw std::invalid_argument("inner functions must share dimension");
    }
    for (const auto& v : phi.a)
        if (static_cast<std::size_t>(v.size()) != m) throw std::invalid_argument("outer slope has wrong length");
    for (const auto& v : phi.b)
        if (static_cast<std::size_t>(v.size()) != m) throw std::invalid_argument("outer slope has wrong length");

    // Each affine form c'y splits into P - Q with P = sum c+ G + c- H and Q = sum c+ H + c- G.
    std::vector<const PieceMax*> GH;
    for (const auto& f : inner) GH.push_back(&f.g);
    for (const auto& f : inner) GH.push_back(&f.h);
    auto split = [&](const Vec& c, PieceMax& P, PieceMax& Q) {
        std::vector<double> wp(2 * m), wq(2 * m);
        for (std::size_t k = 0; k < m; ++k) {
            double cp = std::max(c(k), 0.0), cm = std::max(-c(k), 0.0);
            wp[k] = cp;
            wp[m + k] = cm;
            wq[k] = cm;
            wq[m + k] = cp;
        }
        P = weighted_sum(wp, GH, n, piece_cap);
        Q = weighted_sum(wq, GH, n, piece_cap);
    };
    // max_i (P_i - Q_i + alpha_i) = max_i (P_i + alpha_i + sum_{i' != i} Q_i') - sum_i Q_i
    auto reduce = [&](const std::vector<Vec>& slopes, const std::vector<double>& offs, PieceMax& top,
                      PieceMax& qsum) {
        std::vector<PieceMax> P(slopes.size()), Q(slopes.size());
        for (std::size_t i = 0; i < slopes.size(); ++i) split(slopes[i], P[i], Q[i]);
        top.clear();
        for (std::size_t i = 0; i < slopes.size(); ++i) {
            PieceMax t = add_constant(P[i], offs[i]);
            for (std::size_t o = 0; o < slopes.size(); ++o)
                if (o != i) t = cross_sum(t, Q[o], piece_cap);
            for (auto& p : t) push_unique(top, std::move(p));
            if (top.size() > piece_cap) throw std::length_error("dc composition exceeds the piece cap");
        }
        qsum = PieceMax{SmoothConvexPiece::constant(n, 0.0)};
        for (const auto& q : Q) qsum = cross_sum(qsum, q, piece_cap);
    };
    PieceMax A1, QA, B1, QB;
    reduce(phi.a, phi.alpha, A1, QA);
    reduce(phi.b, phi.beta, B1, QB);
    DcMaxFunction out;
    out.g = cross_sum(A1, QB, piece_cap);
    out.h = cross_sum(B1, QA, piece_cap);
    return out;
}

LogicalEvent LogicalEvent::leaf(DcMaxFunction f) {
    LogicalEvent e;
    e.kind = Kind::leaf;
    e.f = std::move(f);
    return e;
}

LogicalEvent LogicalEvent::interval(DcMaxFunction f, double lo, double hi) {
    LogicalEvent e;
    e.kind = Kind::interval;
    e.f = std::move(f);
    e.lo = lo;
    e.hi = hi;
    return e;
}

LogicalEvent LogicalEvent::all(std::vector<LogicalEvent> c) {
    LogicalEvent e;
    e.kind = Kind::all_of;
    e.children = std::move(c);
    return e;
}

LogicalEvent LogicalEvent::any(std::vector<LogicalEvent> c) {
    LogicalEvent e;
    e.kind = Kind::any_of;
    e.children = std::move(c);
    return e;
}

namespace {

DcMaxFunction shift(const DcMaxFunction& f, double c) {
    DcMaxFunction r = f;
    for (auto& p : r.g) p.b += c;
    return r;
}

DcMaxFunction negate(const DcMaxFunction& f) {
    DcMaxFunction r;
    r.g = f.h;
    r.h = f.g;
    return r;
}

Vec unit(std::size_t m, std::size_t i, double s) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(m));
    v(static_cast<Eigen::Index>(i)) = s;
    return v;
}

DcMaxFunction combine(const std::vector<DcMaxFunction>& parts, bool conjunction) {
    if (parts.size() == 1) return parts.front();
    const std::size_t m = parts.size();
    PiecewiseAffine phi;
    if (conjunction) {  // min_i y_i = 0 - max_i (-y_i)
        phi.a = {Vec::Zero(static_cast<Eigen::Index>(m))};
        phi.alpha = {0.0};
        for (std::size_t i = 0; i < m; ++i) phi.b.push_back(unit(m, i, -1.0));
        phi.beta.assign(m, 0.0);
    } else {
        for (std::size_t i = 0; i < m; ++i) phi.a.push_back(unit(m, i, 1.0));
        phi.alpha.assign(m, 0.0);
        phi.b = {Vec::Zero(static_cast<Eigen::Index>(m))};
        phi.beta = {0.0};
    }
    return dc_compose(phi, parts);
}

}  // namespace

DcMaxFunction build_logical_event(const LogicalEvent& spec) {
    switch (spec.kind) {
        case LogicalEvent::Kind::leaf:
            spec.f.check();
            return spec.f;
        case LogicalEvent::Kind::interval: {
            spec.f.check();
            if (spec.lo > spec.hi) throw std::invalid_argument("interval event with lo > hi");
            return combine({shift(spec.f, -spec.lo), shift(negate(spec.f), spec.hi)}, true);
        }
        case LogicalEvent::Kind::all_of:
        case LogicalEvent::Kind::any_of: {
            if (spec.children.empty()) throw std::invalid_argument("empty logical event");
            std::vector<DcMaxFunction> parts;
            for (const auto& c : spec.children) parts.push_back(build_logical_event(c));
            return combine(parts, spec.kind == LogicalEvent::Kind::all_of);
        }
    }
    throw std::invalid_argument("unknown logical event kind");
}

int Polytope::dim() const {
    if (A.size() > 0) return static_cast<int>(A.cols());
    if (lo.size() > 0) return static_cast<int>(lo.size());
    return static_cast<int>(hi.size());
}

void Polytope::as_inequalities(Mat& G, Vec& h) const {
    const int n = dim();
    std::vector<std::pair<Vec, double>> rows;
    for (Eigen::Index i = 0; i < A.rows(); ++i) rows.emplace_back(A.row(i).transpose(), b(i));
    for (int i = 0; i < hi.size(); ++i)
        if (std::isfinite(hi(i))) rows.emplace_back(Vec::Unit(n, i), hi(i));
    for (int i = 0; i < lo.size(); ++i)
        if (std::isfinite(lo(i))) rows.emplace_back(-Vec::Unit(n, i), -lo(i));
    G.resize(static_cast<Eigen::Index>(rows.size()), n);
    h.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        G.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        h(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
}

bool Polytope::contains(const Vec& x, double tol) const {
    if (x.size() != dim()) throw std::invalid_argument("dimension mismatch in polytope membership");
    Mat G;
    Vec h;
    as_inequalities(G, h);
    if (G.rows() == 0) return true;
    return ((G * x - h).array() <= tol).all();
}

std::vector<int> Polytope::active_rows(const Vec& x, double tol) const {
    Mat G;
    Vec h;
    as_inequalities(G, h);
    std::vector<int> act;
    for (Eigen::Index r = 0; r < G.rows(); ++r)
        if (std::abs(G.row(r).dot(x) - h(r)) <= tol) act.push_back(static_cast<int>(r));
    return act;
}

Bounds polytope_bounds(const Polytope& p) {
    const int n = p.dim();
    if (n <= 0) throw std::invalid_argument("polytope has no dimension");
    if (p.A.size() > 0 && p.b.size() != p.A.rows()) throw std::invalid_argument("polytope rows and rhs mismatch");
    if ((p.lo.size() > 0 && p.lo.size() != n) || (p.hi.size() > 0 && p.hi.size() != n))
        throw std::invalid_argument("polytope box has wrong length");
    const bool pure_box = p.A.rows() == 0 && p.lo.size() == n && p.hi.size() == n;
    if (pure_box) {
        if ((p.lo.array() > p.hi.array()).any()) throw std::invalid_argument("polytope is empty");
        if (!p.lo.allFinite() || !p.hi.allFinite()) throw std::invalid_argument("polytope is unbounded");
        return {p.lo, p.hi};
    }
    constexpr double kBox = 1e6;
    Mat G0;
    Vec h0;
    p.as_inequalities(G0, h0);
    const Eigen::Index m = G0.rows();

    // Phase one: minimize t subject to G x - t <= h, |x| <= box, t >= -1.
    QpProblem feas;
    feas.H = Mat::Zero(n + 1, n + 1);
    feas.c = Vec::Zero(n + 1);
    feas.c(n) = 1.0;
    feas.G = Mat::Zero(m + 2 * n + 1, n + 1);
    feas.h = Vec::Zero(m + 2 * n + 1);
    feas.G.topLeftCorner(m, n) = G0;
    feas.G.block(0, n, m, 1).setConstant(-1.0);
    feas.h.head(m) = h0;
    for (int i = 0; i < n; ++i) {
        feas.G(m + i, i) = 1.0;
        feas.h(m + i) = kBox;
        feas.G(m + n + i, i) = -1.0;
        feas.h(m + n + i) = kBox;
    }
    feas.G(m + 2 * n, n) = -1.0;
    feas.h(m + 2 * n) = 1.0;
    auto fr = solve_qp(feas);
    if (!fr.converged || fr.y(n) > 1e-7) throw std::invalid_argument("polytope is empty");

    Bounds out;
    out.lower.resize(n);
    out.upper.resize(n);
    QpProblem lp;
    lp.H = Mat::Zero(n, n);
    lp.G = Mat(m + 2 * n, n);
    lp.h = Vec(m + 2 * n);
    lp.G.topRows(m) = G0;
    lp.h.head(m) = h0;
    lp.G.bottomRows(2 * n).setZero();
    for (int i = 0; i < n; ++i) {
        lp.G(m + i, i) = 1.0;
        lp.h(m + i) = kBox;
        lp.G(m + n + i, i) = -1.0;
        lp.h(m + n + i) = kBox;
    }
    for (int i = 0; i < n; ++i) {
        for (double sgn : {1.0, -1.0}) {
            lp.c = Vec::Zero(n);
            lp.c(i) = sgn;
            auto r = solve_qp(lp);
            if (!r.converged) throw std::invalid_argument("polytope bound LP failed");
            double val = r.y(i);
            if (std::abs(val) >= 0.5 * kBox) throw std::invalid_argument("polytope is unbounded");
            // Snap to a box face the LP solution reached up to solver accuracy.
            if (sgn > 0 && p.lo.size() == n && std::abs(val - p.lo(i)) <= 1e-7) val = p.lo(i);
            if (sgn < 0 && p.hi.size() == n && std::abs(val - p.hi(i)) <= 1e-7) val = p.hi(i);
            (sgn > 0 ? out.lower(i) : out.upper(i)) = val;
        }
    }
    return out;
}

void AccProblem::check() const {
    if (n <= 0) throw std::invalid_argument("problem dimension must be positive");
    if (domain.dim() != n) throw std::invalid_argument("domain dimension does not match problem dimension");
    polytope_bounds(domain);
    objective.check();
    if (objective.dim() != n) throw std::invalid_argument("objective dimension mismatch");
    for (const auto& f : functionals) {
        f.check();
        if (f.dim() != n) throw std::invalid_argument("functional dimension mismatch");
    }
    for (const auto& r : rows)
        if (r.e.size() != functionals.size()) throw std::invalid_argument("row coefficient count must equal L");
    if (source.kind == RandomSource::Kind::table) {
        if (source.rows.empty() || source.rows.size() != source.probs.size())
            throw std::invalid_argument("table source needs one probability per support point");
        double s = 0.0;
        for (double q : source.probs) {
            if (q < 0) throw std::invalid_argument("negative probability in table source");
            s += q;
        }
        if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("table probabilities must sum to one");
        for (const auto& r : source.rows)
            if (static_cast<int>(r.size()) != source.dim) throw std::invalid_argument("table row has wrong length");
    } else if (source.kind == RandomSource::Kind::parametric) {
        if (static_cast<int>(source.components.size()) != source.dim)
            throw std::invalid_argument("parametric source needs one component per coordinate");
        for (const auto& c : source.components) {
            if (c.dist == RandomComponent::Dist::uniform && !(c.a < c.b))
                throw std::invalid_argument("uniform component needs a < b");
            if (c.dist == RandomComponent::Dist::bernoulli && !(c.p >= 0 && c.p <= 1))
                throw std::invalid_argument("bernoulli component needs p in [0,1]");
            if (c.dist == RandomComponent::Dist::normal && !(c.sigma > 0))
                throw std::invalid_argument("normal component needs sigma > 0");
        }
    }
}

namespace {

// Support points used by the audit: table rows, or a coordinate grid for parametric sources.
std::vector<std::vector<double>> audit_support(const RandomSource& s, std::size_t budget, std::mt19937_64& rng) {
    std::vector<std::vector<double>> pts;
    if (s.kind != RandomSource::Kind::parametric) {
        pts = s.rows;
        if (pts.size() > budget) pts.resize(budget);
        if (pts.empty()) pts.push_back(std::vector<double>(static_cast<std::size_t>(s.dim), 0.0));
        return pts;
    }
    for (std::size_t t = 0; t < budget; ++t) {
        std::vector<double> z;
        for (const auto& c : s.components) {
            switch (c.dist) {
                case RandomComponent::Dist::uniform:
                    z.push_back(std::uniform_real_distribution<double>(c.a, c.b)(rng));
                    break;
                case RandomComponent::Dist::bernoulli:
                    z.push_back(std::bernoulli_distribution(c.p)(rng) ? c.v1 : c.v0);
                    break;
                case RandomComponent::Dist::normal:
                    z.push_back(c.mu + c.sigma * std::clamp(std::normal_distribution<double>()(rng), -4.0, 4.0));
                    break;
            }
        }
        pts.push_back(std::move(z));
    }
    // Interval endpoints are included because minima of affine-in-z pieces sit there.
    std::vector<double> lo, hi;
    for (const auto& c : s.components) {
        if (c.dist == RandomComponent::Dist::uniform) {
            lo.push_back(c.a);
            hi.push_back(c.b);
        } else if (c.dist == RandomComponent::Dist::bernoulli) {
            lo.push_back(c.v0);
            hi.push_back(c.v1);
        } else {
            lo.push_back(c.mu - 4 * c.sigma);
            hi.push_back(c.mu + 4 * c.sigma);
        }
    }
    pts.push_back(lo);
    pts.push_back(hi);
    return pts;
}

}  // namespace

AuditReport audit_problem(const AccProblem& p, std::size_t budget, unsigned long long seed) {
    auto bounds = polytope_bounds(p.domain);
    std::mt19937_64 rng(seed);
    const std::size_t zcount = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(budget))));
    const std::size_t xcount = std::max<std::size_t>(1, budget / zcount);
    auto support = audit_support(p.source, zcount, rng);

    std::vector<Vec> xs;
    if (p.n == 1) {
        for (std::size_t i = 0; i < xcount; ++i) {
            double t = xcount == 1 ? 0.5 : double(i) / double(xcount - 1);
            xs.push_back(Vec::Constant(1, bounds.lower(0) + t * (bounds.upper(0) - bounds.lower(0))));
        }
    } else {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (std::size_t attempt = 0; xs.size() < xcount && attempt < 100 * xcount; ++attempt) {
            Vec x(p.n);
            for (int i = 0; i < p.n; ++i) x(i) = bounds.lower(i) + U(rng) * (bounds.upper(i) - bounds.lower(i));
            if (p.domain.contains(x)) xs.push_back(x);
        }
        if (xs.empty()) xs.push_back(0.5 * (bounds.lower + bounds.upper));
    }
    AuditReport rep;
    rep.min_objective = std::numeric_limits<double>::infinity();
    auto grad_norms = [&](const DcMaxFunction& f, const Vec& x, Realization z) {
        for (const auto& q : f.g) rep.max_gradient_norm = std::max(rep.max_gradient_norm, q.gradient(x, z).norm());
        for (const auto& q : f.h) rep.max_gradient_norm = std::max(rep.max_gradient_norm, q.gradient(x, z).norm());
    };
    for (const auto& x : xs) {
        for (const auto& z : support) {
            double v = dc_value(p.objective, x, z);
            rep.min_objective = std::min(rep.min_objective, v);
            grad_norms(p.objective, x, z);
            for (const auto& f : p.functionals) grad_norms(f, x, z);
            ++rep.points;
        }
    }
    rep.objective_nonnegative = rep.min_objective >= -1e-12;
    return rep;
}

}  // namespace accsp
