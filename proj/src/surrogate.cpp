#include "accsp/surrogate.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace accsp {

double ConcretePiece::value(const Vec& x) const {
    double v = a.dot(x) + b;
    if (!is_affine()) v += 0.5 * qscale * x.dot(*Q * x);
    return v;
}

Vec ConcretePiece::gradient(const Vec& x) const {
    if (is_affine()) return a;
    return a + qscale * (*Q * x);
}

double ConvexAtom::inner(const Vec& x) const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) m = std::max(m, p.value(x));
    return m + lin_a.dot(x) + lin_b;
}

double ConvexAtom::outer_value(double u) const {
    switch (outer) {
        case Outer::identity:
            return u;
        case Outer::theta_cvx:
            return theta->cvx.value(u);
        case Outer::theta_cve_mirror:
            return -theta->cve.value(-u);
    }
    return u;
}

Slopes ConvexAtom::outer_slopes(double u) const {
    switch (outer) {
        case Outer::identity:
            return {1.0, 1.0};
        case Outer::theta_cvx:
            return {theta->cvx.left_slope(u), theta->cvx.right_slope(u)};
        case Outer::theta_cve_mirror:
            return {theta->cve.right_slope(-u), theta->cve.left_slope(-u)};
    }
    return {1.0, 1.0};
}

double ConvexAtom::value(const Vec& x) const { return constant + weight * outer_value(inner(x)); }

Vec ConvexAtom::subgradient(const Vec& x) const {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        double v = pieces[i].value(x);
        if (v > m) {
            m = v;
            best = i;
        }
    }
    Vec g = pieces[best].gradient(x) + lin_a;
    double u = m + lin_a.dot(x) + lin_b;
    return weight * outer_slopes(u).right * g;
}

double ConvexAtom::dd(const Vec& x, const Vec& v) const {
    std::vector<double> vals(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) vals[i] = pieces[i].value(x);
    double m = *std::max_element(vals.begin(), vals.end());
    double d = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pieces.size(); ++i)
        if (vals[i] >= m - kTieTol) d = std::max(d, pieces[i].gradient(x).dot(v));
    d += lin_a.dot(v);
    Slopes s = outer_slopes(m + lin_a.dot(x) + lin_b);
    double od = d > 0 ? d * s.right : (d < 0 ? d * s.left : 0.0);
    return weight * od;
}

double MinList::value(const Vec& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) m = std::min(m, a.value(x));
    return m;
}

int MinList::argmin(const Vec& x) const {
    double m = std::numeric_limits<double>::infinity();
    int best = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        double v = atoms[i].value(x);
        if (v < m) {
            m = v;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double MinList::dd(const Vec& x, const Vec& v) const {
    std::vector<double> vals(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) vals[i] = atoms[i].value(x);
    double m = *std::min_element(vals.begin(), vals.end());
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (vals[i] <= m + kTieTol) d = std::min(d, atoms[i].dd(x, v));
    return d;
}

SurrogatePolicy parse_policy(const std::string& s) {
    if (s == "subgradient") return SurrogatePolicy::subgradient();
    if (s == "full") return SurrogatePolicy::full();
    if (s == "single") return SurrogatePolicy::single();
    if (s == "linearized-full") return SurrogatePolicy::linearized_full();
    if (s == "eps-argmax") return SurrogatePolicy::eps_argmax();
    if (s.rfind("eps-argmax:", 0) == 0) {
        std::size_t pos = 0;
        std::string num = s.substr(11);
        double e = 0;
        try {
            e = std::stod(num, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad epsilon in policy '" + s + "'");
        }
        if (pos != num.size() || !(e >= 0)) throw std::invalid_argument("bad epsilon in policy '" + s + "'");
        return SurrogatePolicy::eps_argmax(e);
    }
    throw std::invalid_argument("unknown surrogate policy '" + s + "'");
}

std::string format_policy(const SurrogatePolicy& p) {
    switch (p.kind) {
        case IndexPolicy::eps_argmax:
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "eps-argmax:%.17g", p.eps);
            return buf;
        }
        case IndexPolicy::full:
            return "full";
        case IndexPolicy::single:
            return "single";
        case IndexPolicy::subgradient:
            return "subgradient";
        case IndexPolicy::linearized_full:
            return "linearized-full";
    }
    return "?";
}

double SurrogateRow::value(const Vec& x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.value(x);
    return v;
}

double SurrogateRow::dd(const Vec& x, const Vec& v) const {
    double d = 0.0;
    for (const auto& t : terms) d += t.dd(x, v);
    return d;
}

bool SurrogateRow::single_atom() const {
    return std::all_of(terms.begin(), terms.end(), [](const MinList& m) { return m.atoms.size() == 1; });
}

std::size_t SurrogateRow::atom_count() const {
    std::size_t c = 0;
    for (const auto& t : terms) c += t.atoms.size();
    return c;
}

namespace {

ConcretePiece concrete(const SmoothConvexPiece& p, const Vec& x, Realization z, double scale, double shift,
                       const std::shared_ptr<const Mat>& Q) {
    ConcretePiece c;
    c.a = p.grad_at(x, z) * scale;
    c.b = p.offset_at(z) * scale + shift;
    if (!p.is_affine()) {
        c.qscale = scale;
        c.Q = Q;
    }
    return c;
}

// Affine minorant at xbar: p(xbar) + grad p(xbar)'(x - xbar), scaled and shifted.
ConcretePiece linearized(const SmoothConvexPiece& p, const Vec& xbar, Realization z, double scale, double shift) {
    ConcretePiece c;
    Vec g = p.gradient(xbar, z);
    c.a = g * scale;
    c.b = (p.value(xbar, z) - g.dot(xbar)) * scale + shift;
    return c;
}

// One source piece with its original and linearized forms at xbar.
struct SidePiece {
    const SmoothConvexPiece* src;
    std::shared_ptr<const Mat> Q;
    bool linearize;  // replace the piece by its linearization in this list
};

struct PieceList {
    std::vector<SidePiece> items;
    std::vector<double> scale, shift;

    void add(const SidePiece& s, double sc, double sh) {
        items.push_back(s);
        scale.push_back(sc);
        shift.push_back(sh);
    }
    std::vector<ConcretePiece> convex_pieces(const Vec& xbar, Realization z) const {
        std::vector<ConcretePiece> out;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& it = items[i];
            out.push_back(it.linearize ? linearized(*it.src, xbar, z, scale[i], shift[i])
                                       : concrete(*it.src, xbar, z, scale[i], shift[i], it.Q));
        }
        return out;
    }
    std::vector<double> values(const Vec& xbar, Realization z) const {
        std::vector<double> v;
        for (std::size_t i = 0; i < items.size(); ++i) v.push_back(items[i].src->value(xbar, z) * scale[i] + shift[i]);
        return v;
    }
    ConcretePiece linearization(std::size_t i, const Vec& xbar, Realization z) const {
        return linearized(*items[i].src, xbar, z, scale[i], shift[i]);
    }
};

std::vector<int> option_indices(const std::vector<double>& raw, const SurrogatePolicy& pol) {
    std::vector<int> all(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) all[i] = static_cast<int>(i);
    switch (pol.kind) {
        case IndexPolicy::full:
        case IndexPolicy::linearized_full:
            return all;
        case IndexPolicy::eps_argmax:
            return eps_active(raw, pol.eps);
        case IndexPolicy::single:
        case IndexPolicy::subgradient:
            return {eps_active(raw, 0.0).front()};
    }
    return all;
}

double list_max(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

struct FunctionalLists {
    PieceList g1, gh, h1;  // 1 + G/gamma or H/gamma;  G/gamma or H/gamma;  G/gamma - 1 or H/gamma
};

// g-side and h-side pieces; linearize flags pick the LZ^h / LZ^g substitutions.
FunctionalLists make_lists(const DcMaxFunction& f, const std::vector<std::shared_ptr<const Mat>>& gq,
                           const std::vector<std::shared_ptr<const Mat>>& hq, double gamma, bool lin_g, bool lin_h) {
    FunctionalLists L;
    const double s = 1.0 / gamma;
    for (std::size_t i = 0; i < f.g.size(); ++i) {
        SidePiece sp{&f.g[i], gq[i], lin_g};
        L.g1.add(sp, s, 1.0);
        L.gh.add(sp, s, 0.0);
        L.h1.add(sp, s, -1.0);
    }
    for (std::size_t j = 0; j < f.h.size(); ++j) {
        SidePiece sp{&f.h[j], hq[j], lin_h};
        L.g1.add(sp, s, 0.0);
        L.gh.add(sp, s, 0.0);
        L.h1.add(sp, s, 0.0);
    }
    return L;
}

std::vector<std::shared_ptr<const Mat>> share_q(const std::vector<SmoothConvexPiece>& ps) {
    std::vector<std::shared_ptr<const Mat>> out;
    for (const auto& p : ps) out.push_back(p.is_affine() ? nullptr : std::make_shared<const Mat>(p.Q));
    return out;
}

void tag(ConvexAtom& a, int s, int k, int l) {
    a.sample = s;
    a.row = k;
    a.functional = l;
}

// Atoms w * outer(max(pieces) - L_opt) for opt in the chosen options of `opts`.
MinList outer_atoms(ConvexAtom::Outer outer, double constant, double weight, const PieceList& pieces,
                    const PieceList& opts, const Vec& xbar, Realization z, const SurrogatePolicy& pol,
                    const std::shared_ptr<const ThetaPair>& theta, int k, int l) {
    MinList ml;
    auto base = pieces.convex_pieces(xbar, z);
    SurrogatePolicy scaled = pol;
    scaled.eps = pol.eps * opts.scale.front();  // epsilon is measured on unscaled function values
    for (int o : option_indices(opts.values(xbar, z), scaled)) {
        ConvexAtom a;
        a.outer = outer;
        a.constant = constant;
        a.weight = weight;
        a.pieces = base;
        ConcretePiece lo = opts.linearization(static_cast<std::size_t>(o), xbar, z);
        a.lin_a = -lo.a;
        a.lin_b = -lo.b;
        a.theta = theta;
        tag(a, -1, k, l);
        ml.atoms.push_back(std::move(a));
    }
    return ml;
}

SurrogateRow build_row(const AccProblem& p, int k, Realization z, double gamma,
                       const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar, const SurrogatePolicy& policy,
                       Variant variant) {
    if (k < 0 || k >= p.K()) throw std::out_of_range("constraint row index out of range");
    if (!(gamma > 0)) throw std::invalid_argument("surrogate construction needs gamma > 0");
    if (!theta) throw std::invalid_argument("surrogate construction needs a theta pair");
    if (xbar.size() != p.n) throw std::invalid_argument("reference point dimension mismatch");
    if (variant == Variant::rlx && !(theta->cvx.differentiable() || theta->cvx.piecewise_affine()))
        throw std::invalid_argument("relaxed surrogate needs a differentiable or piecewise affine theta");
    SurrogateRow row;
    row.xbar = xbar;
    row.z.assign(z.begin(), z.end());
    row.gamma = gamma;
    row.variant = variant;
    row.policy = policy;
    const bool lin_mode = policy.kind == IndexPolicy::linearized_full;
    const auto& e = p.rows[k].e;
    for (std::size_t l = 0; l < e.size(); ++l) {
        if (e[l] == 0.0) continue;
        const auto& f = p.functionals[l];
        auto gq = share_q(f.g), hq = share_q(f.h);
        const bool plus = e[l] > 0;
        const double w = std::abs(e[l]);
        // Upper bounds of phi(Z) use LZ^h >= Z; upper bounds of -phi(Z) use LZ^g <= Z.
        FunctionalLists L = make_lists(f, gq, hq, gamma, lin_mode && !plus, lin_mode && plus);
        const int li = static_cast<int>(l);
        MinList ml;
        if (variant == Variant::rst) {
            if (plus)  // e+ theta_cvx(g1 - gh)
                ml = outer_atoms(ConvexAtom::Outer::theta_cvx, 0.0, w, L.g1, L.gh, xbar, z, policy, theta, k, li);
            else  // -e- theta_cve(gh - h1) = e- mirror(h1 - gh)
                ml = outer_atoms(ConvexAtom::Outer::theta_cve_mirror, 0.0, w, L.h1, L.gh, xbar, z, policy, theta, k,
                                 li);
        } else {
            double gh = list_max(L.gh.values(xbar, z));
            if (plus) {  // e+ theta_cve(gh - h1) <= e+ [theta(s1) + xi (gh - h1 - s1)]
                double s1 = gh - list_max(L.h1.values(xbar, z));
                double xi = theta->cve.right_slope(s1);
                ml = outer_atoms(ConvexAtom::Outer::identity, w * (theta->cve.value(s1) - xi * s1), w * xi, L.gh, L.h1,
                                 xbar, z, policy, theta, k, li);
            } else {  // -e- theta_cvx(g1 - gh) <= -e- [theta(s2) + xi (g1 - gh - s2)]
                double s2 = list_max(L.g1.values(xbar, z)) - gh;
                double xi = theta->cvx.right_slope(s2);
                ml = outer_atoms(ConvexAtom::Outer::identity, -w * (theta->cvx.value(s2) - xi * s2), w * xi, L.gh,
                                 L.g1, xbar, z, policy, theta, k, li);
            }
        }
        row.terms.push_back(std::move(ml));
    }
    return row;
}

}  // namespace

SurrogateRow build_surrogate_rst(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy) {
    return build_row(p, k, z, gamma, theta, xbar, policy, Variant::rst);
}

SurrogateRow build_surrogate_rlx(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy) {
    return build_row(p, k, z, gamma, theta, xbar, policy, Variant::rlx);
}

SurrogateRow build_surrogate_row(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy, Variant variant) {
    return build_row(p, k, z, gamma, theta, xbar, policy, variant);
}

SurrogateRow build_surrogate_objective(const AccProblem& p, Realization z, const Vec& xbar,
                                       const SurrogatePolicy& policy) {
    if (xbar.size() != p.n) throw std::invalid_argument("reference point dimension mismatch");
    const auto& f = p.objective;
    auto gq = share_q(f.g);
    std::vector<ConcretePiece> base;
    for (std::size_t i = 0; i < f.g.size(); ++i) base.push_back(concrete(f.g[i], xbar, z, 1.0, 0.0, gq[i]));
    std::vector<double> hv;
    for (const auto& h : f.h) hv.push_back(h.value(xbar, z));
    SurrogatePolicy pol = policy.kind == IndexPolicy::linearized_full ? SurrogatePolicy::full() : policy;
    MinList ml;
    for (int j : option_indices(hv, pol)) {
        ConvexAtom a;
        a.pieces = base;
        ConcretePiece lo = linearized(f.h[j], xbar, z, 1.0, 0.0);
        a.lin_a = -lo.a;
        a.lin_b = -lo.b;
        tag(a, -1, -1, -1);
        ml.atoms.push_back(std::move(a));
    }
    SurrogateRow row;
    row.terms.push_back(std::move(ml));
    row.xbar = xbar;
    row.z.assign(z.begin(), z.end());
    row.policy = policy;
    return row;
}

double LZ_h(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& xbar) {
    double gm = -std::numeric_limits<double>::infinity(), hm = gm;
    for (const auto& p : f.g) gm = std::max(gm, p.value(x, z));
    for (const auto& p : f.h) hm = std::max(hm, linearized(p, xbar, z, 1.0, 0.0).value(x));
    return gm - hm;
}

double LZ_g(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& xbar) {
    double gm = -std::numeric_limits<double>::infinity(), hm = gm;
    for (const auto& p : f.g) gm = std::max(gm, linearized(p, xbar, z, 1.0, 0.0).value(x));
    for (const auto& p : f.h) hm = std::max(hm, p.value(x, z));
    return gm - hm;
}

double c_limit_ub(const AccProblem& p, int k, const Vec& x, Realization z, const Vec& xbar) {
    if (k < 0 || k >= p.K()) throw std::out_of_range("constraint row index out of range");
    const auto& row = p.rows[k];
    double v = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] > 0) v += row.e[l] * heaviside_closed(LZ_h(p.functionals[l], x, z, xbar));
        else if (row.e[l] < 0) v += row.e[l] * heaviside_open(LZ_g(p.functionals[l], x, z, xbar));
    }
    return v;
}

double c_limit_lb(const AccProblem& p, int k, const Vec& x, Realization z, const Vec& xbar) {
    if (k < 0 || k >= p.K()) throw std::out_of_range("constraint row index out of range");
    const auto& row = p.rows[k];
    double v = 0.0;
    for (std::size_t l = 0; l < row.e.size(); ++l) {
        if (row.e[l] > 0) v += row.e[l] * heaviside_open(LZ_h(p.functionals[l], x, z, xbar));
        else if (row.e[l] < 0) v += row.e[l] * heaviside_closed(LZ_g(p.functionals[l], x, z, xbar));
    }
    return v;
}

SurrogateCheckReport check_surrogate_conditions(const SurrogateRow& row,
                                                const std::function<double(const Vec&)>& c_value,
                                                const std::function<double(const Vec&, const Vec&)>& c_dd,
                                                const std::vector<Vec>& probes, const std::vector<Vec>& directions,
                                                double major_tol) {
    SurrogateCheckReport r;
    r.touching_error = std::abs(row.value(row.xbar) - c_value(row.xbar));
    for (const auto& x : probes) {
        double gap = c_value(x) - row.value(x);
        if (gap > major_tol) {
            ++r.majorization_violations;
            r.max_violation = std::max(r.max_violation, gap);
        }
    }
    for (const auto& d : directions) r.dd_error = std::max(r.dd_error, std::abs(row.dd(row.xbar, d) - c_dd(row.xbar, d)));
    r.dd_consistent = r.dd_error <= 1e-8;
    return r;
}

}  // namespace accsp
