#include "accsp/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace accsp {

double SurrogateProgram::row_mean(int k, const Vec& x) const {
    const auto& r = rows.at(static_cast<std::size_t>(k));
    if (r.empty()) return 0.0;
    double s = 0.0;
    for (const auto& row : r) s += row.value(x);
    return s / static_cast<double>(r.size());
}

double SurrogateProgram::objective_mean(const Vec& x) const {
    double s = 0.0;
    for (const auto& o : objective) s += o.value(x);
    return objective_weight * s;
}

double SurrogateProgram::value(const Vec& x) const {
    double v = objective_mean(x);
    for (std::size_t k = 0; k < rows.size(); ++k) v += lambda * std::max(row_mean(static_cast<int>(k), x) - zeta[k], 0.0);
    return v + 0.5 * rho * (x - xbar).squaredNorm();
}

double SurrogateProgram::dd(const Vec& x, const Vec& v) const {
    double d = 0.0;
    for (const auto& o : objective) d += objective_weight * o.dd(x, v);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        if (r.empty()) continue;
        double m = row_mean(static_cast<int>(k), x) - zeta[k];
        double dk = 0.0;
        for (const auto& row : r) dk += row.dd(x, v);
        dk /= static_cast<double>(r.size());
        if (m > 1e-12) d += lambda * dk;
        else if (m >= -1e-12) d += lambda * std::max(dk, 0.0);
    }
    return d + rho * (x - xbar).dot(v);
}

std::size_t SurrogateProgram::minlist_count() const {
    std::size_t c = 0;
    for (const auto& o : objective) c += o.terms.size();
    for (const auto& r : rows)
        for (const auto& row : r) c += row.terms.size();
    return c;
}

double SurrogateProgram::branch_count() const {
    double c = 1.0;
    auto mul = [&](const SurrogateRow& row) {
        for (const auto& t : row.terms) c = std::min(c * static_cast<double>(t.atoms.size()), 1e300);
    };
    for (const auto& o : objective) mul(o);
    for (const auto& r : rows)
        for (const auto& row : r) mul(row);
    return c;
}

namespace {

template <class F>
void for_each_minlist(const SurrogateProgram& prog, F&& f) {
    for (const auto& o : prog.objective)
        for (const auto& t : o.terms) f(t, -1);
    for (std::size_t k = 0; k < prog.rows.size(); ++k)
        for (const auto& row : prog.rows[k])
            for (const auto& t : row.terms) f(t, static_cast<int>(k));
}

// Selected atoms grouped by destination: objective (k = -1) or hinge k.
struct SelectedAtom {
    const ConvexAtom* atom;
    int k;
    double coef;
};

std::vector<SelectedAtom> selected_atoms(const SurrogateProgram& prog, const BranchSelection& sel) {
    std::vector<SelectedAtom> out;
    std::size_t idx = 0;
    if (sel.size() != prog.minlist_count()) throw std::invalid_argument("branch selection has wrong length");
    for_each_minlist(prog, [&](const MinList& ml, int k) {
        int i = sel[idx++];
        if (i < 0 || static_cast<std::size_t>(i) >= ml.atoms.size())
            throw std::out_of_range("branch selection index out of range");
        double coef = k < 0 ? prog.objective_weight : 1.0 / static_cast<double>(prog.rows[k].size());
        out.push_back({&ml.atoms[i], k, coef});
    });
    return out;
}

struct BranchFunctions {
    double F0 = 0.0;
    std::vector<double> Fk;  // row mean minus zeta
};

BranchFunctions branch_parts(const SurrogateProgram& prog, const std::vector<SelectedAtom>& atoms, const Vec& x,
                             Vec* g0 = nullptr, std::vector<Vec>* gk = nullptr) {
    BranchFunctions b;
    b.Fk.assign(prog.rows.size(), 0.0);
    const auto n = x.size();
    if (g0) *g0 = Vec::Zero(n);
    if (gk) gk->assign(prog.rows.size(), Vec::Zero(n));
    for (const auto& s : atoms) {
        double v = s.coef * s.atom->value(x);
        if (s.k < 0) {
            b.F0 += v;
            if (g0) *g0 += s.coef * s.atom->subgradient(x);
        } else {
            b.Fk[s.k] += v;
            if (gk) (*gk)[s.k] += s.coef * s.atom->subgradient(x);
        }
    }
    for (std::size_t k = 0; k < prog.rows.size(); ++k) b.Fk[k] -= prog.zeta[k];
    return b;
}

bool smooth_outer(const ConvexAtom& a) {
    if (a.outer == ConvexAtom::Outer::identity) return false;
    const auto& th = a.outer == ConvexAtom::Outer::theta_cvx ? a.theta->cvx : a.theta->cve;
    return !th.piecewise_affine();
}

// Affine pieces (slope, intercept) of the outer function when it is piecewise affine.
std::vector<std::pair<double, double>> outer_pieces(const ConvexAtom& a) {
    const auto& th = a.outer == ConvexAtom::Outer::theta_cvx ? a.theta->cvx : a.theta->cve;
    std::vector<std::pair<double, double>> out;
    if (th.kind == ScalarTheta::Kind::identity) {
        out.emplace_back(1.0, 0.0);
        return out;
    }
    for (std::size_t i = 0; i + 1 < th.bx.size(); ++i) {
        double m = (th.by[i + 1] - th.by[i]) / (th.bx[i + 1] - th.bx[i]);
        double c = th.by[i] - m * th.bx[i];
        if (a.outer == ConvexAtom::Outer::theta_cvx) out.emplace_back(m, c);
        else out.emplace_back(m, -c);  // -(m(-u) + c) = m u - c
    }
    return out;
}

void add_row(std::vector<std::pair<Vec, double>>& rows, Vec g, double h) { rows.emplace_back(std::move(g), h); }

QpProblem assemble(int nvar, const Mat& H, const Vec& c, const std::vector<std::pair<Vec, double>>& rows) {
    QpProblem qp;
    qp.H = H;
    qp.c = c;
    qp.G = Mat(static_cast<Eigen::Index>(rows.size()), nvar);
    qp.h = Vec(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        qp.G.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        qp.h(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
    return qp;
}

struct ExpandedModel {
    QpProblem qp;
    std::vector<ConvexConstraint> cons;
    std::vector<std::string> names;
    Vec seed;
};

// Atoms that carry a decision variable: zero weights and switched-off hinges only add constants.
std::vector<SelectedAtom> modeled_atoms(const SurrogateProgram& prog, const std::vector<SelectedAtom>& all,
                                        std::vector<double>& hinge_const) {
    hinge_const.assign(prog.rows.size(), 0.0);
    std::vector<SelectedAtom> out;
    for (const auto& a : all) {
        if (a.k >= 0 && prog.lambda == 0.0) continue;
        if (a.atom->weight == 0.0) {
            if (a.k >= 0) hinge_const[a.k] += a.coef * a.atom->constant;
            continue;
        }
        out.push_back(a);
    }
    return out;
}

ExpandedModel expanded_model(const SurrogateProgram& prog, const std::vector<SelectedAtom>& all) {
    const int n = prog.dim();
    const int K = prog.lambda > 0 ? static_cast<int>(prog.rows.size()) : 0;
    std::vector<double> hinge_const;
    const auto atoms = modeled_atoms(prog, all, hinge_const);
    // Layout: x (n), t per atom, s per non-identity atom, u per row.
    std::vector<int> t_idx(atoms.size()), s_idx(atoms.size(), -1);
    int nv = n;
    for (std::size_t a = 0; a < atoms.size(); ++a) t_idx[a] = nv++;
    for (std::size_t a = 0; a < atoms.size(); ++a)
        if (atoms[a].atom->outer != ConvexAtom::Outer::identity) s_idx[a] = nv++;
    const int u0 = nv;
    nv += K;
    ExpandedModel m;
    m.names.resize(static_cast<std::size_t>(nv));
    for (int i = 0; i < n; ++i) m.names[i] = "x" + std::to_string(i);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        m.names[t_idx[a]] = "t" + std::to_string(a);
        if (s_idx[a] >= 0) m.names[s_idx[a]] = "s" + std::to_string(a);
    }
    for (int k = 0; k < K; ++k) m.names[u0 + k] = "u" + std::to_string(k);

    Mat H = Mat::Zero(nv, nv);
    H.topLeftCorner(n, n) = prog.rho * Mat::Identity(n, n);
    Vec c = Vec::Zero(nv);
    c.head(n) = -prog.rho * prog.xbar;
    for (int k = 0; k < K; ++k) c(u0 + k) = prog.lambda;
    std::vector<std::pair<Vec, double>> rows;
    std::vector<Vec> hinge(K, Vec::Zero(nv));
    std::vector<double> hinge_rhs(K);
    for (int k = 0; k < K; ++k) hinge_rhs[k] = prog.zeta[k] - hinge_const[k];

    Vec seed = Vec::Zero(nv);
    seed.head(n) = prog.xbar;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const auto& at = *atoms[a].atom;
        const int ti = t_idx[a];
        // pieces: piece_p(x) + lin(x) <= t
        for (const auto& p : at.pieces) {
            Vec g = Vec::Zero(nv);
            g.head(n) = p.a + at.lin_a;
            g(ti) = -1.0;
            double rhs = -(p.b + at.lin_b);
            if (p.is_affine()) {
                add_row(rows, g, rhs);
            } else {
                Mat P = Mat::Zero(nv, nv);
                P.topLeftCorner(n, n) = p.qscale * *p.Q;
                m.cons.push_back(quadratic_constraint(P, g, -rhs));
            }
        }
        seed(ti) = at.inner(prog.xbar);
        int vi = ti;  // variable carrying outer(t)
        if (s_idx[a] >= 0) {
            const int si = s_idx[a];
            vi = si;
            seed(si) = at.outer_value(seed(ti));
            if (smooth_outer(at)) {
                const ConvexAtom* ap = &at;
                ConvexConstraint cc;
                cc.eval = [ap, ti, si, nv](const Vec& y, Vec& grad) {
                    grad = Vec::Zero(nv);
                    double u = y(ti);
                    Slopes sl = ap->outer_slopes(u);
                    grad(ti) = sl.right;
                    grad(si) = -1.0;
                    return ap->outer_value(u) - y(si);
                };
                m.cons.push_back(std::move(cc));
            } else {
                for (auto [slope, icpt] : outer_pieces(at)) {
                    Vec g = Vec::Zero(nv);
                    g(ti) = slope;
                    g(si) = -1.0;
                    add_row(rows, g, -icpt);
                }
            }
        }
        const double w = atoms[a].coef * at.weight;
        const double cst = atoms[a].coef * at.constant;
        if (atoms[a].k < 0) {
            c(vi) += w;
        } else {
            hinge[atoms[a].k](vi) += w;
            hinge_rhs[atoms[a].k] -= cst;
        }
    }
    for (int k = 0; k < K; ++k) {
        Vec g = hinge[k];
        g(u0 + k) = -1.0;
        add_row(rows, g, hinge_rhs[k]);
        Vec nz = Vec::Zero(nv);
        nz(u0 + k) = -1.0;
        add_row(rows, nz, 0.0);
        seed(u0 + k) = std::max(0.0, hinge[k].dot(seed) - hinge_rhs[k]);
    }
    Mat Gd;
    Vec hd;
    prog.domain.as_inequalities(Gd, hd);
    for (Eigen::Index r = 0; r < Gd.rows(); ++r) {
        Vec g = Vec::Zero(nv);
        g.head(n) = Gd.row(r).transpose();
        add_row(rows, g, hd(r));
    }
    m.qp = assemble(nv, H, c, rows);
    m.seed = seed;
    return m;
}

BranchResult solve_expanded(const SurrogateProgram& prog, const BranchSelection& sel,
                            const std::vector<SelectedAtom>& atoms, const BranchOptions& opt) {
    auto m = expanded_model(prog, atoms);
    auto cr = solve_with_cuts(m.qp, m.cons, {m.seed}, opt.cuts);
    BranchResult r;
    r.form_used = EpigraphForm::expanded;
    r.x = cr.qp.y.head(prog.dim());
    r.kkt_residual = std::max(cr.qp.kkt_residual, std::max(cr.max_violation, 0.0));
    r.cut_rounds = cr.rounds;
    r.converged = cr.converged;
    r.value = branch_value(prog, sel, r.x);
    return r;
}

BranchResult solve_aggregated(const SurrogateProgram& prog, const BranchSelection& sel,
                              const std::vector<SelectedAtom>& atoms, const BranchOptions& opt) {
    const int n = prog.dim();
    const int K = prog.lambda > 0 ? static_cast<int>(prog.rows.size()) : 0;
    const int r0 = n, u0 = n + 1, nv = n + 1 + K;
    Mat H = Mat::Zero(nv, nv);
    H.topLeftCorner(n, n) = prog.rho * Mat::Identity(n, n);
    Vec c = Vec::Zero(nv);
    c.head(n) = -prog.rho * prog.xbar;
    c(r0) = 1.0;
    for (int k = 0; k < K; ++k) c(u0 + k) = prog.lambda;
    std::vector<std::pair<Vec, double>> rows;
    for (int k = 0; k < K; ++k) {
        Vec g = Vec::Zero(nv);
        g(u0 + k) = -1.0;
        add_row(rows, g, 0.0);
    }
    Mat Gd;
    Vec hd;
    prog.domain.as_inequalities(Gd, hd);
    for (Eigen::Index r = 0; r < Gd.rows(); ++r) {
        Vec g = Vec::Zero(nv);
        g.head(n) = Gd.row(r).transpose();
        add_row(rows, g, hd(r));
    }
    QpProblem qp = assemble(nv, H, c, rows);
    std::vector<ConvexConstraint> cons;
    const auto* atoms_ptr = &atoms;
    const auto* prog_ptr = &prog;
    ConvexConstraint c0;
    c0.eval = [=](const Vec& y, Vec& grad) {
        Vec x = y.head(n), g0;
        auto b = branch_parts(*prog_ptr, *atoms_ptr, x, &g0, nullptr);
        grad = Vec::Zero(nv);
        grad.head(n) = g0;
        grad(r0) = -1.0;
        return b.F0 - y(r0);
    };
    cons.push_back(c0);
    for (int k = 0; k < K; ++k) {
        ConvexConstraint ck;
        ck.eval = [=](const Vec& y, Vec& grad) {
            Vec x = y.head(n);
            std::vector<Vec> gk;
            auto b = branch_parts(*prog_ptr, *atoms_ptr, x, nullptr, &gk);
            grad = Vec::Zero(nv);
            grad.head(n) = gk[k];
            grad(u0 + k) = -1.0;
            return b.Fk[k] - y(u0 + k);
        };
        cons.push_back(ck);
    }
    Vec seed = Vec::Zero(nv);
    seed.head(n) = prog.xbar;
    auto cr = solve_with_cuts(qp, cons, {seed}, opt.cuts);
    BranchResult r;
    r.form_used = EpigraphForm::aggregated;
    r.x = cr.qp.y.head(n);
    r.kkt_residual = std::max(cr.qp.kkt_residual, std::max(cr.max_violation, 0.0));
    r.cut_rounds = cr.rounds;
    r.converged = cr.converged;
    r.value = branch_value(prog, sel, r.x);
    return r;
}

}  // namespace

BranchSelection touching_selection(const SurrogateProgram& prog, const Vec& x) {
    BranchSelection sel;
    for_each_minlist(prog, [&](const MinList& ml, int) { sel.push_back(ml.argmin(x)); });
    return sel;
}

double branch_value(const SurrogateProgram& prog, const BranchSelection& sel, const Vec& x) {
    auto atoms = selected_atoms(prog, sel);
    auto b = branch_parts(prog, atoms, x);
    double v = b.F0;
    for (double f : b.Fk) v += prog.lambda * std::max(f, 0.0);
    return v + 0.5 * prog.rho * (x - prog.xbar).squaredNorm();
}

BranchResult solve_branch(const SurrogateProgram& prog, const BranchSelection& sel, const BranchOptions& opt) {
    if (!(prog.rho > 0)) throw std::invalid_argument("proximal parameter rho must be positive");
    if (prog.zeta.size() != prog.rows.size()) throw std::invalid_argument("one threshold per row is required");
    auto atoms = selected_atoms(prog, sel);
    EpigraphForm form = opt.form;
    if (form == EpigraphForm::automatic)
        form = atoms.size() <= opt.expanded_limit ? EpigraphForm::expanded : EpigraphForm::aggregated;
    BranchResult r = form == EpigraphForm::expanded ? solve_expanded(prog, sel, atoms, opt)
                                                    : solve_aggregated(prog, sel, atoms, opt);
    if (!r.x.allFinite()) throw std::runtime_error("convex engine returned a non-finite point");
    return r;
}

std::string branch_qp_dump(const SurrogateProgram& prog, const BranchSelection& sel) {
    auto atoms = selected_atoms(prog, sel);
    auto m = expanded_model(prog, atoms);
    std::string text = qp_to_lp_text(m.qp, m.names);
    if (!m.cons.empty()) {
        std::ostringstream os;
        os << "\\ " << m.cons.size() << " convex constraints handled by outer linearization are not listed\n";
        text = os.str() + text;
    }
    return text;
}

GlobalStrategy parse_strategy(const std::string& s) {
    if (s == "enumerate") return GlobalStrategy::enumerate;
    if (s == "single-branch") return GlobalStrategy::single_branch;
    if (s == "local-branch") return GlobalStrategy::local_branch;
    throw std::invalid_argument("unknown global strategy '" + s + "'");
}

namespace {

void finish(const SurrogateProgram& prog, GlobalResult& res) {
    double vx = prog.value(res.x);
    double vbar = prog.value(prog.xbar);
    if (!(vx <= vbar)) {
        res.x = prog.xbar;
        res.value = vbar;
        res.kept_reference = true;
        res.selection = touching_selection(prog, prog.xbar);
    } else {
        res.value = vx;
    }
}

}  // namespace

GlobalResult solve_surrogate_global(const SurrogateProgram& prog, const GlobalOptions& opt) {
    GlobalResult res;
    if (opt.strategy == GlobalStrategy::single_branch) {
        res.selection = touching_selection(prog, prog.xbar);
        auto br = solve_branch(prog, res.selection, opt.branch);
        res.x = br.x;
        res.branches_solved = 1;
        res.kkt_residual = br.kkt_residual;
        finish(prog, res);
        return res;
    }
    if (opt.strategy == GlobalStrategy::local_branch) {
        BranchSelection sel = touching_selection(prog, prog.xbar);
        Vec best_x = prog.xbar;
        double best_v = prog.value(prog.xbar);
        res.selection = sel;
        for (int round = 0; round < opt.max_local_rounds; ++round) {
            auto br = solve_branch(prog, sel, opt.branch);
            ++res.branches_solved;
            double v = prog.value(br.x);
            if (v < best_v) {
                best_v = v;
                best_x = br.x;
                res.selection = sel;
                res.kkt_residual = br.kkt_residual;
            }
            BranchSelection next = touching_selection(prog, br.x);
            if (next == sel) break;
            sel = std::move(next);
        }
        res.x = best_x;
        finish(prog, res);
        return res;
    }
    // Enumeration in lexicographic order of the selection tuple.
    double count = prog.branch_count();
    if (count > opt.branch_cap)
        throw std::length_error("branch count exceeds the cap; use a single-atom policy or another strategy");
    std::vector<std::size_t> sizes;
    for_each_minlist(prog, [&](const MinList& ml, int) { sizes.push_back(ml.atoms.size()); });
    const auto total = static_cast<std::size_t>(count);
    auto decode = [&](std::size_t idx) {
        BranchSelection sel(sizes.size());
        for (std::size_t i = sizes.size(); i-- > 0;) {
            sel[i] = static_cast<int>(idx % sizes[i]);
            idx /= sizes[i];
        }
        return sel;
    };
    std::vector<BranchResult> results(total);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) results[i] = solve_branch(prog, decode(i), opt.branch);
    };
    const int T = std::max(1, opt.threads);
    if (T == 1 || total < 2) {
        work(0, total);
    } else {
        std::vector<std::future<void>> fs;
        std::size_t chunk = (total + T - 1) / T;
        for (std::size_t b = 0; b < total; b += chunk) fs.push_back(std::async(std::launch::async, work, b, std::min(total, b + chunk)));
        for (auto& f : fs) f.get();
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < total; ++i)
        if (results[i].value < results[best].value - opt.tie_tol) best = i;
    res.x = results[best].x;
    res.selection = decode(best);
    res.branches_solved = total;
    res.kkt_residual = results[best].kkt_residual;
    finish(prog, res);
    return res;
}

}  // namespace accsp
