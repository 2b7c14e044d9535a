#include "accsp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace accsp {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0) a = std::min(a, -v(i) / dv(i));
    return a;
}

struct Residuals {
    Vec rd, rp;
    double mu = 0.0;
    double scaled = 0.0;
};

Residuals residuals(const QpProblem& qp, const Vec& y, const Vec& s, const Vec& z) {
    Residuals r;
    Vec Hy = qp.H * y;
    Vec Gz = qp.G.transpose() * z;
    r.rd = Hy + qp.c + Gz;
    r.rp = qp.G * y + s - qp.h;
    const double m = static_cast<double>(std::max<Eigen::Index>(1, s.size()));
    r.mu = s.size() ? s.dot(z) / m : 0.0;
    double dscale = 1.0 + std::max({inf_norm(Hy), inf_norm(qp.c), inf_norm(Gz)});
    double pscale = 1.0 + std::max(inf_norm(qp.h), inf_norm(qp.G * y));
    double obj = 0.5 * y.dot(Hy) + qp.c.dot(y);
    r.scaled = std::max({inf_norm(r.rd) / dscale, inf_norm(r.rp) / pscale, r.mu / (1.0 + std::abs(obj))});
    return r;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpOptions& opt) {
    const Eigen::Index n = qp.c.size();
    const Eigen::Index m = qp.h.size();
    if (qp.H.rows() != n || qp.H.cols() != n) throw std::invalid_argument("QP Hessian has wrong shape");
    if (qp.G.rows() != m || (m > 0 && qp.G.cols() != n)) throw std::invalid_argument("QP constraints have wrong shape");
    QpResult res;
    if (m == 0) {
        Eigen::LDLT<Mat> ldlt(qp.H);
        res.y = ldlt.solve(-qp.c);
        res.dual = Vec();
        res.objective = 0.5 * res.y.dot(qp.H * res.y) + qp.c.dot(res.y);
        res.kkt_residual = inf_norm(qp.H * res.y + qp.c);
        res.converged = res.y.allFinite() && res.kkt_residual <= 1e-8 * (1.0 + inf_norm(qp.c));
        return res;
    }
    Vec y = Vec::Zero(n);
    Vec s = (qp.h - qp.G * y).cwiseMax(1.0);
    Vec z = Vec::Ones(m);
    const double reg_base = 1e-13;
    Residuals r = residuals(qp, y, s, z);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (r.scaled <= opt.tol) break;
        Vec w = z.cwiseQuotient(s);
        const Mat M0 = qp.H + qp.G.transpose() * w.asDiagonal() * qp.G;
        Mat M = M0;
        M.diagonal().array() += reg_base * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
        Eigen::LDLT<Mat> ldlt(M);
        if (ldlt.info() != Eigen::Success) break;
        auto direction = [&](const Vec& rc, Vec& dy, Vec& ds, Vec& dz) {
            Vec sinv_rc = rc.cwiseQuotient(s);
            Vec rhs = -r.rd - qp.G.transpose() * (w.cwiseProduct(r.rp)) + qp.G.transpose() * sinv_rc;
            dy = ldlt.solve(rhs);
            // The regularized factor is only a preconditioner; refine against the exact reduced matrix.
            for (int k = 0; k < 3; ++k) dy += ldlt.solve(rhs - M0 * dy);
            Vec Gdy = qp.G * dy;
            dz = w.cwiseProduct(Gdy + r.rp) - sinv_rc;
            ds = -r.rp - Gdy;
        };
        Vec dy, ds, dz;
        Vec rc = s.cwiseProduct(z);
        direction(rc, dy, ds, dz);
        double a_aff = std::min(max_step(s, ds), max_step(z, dz));
        double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
        double sigma = std::pow(std::max(mu_aff, 0.0) / std::max(r.mu, 1e-300), 3.0);
        sigma = std::min(sigma, 1.0);
        rc = s.cwiseProduct(z) + ds.cwiseProduct(dz);
        rc.array() -= sigma * r.mu;
        direction(rc, dy, ds, dz);
        double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
        y += a * dy;
        s += a * ds;
        z += a * dz;
        s = s.cwiseMax(1e-300);
        z = z.cwiseMax(1e-300);
        r = residuals(qp, y, s, z);
    }
    res.y = y;
    res.dual = z;
    res.objective = 0.5 * y.dot(qp.H * y) + qp.c.dot(y);
    res.kkt_residual = r.scaled;
    res.iterations = it;
    res.converged = y.allFinite() && r.scaled <= std::max(opt.tol, 1e-8);
    return res;
}

ConvexConstraint quadratic_constraint(Mat P, Vec q, double r) {
    ConvexConstraint c;
    c.eval = [P = std::move(P), q = std::move(q), r](const Vec& y, Vec& grad) {
        Vec Py = P * y;
        grad = Py + q;
        return 0.5 * y.dot(Py) + q.dot(y) + r;
    };
    return c;
}

namespace {

void append_row(QpProblem& qp, const Vec& g, double rhs) {
    const Eigen::Index m = qp.G.rows();
    const Eigen::Index n = qp.c.size();
    Mat G(m + 1, n);
    if (m > 0) G.topRows(m) = qp.G;
    G.row(m) = g.transpose();
    Vec h(m + 1);
    if (m > 0) h.head(m) = qp.h;
    h(m) = rhs;
    qp.G = std::move(G);
    qp.h = std::move(h);
}

}  // namespace

CutResult solve_with_cuts(QpProblem base, const std::vector<ConvexConstraint>& cons, const std::vector<Vec>& seeds,
                          const CutOptions& opt) {
    CutResult out;
    Vec grad;
    auto add_cut = [&](const ConvexConstraint& c, const Vec& at) {
        double f = c.eval(at, grad);
        // f(at) + grad'(y - at) <= 0
        append_row(base, grad, grad.dot(at) - f);
        ++out.cuts;
    };
    for (const auto& s : seeds)
        for (const auto& c : cons) add_cut(c, s);
    for (out.rounds = 1; out.rounds <= opt.max_rounds; ++out.rounds) {
        out.qp = solve_qp(base, opt.qp);
        if (!out.qp.y.allFinite()) break;
        out.max_violation = 0.0;
        std::vector<std::size_t> violated;
        for (std::size_t j = 0; j < cons.size(); ++j) {
            double f = cons[j].eval(out.qp.y, grad);
            double scale = 1.0 + inf_norm(grad) * (1.0 + inf_norm(out.qp.y));
            if (f > opt.tol * scale) violated.push_back(j);
            out.max_violation = std::max(out.max_violation, f);
        }
        if (violated.empty()) {
            out.converged = out.qp.converged;
            return out;
        }
        for (auto j : violated) add_cut(cons[j], out.qp.y);
    }
    out.converged = false;
    return out;
}

std::string qp_to_lp_text(const QpProblem& qp, const std::vector<std::string>& names) {
    const Eigen::Index n = qp.c.size();
    auto name = [&](Eigen::Index i) {
        return static_cast<std::size_t>(i) < names.size() ? names[i] : "y" + std::to_string(i);
    };
    std::ostringstream os;
    os << std::setprecision(17);
    auto term = [&](double coef, const std::string& var, bool& first) {
        if (coef == 0.0) return;
        if (coef < 0) os << " - " << -coef << " " << var;
        else os << (first ? " " : " + ") << coef << " " << var;
        first = false;
    };
    os << "Minimize\n obj:";
    bool first = true;
    for (Eigen::Index i = 0; i < n; ++i) term(qp.c(i), name(i), first);
    bool quad = qp.H.size() > 0 && qp.H.cwiseAbs().maxCoeff() > 0;
    if (quad) {
        os << (first ? " [" : " + [");
        bool qfirst = true;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) {
                double v = (i == j) ? qp.H(i, i) : qp.H(i, j) + qp.H(j, i);
                term(v, i == j ? name(i) + " ^ 2" : name(i) + " * " + name(j), qfirst);
            }
        os << " ] / 2";
        first = false;
    }
    if (first) os << " 0 " << name(0);
    os << "\nSubject To\n";
    for (Eigen::Index r = 0; r < qp.G.rows(); ++r) {
        os << " c" << r << ":";
        bool f = true;
        for (Eigen::Index i = 0; i < n; ++i) term(qp.G(r, i), name(i), f);
        if (f) os << " 0 " << name(0);
        os << " <= " << qp.h(r) << "\n";
    }
    os << "Bounds\n";
    for (Eigen::Index i = 0; i < n; ++i) os << " " << name(i) << " free\n";
    os << "End\n";
    return os.str();
}

}  // namespace accsp
