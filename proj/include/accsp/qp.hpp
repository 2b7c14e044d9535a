#pragma once

#include "accsp/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace accsp {

// minimize 1/2 y'Hy + c'y  subject to  G y <= h.
struct QpProblem {
    Mat H;
    Vec c;
    Mat G;
    Vec h;
};

struct QpOptions {
    double tol = 1e-10;
    int max_iter = 200;
};

struct QpResult {
    Vec y;
    Vec dual;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

QpResult solve_qp(const QpProblem& qp, const QpOptions& opt = {});

// Convex constraint f(y) <= 0 given by value and subgradient.
struct ConvexConstraint {
    std::function<double(const Vec& y, Vec& grad)> eval;
};

// 1/2 y'Py + q'y + r <= 0 with P positive semidefinite.
ConvexConstraint quadratic_constraint(Mat P, Vec q, double r);

struct CutOptions {
    double tol = 1e-10;
    int max_rounds = 5000;
    QpOptions qp;
};

struct CutResult {
    QpResult qp;
    int rounds = 0;
    int cuts = 0;
    double max_violation = 0.0;
    bool converged = false;
};

// Outer linearization loop: solve, add tangent cuts for violated constraints, repeat.
CutResult solve_with_cuts(QpProblem base, const std::vector<ConvexConstraint>& cons,
                          const std::vector<Vec>& seeds, const CutOptions& opt = {});

// Writes the QP in CPLEX LP text format.
std::string qp_to_lp_text(const QpProblem& qp, const std::vector<std::string>& names = {});

}  // namespace accsp
