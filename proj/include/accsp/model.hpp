#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace accsp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Realization = std::span<const double>;

// Coefficient contribution selected by an integer-valued realization column.
struct TableTerm {
    int column = 0;
    std::vector<Vec> grad;       // one gradient contribution per table row
    std::vector<double> offset;  // one offset contribution per table row

    bool operator==(const TableTerm&) const = default;
};

// q(x,z) = 1/2 x'Qx + a(z)'x + b(z),  a(z) = a + A_z z + tables,  b(z) = b + b_z'z + tables.
struct SmoothConvexPiece {
    Vec a;
    double b = 0.0;
    Mat Q;     // empty when affine
    Mat A_z;   // n x d, empty when the gradient does not depend on z
    Vec b_z;   // d, empty when the offset does not depend on z
    std::vector<TableTerm> tables;

    static SmoothConvexPiece affine(Vec a, double b);
    static SmoothConvexPiece constant(int n, double b);

    int dim() const { return static_cast<int>(a.size()); }
    bool is_affine() const { return Q.size() == 0; }
    bool depends_on_z() const;

    Vec grad_at(const Vec& x, Realization z) const;
    double offset_at(Realization z) const;
    double value(const Vec& x, Realization z) const;
    Vec gradient(const Vec& x, Realization z) const;

    SmoothConvexPiece scaled(double s) const;
    // Sum of two pieces; both must share dimension.
    SmoothConvexPiece plus(const SmoothConvexPiece& o) const;

    bool operator==(const SmoothConvexPiece& o) const;
};

struct DcMaxFunction {
    std::vector<SmoothConvexPiece> g;
    std::vector<SmoothConvexPiece> h;

    int dim() const;
    bool depends_on_z() const;
    void check() const;

    bool operator==(const DcMaxFunction&) const = default;
};

struct DcEval {
    double value = 0.0;
    double gmax = 0.0;
    double hmax = 0.0;
    std::vector<int> argmax_g;
    std::vector<int> argmax_h;
};

// Ties within this absolute distance of the maximum are treated as exact ties.
inline constexpr double kTieTol = 1e-12;

DcEval eval_dc(const DcMaxFunction& f, const Vec& x, Realization z, double eps = 0.0);
double dc_value(const DcMaxFunction& f, const Vec& x, Realization z);
std::vector<int> eps_active(const std::vector<double>& values, double eps);

double dir_deriv_dc(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& v);
// Upper bound g'(x;v) + h'(x;-v) of the Clarke directional derivative.
double clarke_dc(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& v);

// Piecewise affine outer function phi(y) = max_i (a_i'y + alpha_i) - max_j (b_j'y + beta_j).
struct PiecewiseAffine {
    std::vector<Vec> a;
    std::vector<double> alpha;
    std::vector<Vec> b;
    std::vector<double> beta;

    double value(const Vec& y) const;
};

DcMaxFunction dc_compose(const PiecewiseAffine& phi, const std::vector<DcMaxFunction>& inner,
                         std::size_t piece_cap = 100000);

struct LogicalEvent {
    enum class Kind { leaf, interval, all_of, any_of };
    Kind kind = Kind::leaf;
    DcMaxFunction f;     // leaf: f >= 0; interval: lo <= f <= hi
    double lo = 0.0;
    double hi = 0.0;
    std::vector<LogicalEvent> children;

    static LogicalEvent leaf(DcMaxFunction f);
    static LogicalEvent interval(DcMaxFunction f, double lo, double hi);
    static LogicalEvent all(std::vector<LogicalEvent> c);
    static LogicalEvent any(std::vector<LogicalEvent> c);
};

DcMaxFunction build_logical_event(const LogicalEvent& spec);

struct Polytope {
    Mat A;  // m x n
    Vec b;
    Vec lo; // empty or n entries (may be -inf)
    Vec hi;

    int dim() const;
    // All constraints as G x <= h, boxes included.
    void as_inequalities(Mat& G, Vec& h) const;
    bool contains(const Vec& x, double tol = 1e-9) const;
    std::vector<int> active_rows(const Vec& x, double tol = 1e-9) const;
    bool operator==(const Polytope&) const = default;
};

struct Bounds {
    Vec lower;
    Vec upper;
};

// Solves the 2n coordinate LPs; throws std::invalid_argument when empty or unbounded.
Bounds polytope_bounds(const Polytope& p);

struct RandomComponent {
    enum class Dist { uniform, bernoulli, normal };
    Dist dist = Dist::uniform;
    double a = 0.0, b = 1.0;     // uniform
    double p = 0.5;              // bernoulli: P(z = v1)
    double v0 = 0.0, v1 = 1.0;
    double mu = 0.0, sigma = 1.0;
    bool operator==(const RandomComponent&) const = default;
};

struct RandomSource {
    enum class Kind { table, parametric, file };
    Kind kind = Kind::parametric;
    int dim = 1;
    std::vector<std::vector<double>> rows;  // table support points or file rows
    std::vector<double> probs;
    std::vector<RandomComponent> components;
    std::string path;
    bool operator==(const RandomSource&) const = default;
};

struct ConstraintRow {
    std::vector<double> e;  // one coefficient per functional
    double zeta = 0.0;

    double e_plus(std::size_t l) const { return e[l] > 0 ? e[l] : 0.0; }
    double e_minus(std::size_t l) const { return e[l] < 0 ? -e[l] : 0.0; }
    bool operator==(const ConstraintRow&) const = default;
};

struct AccProblem {
    std::string name;
    int n = 1;
    Polytope domain;
    DcMaxFunction objective;
    std::vector<DcMaxFunction> functionals;
    std::vector<ConstraintRow> rows;
    RandomSource source;
    std::string oracle;  // optional closed-form oracle id

    int K() const { return static_cast<int>(rows.size()); }
    int L() const { return static_cast<int>(functionals.size()); }
    void check() const;
    bool operator==(const AccProblem&) const = default;
};

struct AuditReport {
    double min_objective = 0.0;
    double max_gradient_norm = 0.0;
    std::size_t points = 0;
    bool objective_nonnegative = true;
};

// Grid/sample audit of c0 >= 0 and of piece gradient norms over X x support.
AuditReport audit_problem(const AccProblem& p, std::size_t budget = 2000, unsigned long long seed = 7);

}  // namespace accsp
