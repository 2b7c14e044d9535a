#pragma once

#include "accsp/approx.hpp"
#include "accsp/model.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace accsp {

// Piece specialized at one realization: qscale * 1/2 x'Qx + a'x + b.
struct ConcretePiece {
    Vec a;
    double b = 0.0;
    double qscale = 0.0;
    std::shared_ptr<const Mat> Q;

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    bool is_affine() const { return !Q || qscale == 0.0; }
};

// constant + weight * outer(max_p piece_p(x) + lin_a'x + lin_b), weight >= 0 and outer convex nondecreasing.
struct ConvexAtom {
    enum class Outer { identity, theta_cvx, theta_cve_mirror };
    Outer outer = Outer::identity;
    double constant = 0.0;
    double weight = 1.0;
    std::vector<ConcretePiece> pieces;
    Vec lin_a;
    double lin_b = 0.0;
    std::shared_ptr<const ThetaPair> theta;
    int sample = -1, row = -1, functional = -1;

    double inner(const Vec& x) const;
    double outer_value(double u) const;
    Slopes outer_slopes(double u) const;
    double value(const Vec& x) const;
    Vec subgradient(const Vec& x) const;
    double dd(const Vec& x, const Vec& v) const;
};

struct MinList {
    std::vector<ConvexAtom> atoms;

    double value(const Vec& x) const;
    int argmin(const Vec& x) const;
    double dd(const Vec& x, const Vec& v) const;
};

enum class IndexPolicy { eps_argmax, full, single, subgradient, linearized_full };

struct SurrogatePolicy {
    IndexPolicy kind = IndexPolicy::eps_argmax;
    double eps = 1e-9;

    static SurrogatePolicy subgradient() { return {IndexPolicy::subgradient, 0.0}; }
    static SurrogatePolicy eps_argmax(double e = 1e-9) { return {IndexPolicy::eps_argmax, e}; }
    static SurrogatePolicy full() { return {IndexPolicy::full, 0.0}; }
    static SurrogatePolicy single() { return {IndexPolicy::single, 0.0}; }
    static SurrogatePolicy linearized_full() { return {IndexPolicy::linearized_full, 0.0}; }
};

SurrogatePolicy parse_policy(const std::string& s);
std::string format_policy(const SurrogatePolicy& p);

struct SurrogateRow {
    std::vector<MinList> terms;
    Vec xbar;
    std::vector<double> z;
    double gamma = 0.0;
    Variant variant = Variant::rst;
    SurrogatePolicy policy;

    double value(const Vec& x) const;
    double dd(const Vec& x, const Vec& v) const;
    bool single_atom() const;
    std::size_t atom_count() const;
};

SurrogateRow build_surrogate_rst(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy);
SurrogateRow build_surrogate_rlx(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy);
SurrogateRow build_surrogate_row(const AccProblem& p, int k, Realization z, double gamma,
                                 const std::shared_ptr<const ThetaPair>& theta, const Vec& xbar,
                                 const SurrogatePolicy& policy, Variant variant);
SurrogateRow build_surrogate_objective(const AccProblem& p, Realization z, const Vec& xbar,
                                       const SurrogatePolicy& policy);

// Linearized functionals max_i g_i - max_j Lh_j and max_i Lg_i - max_j h_j at xbar.
double LZ_h(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& xbar);
double LZ_g(const DcMaxFunction& f, const Vec& x, Realization z, const Vec& xbar);

// Limit functions at gamma = 0 built from the linearized functionals.
double c_limit_ub(const AccProblem& p, int k, const Vec& x, Realization z, const Vec& xbar);
double c_limit_lb(const AccProblem& p, int k, const Vec& x, Realization z, const Vec& xbar);

struct SurrogateCheckReport {
    double touching_error = 0.0;
    std::size_t majorization_violations = 0;
    double max_violation = 0.0;
    double dd_error = 0.0;
    bool dd_consistent = true;
};

SurrogateCheckReport check_surrogate_conditions(const SurrogateRow& row,
                                                const std::function<double(const Vec&)>& c_value,
                                                const std::function<double(const Vec&, const Vec&)>& c_dd,
                                                const std::vector<Vec>& probes, const std::vector<Vec>& directions,
                                                double major_tol = 1e-12);

}  // namespace accsp
