#pragma once

#include "accsp/approx.hpp"
#include "accsp/model.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace accsp {

// Restricted and relaxed expectations for Z = z - max(2x, 1-2x), z ~ U(-1,1), identity theta.
double ex41_cbar_rst(double x, double gamma);
double ex41_cbar_rlx(double x, double gamma);
// One-sided derivative in direction v (sign of v picks the side).
double ex41_cbar_rst_dd(double x, double gamma, double v);
double ex41_cbar_rlx_dd(double x, double gamma, double v);
// P(Z - max(2x,1-2x) >= 0).
double ex41_probability(double x);

// Z = min(f z, z + 1), z ~ U(-2,2), f in [2, a].
double ex61_h(double f, double gamma, Side side);

// Z = x z with z = +-1 equally likely: exact expectation of the rows.
double ex31_row(double x, double e, double gamma, Variant variant);

struct BruteForceResult {
    Vec x;
    double value = 0.0;
    std::size_t evaluations = 0;
};

BruteForceResult brute_force_min(const std::function<double(const Vec&)>& f, const Polytope& domain,
                                 double resolution);

// Exact expectation of the constraint rows, either closed form or by full-support enumeration.
struct ExpectationOracle {
    std::string id;
    std::function<double(int k, const Vec& x, double gamma, Variant variant)> value;
    std::function<double(int k, const Vec& x, double gamma, Variant variant, const Vec& v)> dd;
};

std::optional<ExpectationOracle> make_expectation_oracle(const AccProblem& p, const ThetaPair& theta);

// Mean of c0 with its directional derivative (exact when the objective is deterministic or the source finite).
struct ObjectiveOracle {
    std::function<double(const Vec& x)> value;
    std::function<double(const Vec& x, const Vec& v)> dd;
    std::function<double(const Vec& x, const Vec& v)> clarke;
};

ObjectiveOracle make_objective_oracle(const AccProblem& p, std::span<const double> samples);

// Bundled worked examples as problems.
AccProblem ex41_problem(bool relaxed);
AccProblem ex31_problem(double e, double zeta);
AccProblem ex61_problem(double a);
// min x + 1 on [-1/2, 1/2] s.t. P(z - 2x >= 0) <= 1/2, z ~ U(-1,1); objective Lipschitz modulus 1.
AccProblem penalty_threshold_problem();

}  // namespace accsp
