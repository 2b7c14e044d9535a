#pragma once

#include "accsp/approx.hpp"
#include "accsp/sampling.hpp"
#include "accsp/stationarity.hpp"
#include "accsp/subsolver.hpp"
#include "accsp/surrogate.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace accsp {

// V_lambda(x) = mean c0 + lambda * sum_k max(mean c_k - zeta_k, 0) on the given samples.
double penalized_value(const AccProblem& p, std::span<const double> samples, const Vec& x, double gamma,
                       const ThetaPair& theta, Variant variant, double lambda);
std::vector<double> row_means(const AccProblem& p, std::span<const double> samples, const Vec& x, double gamma,
                              const ThetaPair& theta, Variant variant);

SurrogateProgram build_program(const AccProblem& p, std::span<const double> samples, const Vec& xbar, double gamma,
                               const std::shared_ptr<const ThetaPair>& theta, Variant variant,
                               const SurrogatePolicy& policy, double lambda, double rho, int threads = 1);

struct TraceRow {
    int nu = 0;
    std::size_t N = 0;
    double lambda = 0.0, rho = 0.0, gamma = 0.0;
    Vec x;
    double V = 0.0;
    std::vector<double> residuals;
    double step = 0.0;
    double V_prev = 0.0;
    bool ledger_ok = true;
    std::size_t branches = 0;
};

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int n, int K);
std::string format_double(double v);

struct SpsaOptions {
    Variant variant = Variant::rst;
    SurrogatePolicy policy = SurrogatePolicy::subgradient();
    GlobalOptions global;
    int nu_max = 12;
    std::uint64_t seed = 1;
    double early_step = 1e-7;
    int early_count = 3;
    bool diminishing = false;   // forces the linearized full-index surrogate
    double ledger_rel_tol = 1e-12;
};

struct SpsaResult {
    std::vector<TraceRow> trace;
    Vec x;
    double residual = 0.0;
    std::size_t N_final = 0;
    bool ledger_ok = true;
    double weighted_step_sum = 0.0;
    bool step_window_decreasing = true;
    std::optional<bool> feasible_exact;
    std::vector<double> exact_rows;
    StationarityVerdict verdict;
    double gamma_final = 0.0;
    double gamma_limit = 0.0;
};

SpsaResult spsa_run(const AccProblem& p, const Schedule& s, const ThetaPair& theta, const Vec& x1,
                    const SpsaOptions& opt);

struct SaaOptions {
    Variant variant = Variant::rst;
    SurrogatePolicy policy = SurrogatePolicy::subgradient();
    GlobalOptions global;
    double rho = 1.0;
    int max_outer = 200;
    double step_tol = 1e-7;
    std::uint64_t seed = 1;
};

struct SaaResult {
    Vec x;
    double residual = 0.0;
    double value = 0.0;
    int outer = 0;
    StationarityVerdict verdict;
    std::vector<TraceRow> trace;  // one row per outer iteration
};

SaaResult saa_penalty_solve(const AccProblem& p, std::size_t N, double gamma, double lambda, const ThetaPair& theta,
                            const Vec& start, const SaaOptions& opt);

// d-stationarity of the penalized empirical objective over X.
StationarityVerdict penalized_stationarity(const AccProblem& p, std::span<const double> samples, const Vec& x,
                                           double gamma, const ThetaPair& theta, Variant variant, double lambda);

// B-stationarity of the gamma problem, using the exact oracle when available.
StationarityVerdict constrained_stationarity(const AccProblem& p, std::span<const double> samples, const Vec& x,
                                             double gamma, const ThetaPair& theta, Variant variant,
                                             StationarityMode mode = StationarityMode::B,
                                             const StationarityOptions& sopt = {});

}  // namespace accsp
