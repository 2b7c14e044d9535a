#include "accsp/drivers.hpp"

#include "accsp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>

namespace accsp {

namespace {

std::size_t sample_count(const AccProblem& p, std::span<const double> samples) {
    return samples.size() / static_cast<std::size_t>(p.source.dim);
}

Realization sample_at(const AccProblem& p, std::span<const double> samples, std::size_t s) {
    const auto d = static_cast<std::size_t>(p.source.dim);
    return samples.subspan(s * d, d);
}

double objective_mean(const AccProblem& p, std::span<const double> samples, const Vec& x) {
    if (!p.objective.depends_on_z()) return dc_value(p.objective, x, {});
    const std::size_t N = sample_count(p, samples);
    std::vector<double> v(N);
    for (std::size_t s = 0; s < N; ++s) v[s] = dc_value(p.objective, x, sample_at(p, samples, s));
    return pairwise_sum(v) / static_cast<double>(N);
}

}  // namespace

std::vector<double> row_means(const AccProblem& p, std::span<const double> samples, const Vec& x, double gamma,
                              const ThetaPair& theta, Variant variant) {
    const std::size_t N = sample_count(p, samples);
    if (N == 0) throw std::invalid_argument("row means need at least one sample");
    std::vector<double> out(static_cast<std::size_t>(p.K()));
    std::vector<double> v(N);
    for (int k = 0; k < p.K(); ++k) {
        for (std::size_t s = 0; s < N; ++s) v[s] = c_row(p, k, x, sample_at(p, samples, s), gamma, theta, variant);
        out[static_cast<std::size_t>(k)] = pairwise_sum(v) / static_cast<double>(N);
    }
    return out;
}

double penalized_value(const AccProblem& p, std::span<const double> samples, const Vec& x, double gamma,
                       const ThetaPair& theta, Variant variant, double lambda) {
    double r = 0.0;
    auto m = row_means(p, samples, x, gamma, theta, variant);
    for (int k = 0; k < p.K(); ++k) r += std::max(m[static_cast<std::size_t>(k)] - p.rows[static_cast<std::size_t>(k)].zeta, 0.0);
    return objective_mean(p, samples, x) + lambda * r;
}

SurrogateProgram build_program(const AccProblem& p, std::span<const double> samples, const Vec& xbar, double gamma,
                               const std::shared_ptr<const ThetaPair>& theta, Variant variant,
                               const SurrogatePolicy& policy, double lambda, double rho, int threads) {
    const std::size_t N = sample_count(p, samples);
    if (N == 0) throw std::invalid_argument("surrogate program needs at least one sample");
    SurrogateProgram prog;
    prog.xbar = xbar;
    prog.domain = p.domain;
    prog.lambda = lambda;
    prog.rho = rho;
    for (const auto& r : p.rows) prog.zeta.push_back(r.zeta);
    if (p.objective.depends_on_z()) {
        prog.objective.resize(N);
        prog.objective_weight = 1.0 / static_cast<double>(N);
    } else {
        prog.objective.push_back(build_surrogate_objective(p, {}, xbar, policy));
        prog.objective_weight = 1.0;
    }
    prog.rows.assign(static_cast<std::size_t>(p.K()), std::vector<SurrogateRow>(N));
    auto fill = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            auto z = sample_at(p, samples, s);
            if (p.objective.depends_on_z()) prog.objective[s] = build_surrogate_objective(p, z, xbar, policy);
            for (int k = 0; k < p.K(); ++k)
                prog.rows[static_cast<std::size_t>(k)][s] =
                    build_surrogate_row(p, k, z, gamma, theta, xbar, policy, variant);
        }
    };
    const std::size_t T = static_cast<std::size_t>(std::max(1, threads));
    if (T == 1 || N < 2 * T) {
        fill(0, N);
    } else {
        std::vector<std::future<void>> jobs;
        const std::size_t chunk = (N + T - 1) / T;
        for (std::size_t lo = 0; lo < N; lo += chunk)
            jobs.push_back(std::async(std::launch::async, fill, lo, std::min(N, lo + chunk)));
        for (auto& j : jobs) j.get();
    }
    return prog;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int n, int K) {
    os << "nu,N,lambda,rho,gamma";
    for (int i = 0; i < n; ++i) os << ",x_" << i;
    os << ",V";
    for (int k = 0; k < K; ++k) os << ",residual_" << k;
    os << ",step\n";
    for (const auto& t : trace) {
        os << t.nu << ',' << t.N << ',' << format_double(t.lambda) << ',' << format_double(t.rho) << ','
           << format_double(t.gamma);
        for (int i = 0; i < n; ++i) os << ',' << format_double(t.x(i));
        os << ',' << format_double(t.V);
        for (int k = 0; k < K; ++k) os << ',' << format_double(t.residuals[static_cast<std::size_t>(k)]);
        os << ',' << format_double(t.step) << '\n';
    }
}

SpsaResult spsa_run(const AccProblem& p, const Schedule& s, const ThetaPair& theta, const Vec& x1,
                    const SpsaOptions& opt) {
    p.check();
    theta.validate();
    if (x1.size() != p.n) throw std::invalid_argument("start point has the wrong dimension");
    if (!p.domain.contains(x1)) throw std::invalid_argument("start point is outside the domain");
    if (opt.nu_max < 1) throw std::invalid_argument("nu_max must be at least 1");
    auto report = validate_schedule(s, std::max(opt.nu_max, s.constants.nu_bar + 1));
    if (!report.ok) {
        std::string msg = "schedule rejected:";
        for (const auto& v : report.violations) msg += " " + v.tag + "@" + std::to_string(v.nu);
        throw std::invalid_argument(msg);
    }

    auto th = std::make_shared<const ThetaPair>(theta);
    SurrogatePolicy policy = opt.policy;
    GlobalOptions global = opt.global;
    if (opt.diminishing) {
        policy = SurrogatePolicy::linearized_full();
        global.strategy = GlobalStrategy::local_branch;
    }

    SampleStore store(p.source, opt.seed);
    SpsaResult res;
    Vec x = x1;
    int small_steps = 0;
    double gamma = 0.0;
    for (int nu = 1; nu <= opt.nu_max; ++nu) {
        const std::size_t N = s.N_at(nu);
        if (N > store.size()) store.extend(N);
        auto samples = store.view().subspan(0, N * static_cast<std::size_t>(p.source.dim));
        gamma = s.gamma_at(nu);
        const double lambda = s.lambda_at(nu), rho = s.rho_at(nu);

        auto prog = build_program(p, samples, x, gamma, th, opt.variant, policy, lambda, rho, global.threads);
        auto gr = solve_surrogate_global(prog, global);

        TraceRow row;
        row.nu = nu;
        row.N = N;
        row.lambda = lambda;
        row.rho = rho;
        row.gamma = gamma;
        row.V_prev = penalized_value(p, samples, x, gamma, theta, opt.variant, lambda);
        row.step = (gr.x - x).norm();
        x = gr.x;
        row.x = x;
        auto means = row_means(p, samples, x, gamma, theta, opt.variant);
        double resid = 0.0;
        for (int k = 0; k < p.K(); ++k) {
            double r = std::max(means[static_cast<std::size_t>(k)] - p.rows[static_cast<std::size_t>(k)].zeta, 0.0);
            row.residuals.push_back(r);
            resid += r;
        }
        row.V = objective_mean(p, samples, x) + lambda * resid;
        row.branches = gr.branches_solved;
        const double lhs = row.V + 0.5 * rho * row.step * row.step;
        row.ledger_ok = lhs <= row.V_prev + opt.ledger_rel_tol * std::max(1.0, std::abs(row.V_prev));
        res.ledger_ok = res.ledger_ok && row.ledger_ok;
        res.weighted_step_sum += rho / lambda * row.step * row.step;
        res.trace.push_back(row);

        small_steps = row.step <= opt.early_step ? small_steps + 1 : 0;
        if (opt.early_count > 0 && small_steps >= opt.early_count) break;
    }

    const auto& last = res.trace.back();
    res.x = x;
    res.N_final = last.N;
    res.gamma_final = gamma;
    res.gamma_limit = s.gamma_limit(opt.nu_max);
    for (double r : last.residuals) res.residual += r;

    // Minimum step over consecutive windows of ten iterations should not increase.
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t lo = 0; lo + 10 <= res.trace.size(); lo += 10) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < lo + 10; ++i) m = std::min(m, res.trace[i].step);
        if (m > prev * (1 + 1e-12) + 1e-15) res.step_window_decreasing = false;
        prev = m;
    }

    auto oracle = make_expectation_oracle(p, theta);
    const double g_eval = s.gamma_constant() ? gamma : res.gamma_final;
    if (oracle) {
        bool feas = true;
        for (int k = 0; k < p.K(); ++k) {
            double v = oracle->value(k, x, g_eval, opt.variant);
            res.exact_rows.push_back(v);
            feas = feas && v <= p.rows[static_cast<std::size_t>(k)].zeta + 5e-3;
        }
        res.feasible_exact = feas;
    }
    auto samples = store.view().subspan(0, res.N_final * static_cast<std::size_t>(p.source.dim));
    // A sampled iterate only locates the active set to sampling accuracy.
    StationarityOptions sopt;
    sopt.active_tol = sopt.feas_tol = 3.0 / std::sqrt(static_cast<double>(res.N_final));
    res.verdict = constrained_stationarity(p, samples, x, g_eval, theta, opt.variant, StationarityMode::B, sopt);
    res.verdict.regime += "; active tolerance " + format_double(sopt.active_tol);
    if (!s.gamma_constant()) res.verdict.note += (res.verdict.note.empty() ? "" : "; ") + std::string("evaluated at the final gamma");
    return res;
}

SaaResult saa_penalty_solve(const AccProblem& p, std::size_t N, double gamma, double lambda, const ThetaPair& theta,
                            const Vec& start, const SaaOptions& opt) {
    p.check();
    theta.validate();
    if (N == 0) throw std::invalid_argument("sample size must be positive");
    if (!(lambda >= 0)) throw std::invalid_argument("penalty parameter must be nonnegative");
    if (!(opt.rho > 0)) throw std::invalid_argument("proximal parameter must be positive");
    if (!p.domain.contains(start)) throw std::invalid_argument("start point is outside the domain");
    SampleStore store(p.source, opt.seed);
    store.extend(N);
    auto samples = store.view();
    auto th = std::make_shared<const ThetaPair>(theta);

    SaaResult res;
    Vec x = start;
    for (res.outer = 1; res.outer <= opt.max_outer; ++res.outer) {
        auto prog = build_program(p, samples, x, gamma, th, opt.variant, opt.policy, lambda, opt.rho,
                                  opt.global.threads);
        auto gr = solve_surrogate_global(prog, opt.global);
        TraceRow row;
        row.nu = res.outer;
        row.N = N;
        row.lambda = lambda;
        row.rho = opt.rho;
        row.gamma = gamma;
        row.V_prev = penalized_value(p, samples, x, gamma, theta, opt.variant, lambda);
        row.step = (gr.x - x).norm();
        x = gr.x;
        row.x = x;
        double resid = 0.0;
        auto m = row_means(p, samples, x, gamma, theta, opt.variant);
        for (int k = 0; k < p.K(); ++k) {
            double r = std::max(m[static_cast<std::size_t>(k)] - p.rows[static_cast<std::size_t>(k)].zeta, 0.0);
            row.residuals.push_back(r);
            resid += r;
        }
        row.V = objective_mean(p, samples, x) + lambda * resid;
        row.branches = gr.branches_solved;
        res.trace.push_back(row);
        if (row.step <= opt.step_tol) break;
    }
    res.outer = std::min(res.outer, opt.max_outer);
    res.x = x;
    auto means = row_means(p, samples, x, gamma, theta, opt.variant);
    for (int k = 0; k < p.K(); ++k)
        res.residual += std::max(means[static_cast<std::size_t>(k)] - p.rows[static_cast<std::size_t>(k)].zeta, 0.0);
    res.value = objective_mean(p, samples, x) + lambda * res.residual;
    res.verdict = penalized_stationarity(p, samples, x, gamma, theta, opt.variant, lambda);
    return res;
}

StationarityVerdict penalized_stationarity(const AccProblem& p, std::span<const double> samples, const Vec& x,
                                           double gamma, const ThetaPair& theta, Variant variant, double lambda) {
    auto obj = make_objective_oracle(p, samples);
    auto rows = std::make_shared<EmpiricalRows>(p, samples, gamma, theta, variant);
    DdFn dd = [&, rows](const Vec& v) { return obj.dd(x, v) + lambda * residual_dd(*rows, x, v).exact; };
    DdFn cl = [&, rows](const Vec& v) { return obj.clarke(x, v) + lambda * residual_dd(*rows, x, v).clarke_upper; };
    return check_stationarity(dd, cl, {}, p.domain, x, StationarityMode::d);
}

StationarityVerdict constrained_stationarity(const AccProblem& p, std::span<const double> samples, const Vec& x,
                                             double gamma, const ThetaPair& theta, Variant variant,
                                             StationarityMode mode, const StationarityOptions& sopt) {
    auto obj = make_objective_oracle(p, samples);
    std::optional<ExpectationOracle> oracle;
    try {
        oracle = make_expectation_oracle(p, theta);
        if (oracle) oracle->value(0, x, gamma, variant);
    } catch (const std::invalid_argument&) {
        oracle.reset();
    }
    std::optional<EmpiricalRows> emp;
    if (!oracle) emp.emplace(p, samples, gamma, theta, variant);
    std::vector<ConstraintAtPoint> cons;
    for (int k = 0; k < p.K(); ++k) {
        const double zeta = p.rows[static_cast<std::size_t>(k)].zeta;
        ConstraintAtPoint c;
        if (oracle) {
            c.value = oracle->value(k, x, gamma, variant) - zeta;
            c.dd = [&, k](const Vec& v) { return oracle->dd(k, x, gamma, variant, v); };
            c.clarke = c.dd;
        } else {
            c.value = emp->value(k, x) - zeta;
            c.dd = [&, k](const Vec& v) { return emp->dd(k, x, v); };
            c.clarke = [&, k](const Vec& v) { return emp->clarke(k, x, v); };
        }
        cons.push_back(c);
    }
    DdFn dd = [&](const Vec& v) { return obj.dd(x, v); };
    DdFn cl = [&](const Vec& v) { return obj.clarke(x, v); };
    try {
        auto v = check_stationarity(dd, cl, cons, p.domain, x, mode, sopt);
        v.regime += oracle ? "; exact rows (" + oracle->id + ")" : "; empirical rows";
        return v;
    } catch (const std::invalid_argument& e) {
        StationarityVerdict v;
        v.kind = StationarityVerdict::Kind::indeterminate;
        v.witness = Vec::Zero(x.size());
        v.note = std::string("point is infeasible for the approximated problem: ") + e.what();
        return v;
    }
}

}  // namespace accsp
