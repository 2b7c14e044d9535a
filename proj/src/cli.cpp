#include "accsp/cli.hpp"

#include "accsp/drivers.hpp"
#include "accsp/oracles.hpp"
#include "accsp/problem_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <fstream>
#include <thread>

namespace accsp {

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Variant parse_variant(const std::string& s) {
    if (s == "rst") return Variant::rst;
    if (s == "rlx") return Variant::rlx;
    throw ConfigError("variant must be rst or rlx, got '" + s + "'");
}

StationarityMode parse_mode(const std::string& s) {
    if (s == "B") return StationarityMode::B;
    if (s == "d") return StationarityMode::d;
    if (s == "weak-C") return StationarityMode::weak_C;
    throw ConfigError("stationarity must be B, d or weak-C, got '" + s + "'");
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

void write_verdict(std::ostream& os, const StationarityVerdict& v) {
    os << "verdict: " << to_string(v.kind) << "\n";
    os << "regime: " << v.regime << "\n";
    os << "tolerance: " << format_double(v.tolerance) << "\n";
    os << "witness:";
    for (Eigen::Index i = 0; i < v.witness.size(); ++i) os << ' ' << format_double(v.witness(i));
    os << "\nwitness_dd: " << format_double(v.witness_dd) << "\n";
    if (!v.note.empty()) os << "note: " << v.note << "\n";
}

void write_point(const std::filesystem::path& path, const Vec& x) {
    auto f = open_out(path);
    for (Eigen::Index i = 0; i < x.size(); ++i) f << (i ? "," : "") << "x_" << i;
    f << "\n";
    for (Eigen::Index i = 0; i < x.size(); ++i) f << (i ? "," : "") << format_double(x(i));
    f << "\n";
}

GlobalOptions global_options(const RunConfig& cfg, GlobalStrategy fallback) {
    GlobalOptions g;
    g.strategy = cfg.strategy.empty() ? fallback : parse_strategy(cfg.strategy);
    g.threads = cfg.threads;
    return g;
}

Vec start_point(const RunConfig& cfg, const AccProblem& p) {
    if (!cfg.start.empty()) {
        if (static_cast<int>(cfg.start.size()) != p.n) throw ConfigError("--start needs one value per coordinate");
        return to_vec(cfg.start);
    }
    auto b = polytope_bounds(p.domain);
    return (b.lower + b.upper) / 2;
}

int run_spsa(const RunConfig& cfg, const AccProblem& p, const ThetaPair& theta, const std::filesystem::path& out,
             std::ostream& os) {
    if (cfg.schedule.empty()) throw ConfigError("mode spsa needs --schedule");
    int nu_max = 12;
    Schedule s;
    try {
        s = load_schedule(cfg.schedule, &nu_max);
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
    if (cfg.nu_max > 0) nu_max = cfg.nu_max;
    auto rep = validate_schedule(s, std::max(nu_max, s.constants.nu_bar + 1));
    if (!rep.ok) {
        std::string msg = "schedule invalid:";
        for (const auto& v : rep.violations) msg += "\n  " + v.tag + " at nu=" + std::to_string(v.nu) + ": " + v.detail;
        throw ScheduleError(msg);
    }
    SpsaOptions opt;
    opt.variant = parse_variant(cfg.variant);
    opt.policy = cfg.policy.empty() ? SurrogatePolicy::subgradient() : parse_policy(cfg.policy);
    opt.global = global_options(cfg, GlobalStrategy::single_branch);
    opt.nu_max = nu_max;
    opt.seed = cfg.seed;
    opt.diminishing = cfg.diminishing;
    auto r = spsa_run(p, s, theta, start_point(cfg, p), opt);
    {
        auto f = open_out(out / "trace.csv");
        write_trace_csv(f, r.trace, p.n, p.K());
    }
    write_point(out / "final_point.csv", r.x);
    auto f = open_out(out / "verdict.txt");
    for (std::ostream* o : {static_cast<std::ostream*>(&f), &os}) {
        write_verdict(*o, r.verdict);
        *o << "iterations: " << r.trace.size() << "\n";
        *o << "final_N: " << r.N_final << "\n";
        *o << "penalty_residual: " << format_double(r.residual) << "\n";
        *o << "descent_ledger: " << (r.ledger_ok ? "ok" : "violated") << "\n";
        if (r.feasible_exact) *o << "feasible_exact: " << (*r.feasible_exact ? "yes" : "no") << "\n";
    }
    return exit_ok;
}

int run_saa(const RunConfig& cfg, const AccProblem& p, const ThetaPair& theta, const std::filesystem::path& out,
            std::ostream& os) {
    if (cfg.N == 0) throw ConfigError("mode saa needs --N > 0");
    if (!(cfg.gamma > 0)) throw ConfigError("mode saa needs --gamma > 0");
    SaaOptions opt;
    opt.variant = parse_variant(cfg.variant);
    opt.policy = cfg.policy.empty() ? SurrogatePolicy::subgradient() : parse_policy(cfg.policy);
    opt.global = global_options(cfg, GlobalStrategy::single_branch);
    opt.rho = cfg.rho;
    opt.max_outer = cfg.max_outer;
    opt.seed = cfg.seed;
    auto r = saa_penalty_solve(p, cfg.N, cfg.gamma, cfg.lambda, theta, start_point(cfg, p), opt);
    {
        auto f = open_out(out / "trace.csv");
        write_trace_csv(f, r.trace, p.n, p.K());
    }
    write_point(out / "final_point.csv", r.x);
    auto f = open_out(out / "verdict.txt");
    for (std::ostream* o : {static_cast<std::ostream*>(&f), &os}) {
        write_verdict(*o, r.verdict);
        *o << "outer_iterations: " << r.outer << "\n";
        *o << "penalized_value: " << format_double(r.value) << "\n";
        *o << "penalty_residual: " << format_double(r.residual) << "\n";
    }
    return exit_ok;
}

int run_scan(const RunConfig& cfg, const AccProblem& p, const ThetaPair& theta, const std::filesystem::path& out,
             std::ostream& os) {
    if (p.n > 2) throw ConfigError("feasibility-scan supports n <= 2");
    if (cfg.grid < 2) throw ConfigError("--grid must be at least 2");
    if (!(cfg.gamma > 0)) throw ConfigError("feasibility-scan needs --gamma > 0");
    auto b = polytope_bounds(p.domain);
    auto oracle = make_expectation_oracle(p, theta);
    std::vector<double> samples;
    if (!oracle || p.source.kind != RandomSource::Kind::table) {
        SampleStore store(p.source, cfg.seed);
        auto v = store.extend(cfg.N);
        samples.assign(v.begin(), v.end());
    }
    std::span<const double> sv(samples);
    auto row_value = [&](int k, const Vec& x, Variant var) {
        if (oracle) {
            try {
                return oracle->value(k, x, cfg.gamma, var);
            } catch (const std::invalid_argument&) {
            }
        }
        return row_means(p, sv, x, cfg.gamma, theta, var)[static_cast<std::size_t>(k)];
    };
    auto indicator = [&](int k, const Vec& x) {
        if (p.oracle == "ex41" && p.K() == 1) return ex41_probability(x(0));
        if (p.source.kind == RandomSource::Kind::table) {
            double s = 0.0;
            for (std::size_t i = 0; i < p.source.rows.size(); ++i)
                s += p.source.probs[i] * c_row_indicator(p, k, x, p.source.rows[i]);
            return s;
        }
        const std::size_t N = sv.size() / static_cast<std::size_t>(p.source.dim);
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            s += c_row_indicator(p, k, x, sv.subspan(i * p.source.dim, p.source.dim));
        return s / static_cast<double>(N);
    };

    auto f = open_out(out / "feasibility_scan.csv");
    for (int i = 0; i < p.n; ++i) f << (i ? "," : "") << "x_" << i;
    for (int k = 0; k < p.K(); ++k) f << ",prob_" << k << ",rst_" << k << ",rlx_" << k << ",zeta_" << k;
    f << "\n";
    std::size_t count = 0;
    auto emit = [&](const Vec& x) {
        if (!p.domain.contains(x)) return;
        for (int i = 0; i < p.n; ++i) f << (i ? "," : "") << format_double(x(i));
        for (int k = 0; k < p.K(); ++k)
            f << ',' << format_double(indicator(k, x)) << ',' << format_double(row_value(k, x, Variant::rst)) << ','
              << format_double(row_value(k, x, Variant::rlx)) << ','
              << format_double(p.rows[static_cast<std::size_t>(k)].zeta);
        f << "\n";
        ++count;
    };
    auto coord = [&](int i, int j) {
        return b.lower(i) + (b.upper(i) - b.lower(i)) * static_cast<double>(j) / (cfg.grid - 1);
    };
    if (p.n == 1) {
        for (int j = 0; j < cfg.grid; ++j) emit(Vec::Constant(1, coord(0, j)));
    } else {
        for (int j = 0; j < cfg.grid; ++j)
            for (int l = 0; l < cfg.grid; ++l) {
                Vec x(2);
                x << coord(0, j), coord(1, l);
                emit(x);
            }
    }
    os << "feasibility scan: " << count << " points, rows from "
       << (oracle ? "exact oracle (" + oracle->id + ")" : std::string("empirical means")) << "\n";
    return exit_ok;
}

int run_verify(const RunConfig& cfg, const AccProblem& p, const ThetaPair& theta, const std::filesystem::path& out,
               std::ostream& os) {
    if (static_cast<int>(cfg.point.size()) != p.n) throw ConfigError("--point needs one value per coordinate");
    if (!(cfg.gamma > 0)) throw ConfigError("verify-point needs --gamma > 0");
    std::vector<double> samples;
    if (p.source.kind != RandomSource::Kind::table) {
        SampleStore store(p.source, cfg.seed);
        auto v = store.extend(cfg.N);
        samples.assign(v.begin(), v.end());
    } else {
        for (const auto& r : p.source.rows) samples.insert(samples.end(), r.begin(), r.end());
    }
    auto v = constrained_stationarity(p, samples, to_vec(cfg.point), cfg.gamma, theta, parse_variant(cfg.variant),
                                      parse_mode(cfg.stationarity));
    write_verdict(os, v);
    auto f = open_out(out / "verdict.txt");
    write_verdict(f, v);
    return exit_ok;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.mode == "selftest") {
            auto lines = run_selftest();
            bool ok = true;
            for (const auto& l : lines) {
                out << (l.pass ? "PASS " : "FAIL ") << l.name << (l.detail.empty() ? "" : "  " + l.detail) << "\n";
                ok = ok && l.pass;
            }
            return ok ? exit_ok : exit_selftest;
        }
        static const std::set<std::string> modes = {"spsa", "saa", "feasibility-scan", "verify-point"};
        if (!modes.count(cfg.mode)) throw ConfigError("unknown mode '" + cfg.mode + "'");
        if (cfg.problem.empty()) throw ConfigError("--problem is required");
        if (cfg.threads < 1) throw ConfigError("--threads must be positive");
        AccProblem p;
        ThetaPair theta;
        try {
            p = load_problem(cfg.problem, cfg.strict);
            theta = parse_theta(cfg.theta);
            theta.validate();
            parse_variant(cfg.variant);
        } catch (const LoadError& e) {
            throw ConfigError(e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        std::filesystem::path dir(cfg.out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
        if (cfg.mode == "spsa") return run_spsa(cfg, p, theta, dir, out);
        if (cfg.mode == "saa") return run_saa(cfg, p, theta, dir, out);
        if (cfg.mode == "feasibility-scan") return run_scan(cfg, p, theta, dir, out);
        return run_verify(cfg, p, theta, dir, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const ScheduleError& e) {
        err << e.what() << "\n";
        return exit_schedule;
    } catch (const std::exception& e) {
        err << "solver failure: " << e.what() << "\n";
        return exit_solver;
    }
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    if (const char* env = std::getenv("ACCSP_OUT_DIR")) cfg.out_dir = env;
    cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    CLI::App app{"Solver for stochastic programs with affine chance constraints"};
    app.add_option("--problem", cfg.problem, "Problem file (YAML)");
    app.add_option("--mode", cfg.mode, "spsa | saa | feasibility-scan | verify-point | selftest");
    app.add_option("--variant", cfg.variant, "rst | rlx");
    app.add_option("--theta", cfg.theta, "identity | pa:<bx>:<cvx>:<cve> | smooth:<p>");
    app.add_option("--schedule", cfg.schedule, "Schedule file (YAML), spsa mode");
    app.add_option("--policy", cfg.policy, "subgradient | full | single | linearized-full | eps-argmax[:eps]");
    app.add_option("--strategy", cfg.strategy, "enumerate | single-branch | local-branch");
    app.add_option("--seed", cfg.seed, "Sampling seed");
    app.add_option("--out", cfg.out_dir, "Output directory (default $ACCSP_OUT_DIR or .)");
    app.add_flag("--strict", cfg.strict, "Reject unknown keys in the problem file");
    app.add_option("--threads", cfg.threads, "Worker threads");
    app.add_option("--nu-max", cfg.nu_max, "Override the schedule iteration count");
    app.add_flag("--diminishing", cfg.diminishing, "Diminishing-gamma mode (linearized full-index surrogate)");
    app.add_option("--N", cfg.N, "Sample size for saa, verify-point and empirical scans");
    app.add_option("--gamma", cfg.gamma, "Approximation parameter");
    app.add_option("--lambda", cfg.lambda, "Penalty parameter (saa)");
    app.add_option("--rho", cfg.rho, "Proximal parameter (saa)");
    app.add_option("--max-outer", cfg.max_outer, "Outer iteration cap (saa)");
    app.add_option("--start", cfg.start, "Start point")->delimiter(',');
    app.add_option("--point", cfg.point, "Point to verify")->delimiter(',');
    app.add_option("--grid", cfg.grid, "Grid points per axis (feasibility-scan)");
    app.add_option("--stationarity", cfg.stationarity, "B | d | weak-C (verify-point)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    }
    return run(cfg, out, err);
}

std::vector<SelftestLine> run_selftest() {
    std::vector<SelftestLine> lines;
    auto add = [&](std::string name, bool pass, std::string detail = "") {
        lines.push_back({std::move(name), pass, std::move(detail)});
    };
    auto guarded = [&](const std::string& name, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            add(name, false, std::string("threw: ") + e.what());
        }
    };
    const auto id = ThetaPair::identity();

    guarded("heaviside sandwich", [&] {
        bool ok = true;
        for (int i = -300; i <= 300; ++i) {
            double t = i / 100.0;
            for (double g : {0.05, 0.2, 0.7}) {
                ok = ok && phi_lb(t, g, id) <= heaviside_open(t) && heaviside_closed(t) <= phi_ub(t, g, id);
                ok = ok && phi_ub(t, g, id) >= phi_ub(t, g / 2, id) && phi_lb(t, g, id) <= phi_lb(t, g / 2, id);
            }
        }
        add("heaviside sandwich", ok);
    });

    guarded("gamma shift bound, tight uniform case", [&] {
        auto r = check_gamma_shift_bound(DistributionOracle::uniform(-1, 1), 0.4, 0.2, id);
        bool ok = std::abs(r.lhs_ub - 0.05) <= 1e-9 && std::abs(r.rhs_ub - 0.05) <= 1e-9 && r.holds;
        add("gamma shift bound, tight uniform case", ok, "lhs=" + format_double(r.lhs_ub));
    });

    guarded("bernoulli rows by enumeration", [&] {
        auto p = ex31_problem(1.0, 0.1);
        auto o = make_expectation_oracle(p, id);
        Vec x0 = Vec::Zero(1);
        bool ok = o && o->value(0, x0, 0.3, Variant::rst) == 1.0 && o->value(0, x0, 0.3, Variant::rlx) == 0.0 &&
                  ex31_row(0.0, 1.0, 0.3, Variant::rst) == 1.0;
        add("bernoulli rows by enumeration", ok);
    });

    guarded("closed form against sampled mean", [&] {
        auto p = ex41_problem(false);
        SampleStore store(p.source, 3);
        auto v = store.extend(20000);
        double worst = 0.0;
        for (double x : {-0.5, 0.1, 0.27, 0.45, 0.55}) {
            Vec xv = Vec::Constant(1, x);
            double emp = row_means(p, v, xv, 0.2, id, Variant::rst)[0];
            worst = std::max(worst, std::abs(emp - ex41_cbar_rst(x, 0.2)));
        }
        add("closed form against sampled mean", worst < 0.02, "max gap=" + format_double(worst));
    });

    guarded("stationarity on the restricted example", [&] {
        auto p = ex41_problem(false);
        std::vector<double> dummy = {0.0};
        auto at = [&](double x) {
            return constrained_stationarity(p, dummy, Vec::Constant(1, x), 0.2, id, Variant::rst).kind;
        };
        using K = StationarityVerdict::Kind;
        bool ok = at(0.3) == K::B_stationary && at(-1.0) == K::B_stationary && at(0.0) == K::not_stationary;
        add("stationarity on the restricted example", ok);
    });

    guarded("schedule validator", [&] {
        Schedule s;
        s.N = {SeqRule::Kind::power, 5.0, 3.0, 0.0, std::nullopt, std::nullopt, true};
        s.lambda = {SeqRule::Kind::log, 1.0, 0.0, 1.0, std::nullopt, std::nullopt, false};
        s.rho = {SeqRule::Kind::ratio, 1.0, 1.0, 0.0, std::nullopt, std::nullopt, false};
        s.gamma = {SeqRule::Kind::power, 1.0, -0.3, 0.0, std::nullopt, std::nullopt, false};
        bool ok = validate_schedule(s, 10000).ok;
        Schedule bad = s;
        bad.rho.coef = 5.0;
        ok = ok && validate_schedule(bad, 10000).has_tag("ratio-band");
        add("schedule validator", ok);
    });

    guarded("subsolver against brute force", [&] {
        auto p = ex41_problem(false);
        SampleStore store(p.source, 9);
        auto v = store.extend(6);
        auto th = std::make_shared<const ThetaPair>(id);
        auto prog = build_program(p, v, Vec::Constant(1, 0.6), 0.2, th, Variant::rst, SurrogatePolicy::full(), 3.0, 1.0);
        GlobalOptions g;
        g.strategy = GlobalStrategy::enumerate;
        auto r = solve_surrogate_global(prog, g);
        auto bf = brute_force_min([&](const Vec& x) { return prog.value(x); }, p.domain, 1e-3);
        bool ok = r.value <= bf.value + 1e-5 && r.value <= prog.value(prog.xbar);
        add("subsolver against brute force", ok,
            "global=" + format_double(r.value) + " grid=" + format_double(bf.value));
    });
    return lines;
}

}  // namespace accsp
