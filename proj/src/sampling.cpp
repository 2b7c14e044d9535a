#include "accsp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace accsp {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t index, std::uint64_t coord, std::uint64_t stream) const {
    std::uint64_t h = mix64(seed_);
    h = mix64(h ^ index);
    h = mix64(h ^ (coord * 0xd6e8feb86659fd93ULL));
    h = mix64(h ^ (stream * 0xa0761d6478bd642fULL));
    return h;
}

double CounterRng::uniform(std::uint64_t index, std::uint64_t coord, std::uint64_t stream) const {
    return (static_cast<double>(bits(index, coord, stream) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index, std::uint64_t coord) const {
    double u1 = uniform(index, coord, 1), u2 = uniform(index, coord, 2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SampleStore::SampleStore(RandomSource source, std::uint64_t seed) : source_(std::move(source)), rng_(seed) {
    if (source_.dim <= 0) throw std::invalid_argument("random source dimension must be positive");
    if (source_.kind == RandomSource::Kind::file && source_.rows.empty()) {
        source_.rows = read_sample_csv(source_.path);
        for (const auto& r : source_.rows)
            if (static_cast<int>(r.size()) != source_.dim)
                throw std::invalid_argument("sample file row has wrong number of columns");
    }
}

std::span<const double> SampleStore::extend(std::size_t target) {
    if (target <= count_) throw std::invalid_argument("extend target must exceed the current sample count");
    const auto d = static_cast<std::size_t>(source_.dim);
    if (source_.kind == RandomSource::Kind::file && target > source_.rows.size())
        throw std::out_of_range("sample file has fewer rows than requested");
    data_.reserve(target * d);
    for (std::size_t s = count_; s < target; ++s) {
        switch (source_.kind) {
            case RandomSource::Kind::file:
                data_.insert(data_.end(), source_.rows[s].begin(), source_.rows[s].end());
                break;
            case RandomSource::Kind::table: {
                double u = rng_.uniform(s, 0);
                double acc = 0.0;
                std::size_t pick = source_.rows.size() - 1;
                for (std::size_t i = 0; i < source_.probs.size(); ++i) {
                    acc += source_.probs[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
                data_.insert(data_.end(), source_.rows[pick].begin(), source_.rows[pick].end());
                break;
            }
            case RandomSource::Kind::parametric:
                for (std::size_t j = 0; j < d; ++j) {
                    const auto& c = source_.components[j];
                    switch (c.dist) {
                        case RandomComponent::Dist::uniform:
                            data_.push_back(c.a + (c.b - c.a) * rng_.uniform(s, j));
                            break;
                        case RandomComponent::Dist::bernoulli:
                            data_.push_back(rng_.uniform(s, j) < c.p ? c.v1 : c.v0);
                            break;
                        case RandomComponent::Dist::normal:
                            data_.push_back(c.mu + c.sigma * rng_.normal(s, j));
                            break;
                    }
                }
                break;
        }
    }
    count_ = target;
    batches_.push_back(target);
    return view();
}

Realization SampleStore::at(std::size_t s) const {
    if (s >= count_) throw std::out_of_range("sample index out of range");
    const auto d = static_cast<std::size_t>(source_.dim);
    return {data_.data() + s * d, d};
}

std::vector<std::vector<double>> read_sample_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (lineno == 1) continue;  // header
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-numeric sample row");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sample_csv(const std::string& path, std::span<const double> data, int dim) {
    if (dim <= 0 || data.size() % static_cast<std::size_t>(dim) != 0)
        throw std::invalid_argument("sample block does not match dimension");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sample file " + path);
    out << std::setprecision(17);
    for (int j = 0; j < dim; ++j) out << (j ? "," : "") << "z" << j;
    out << "\n";
    for (std::size_t s = 0; s < data.size() / dim; ++s) {
        for (int j = 0; j < dim; ++j) out << (j ? "," : "") << data[s * dim + j];
        out << "\n";
    }
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

double empirical_mean(const std::function<double(const Vec&, Realization)>& f, const Vec& x,
                      std::span<const double> samples, int dim) {
    if (dim <= 0) throw std::invalid_argument("sample dimension must be positive");
    const std::size_t N = samples.size() / static_cast<std::size_t>(dim);
    if (N == 0) throw std::invalid_argument("empirical mean over an empty sample");
    std::vector<double> vals(N);
    for (std::size_t s = 0; s < N; ++s) vals[s] = f(x, samples.subspan(s * dim, dim));
    return pairwise_sum(vals) / static_cast<double>(N);
}

RademacherEstimate rademacher_estimate(const std::function<double(const Vec&, Realization)>& f,
                                       std::span<const double> samples, int dim, const std::vector<Vec>& x_grid,
                                       int sigma_draws, std::uint64_t seed) {
    if (sigma_draws < 1) throw std::invalid_argument("need at least one sign draw");
    if (x_grid.empty()) throw std::invalid_argument("empty grid");
    const std::size_t N = samples.size() / static_cast<std::size_t>(dim);
    if (N == 0) throw std::invalid_argument("empty sample");
    std::vector<std::vector<double>> vals(x_grid.size(), std::vector<double>(N));
    for (std::size_t g = 0; g < x_grid.size(); ++g)
        for (std::size_t s = 0; s < N; ++s) vals[g][s] = f(x_grid[g], samples.subspan(s * dim, dim));
    CounterRng rng(seed);
    std::vector<double> draws(static_cast<std::size_t>(sigma_draws));
    std::vector<double> buf(N);
    for (int m = 0; m < sigma_draws; ++m) {
        double sup = 0.0;
        for (const auto& row : vals) {
            for (std::size_t s = 0; s < N; ++s) buf[s] = (rng.bits(m, s) & 1ULL) ? row[s] : -row[s];
            sup = std::max(sup, std::abs(pairwise_sum(buf) / static_cast<double>(N)));
        }
        draws[m] = sup;
    }
    RademacherEstimate est;
    est.value = pairwise_sum(draws) / sigma_draws;
    if (sigma_draws > 1) {
        double ss = 0.0;
        for (double d : draws) ss += (d - est.value) * (d - est.value);
        est.std_error = std::sqrt(ss / (sigma_draws - 1) / sigma_draws);
    }
    return est;
}

double SeqRule::at(int nu, double lambda) const {
    if (nu < 1) throw std::invalid_argument("sequence index starts at 1");
    const double v = static_cast<double>(nu);
    double r = 0.0;
    switch (kind) {
        case Kind::constant:
            r = coef;
            break;
        case Kind::power:
            r = coef * std::pow(v, exponent) + offset;
            break;
        case Kind::log:
            r = offset + coef * std::log(v);
            break;
        case Kind::ratio:
            r = coef * lambda / std::pow(v, exponent);
            break;
    }
    if (floor) r = std::max(r, *floor);
    if (cap) r = std::min(r, *cap);
    if (ceil) r = std::ceil(r);
    return r;
}

std::size_t Schedule::N_at(int nu) const {
    double v = std::ceil(N.at(nu));
    if (!(v >= 1.0)) throw std::invalid_argument("sample size rule must be at least 1");
    return static_cast<std::size_t>(v);
}

double Schedule::gamma_limit(int horizon) const {
    double g = gamma_at(horizon);
    if (gamma.kind == SeqRule::Kind::power && gamma.exponent < 0) {
        double lim = gamma.offset;
        if (gamma.floor) lim = std::max(lim, *gamma.floor);
        if (gamma.cap) lim = std::min(lim, *gamma.cap);
        g = std::min(g, lim);
    } else if (gamma.kind == SeqRule::Kind::log && gamma.coef < 0 && gamma.floor) {
        g = std::min(g, *gamma.floor);
    }
    return g;
}

bool Schedule::gamma_constant() const {
    return gamma.kind == SeqRule::Kind::constant || (gamma.kind == SeqRule::Kind::power && gamma.exponent == 0) ||
           (gamma.kind == SeqRule::Kind::log && gamma.coef == 0);
}

bool ScheduleReport::has_tag(const std::string& t) const {
    return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.tag == t; });
}

namespace {

// a <= b with a relative allowance for rounding in the closed-form rules.
bool leq(double a, double b) { return a <= b + 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

ScheduleReport validate_schedule(const Schedule& s, int horizon, const std::function<double(double)>* h_oracle) {
    const auto& c = s.constants;
    ScheduleReport rep;
    auto flag = [&](const std::string& tag, int nu, const std::string& detail) {
        if (rep.has_tag(tag)) return;  // first occurrence per tag
        rep.violations.push_back({tag, nu, detail});
    };
    if (horizon < c.nu_bar + 1) throw std::invalid_argument("horizon must exceed nu_bar");
    if (!(c.beta > 0 && c.beta < 0.5)) flag("constants", 0, "beta must lie in (0, 1/2)");
    if (!(c.c1 > 0 && c.c2 > 0 && c.c3 > 0 && c.c4 > 0)) flag("constants", 0, "c1..c4 must be positive");
    if (!(c.delta > 0)) flag("constants", 0, "delta must be positive");
    if (!(c.alpha2 > c.alpha1 && c.alpha1 > 0)) flag("constants", 0, "need alpha2 > alpha1 > 0");
    if (c.nu_bar < 1) flag("constants", 0, "nu_bar must be a positive integer");
    if (!(c.c3 < c.nu_bar)) flag("constants", 0, "need c3 < nu_bar");
    if (!(c.beta * (1 + c.c1) > 1 + c.delta))
        flag("beta-growth", 0, "beta(1+c1) = " + fmt(c.beta * (1 + c.c1)) + " <= 1+delta = " + fmt(1 + c.delta));

    double lam0 = s.lambda_at(1);
    if (std::abs(lam0 - 1.0) > 1e-12) flag("lambda-initial", 1, "lambda_1 = " + fmt(lam0) + ", expected 1");

    std::vector<double> N(horizon + 1, 0.0), G(horizon + 1, 0.0);
    double prev_lam = 0.0;
    for (int nu = 1; nu <= horizon; ++nu) {
        double lam = s.lambda_at(nu), rho = s.rho_at(nu), gam = s.gamma_at(nu);
        N[nu] = static_cast<double>(s.N_at(nu));
        G[nu] = gam;
        if (!(lam > 0)) flag("lambda-monotone", nu, "lambda must stay positive");
        if (nu > 1 && !leq(prev_lam, lam)) flag("lambda-monotone", nu, "lambda decreases at nu = " + std::to_string(nu));
        prev_lam = lam;
        if (!(rho > 0)) flag("ratio-band", nu, "rho must be positive");
        double ratio = rho / lam;
        if (!leq(c.alpha1 / nu, ratio) || !leq(ratio, c.alpha2 / nu))
            flag("ratio-band", nu, "rho/lambda = " + fmt(ratio) + " outside [alpha1/nu, alpha2/nu]");
        if (!(gam > 0)) flag("gamma-monotone", nu, "gamma must be positive");
        if (nu > 1 && !leq(gam, G[nu - 1])) flag("gamma-monotone", nu, "gamma increases");
        if (nu > 1 && !(N[nu] > N[nu - 1])) flag("n-increasing", nu, "sample sizes must strictly increase");
        if (nu >= c.nu_bar) {
            double lower = c.c2 * std::pow(double(nu), 1 + c.c1);
            if (!leq(lower, N[nu])) flag("n-growth-lower", nu, "N = " + fmt(N[nu]) + " < c2 nu^(1+c1) = " + fmt(lower));
            if (nu > c.c3 && nu > 1) {
                double upper = N[nu - 1] / (1 - c.c3 / nu);
                if (!leq(N[nu], upper))
                    flag("n-growth-upper", nu, "N = " + fmt(N[nu]) + " > N_prev/(1 - c3/nu) = " + fmt(upper));
            }
            double gfloor = c.c4 / std::pow(double(nu), c.delta);
            if (!leq(gfloor, gam)) flag("gamma-floor", nu, "gamma = " + fmt(gam) + " < c4/nu^delta = " + fmt(gfloor));
        }
    }

    // Partial sums of the six series, starting where N_{nu-1} > 0.
    std::vector<double> S(6, 0.0), last(6, 0.0);
    for (int nu = 2; nu <= horizon; ++nu) {
        double dN = N[nu] - N[nu - 1];
        double t[6];
        t[0] = dN / N[nu] / std::pow(N[nu - 1], c.beta);
        t[1] = 1.0 / std::pow(N[nu], c.beta);
        t[2] = std::pow(std::max(dN, 0.0), 1 - c.beta) / N[nu];
        t[3] = t[0] / G[nu - 1];
        t[4] = t[1] / G[nu];
        t[5] = t[2] / G[nu - 1];
        for (int i = 0; i < 6; ++i) {
            S[i] += t[i];
            last[i] = t[i];
        }
    }
    rep.partial_sums = S;
    for (int i = 0; i < 6; ++i) rep.tail_flags.push_back(last[i] * horizon > 0.01 * S[i]);
    if (h_oracle) {
        for (int nu = 2; nu <= horizon; ++nu) rep.gamma_variation += std::abs((*h_oracle)(G[nu]) - (*h_oracle)(G[nu - 1]));
    }
    rep.ok = rep.violations.empty();
    return rep;
}

}  // namespace accsp
