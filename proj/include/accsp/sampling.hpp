#pragma once

#include "accsp/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace accsp {

// Stateless generator: every draw is a hash of (seed, sample index, coordinate, stream).
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    std::uint64_t bits(std::uint64_t index, std::uint64_t coord, std::uint64_t stream = 0) const;
    // Uniform on the open interval (0,1).
    double uniform(std::uint64_t index, std::uint64_t coord, std::uint64_t stream = 0) const;
    double normal(std::uint64_t index, std::uint64_t coord) const;
    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

class SampleStore {
  public:
    SampleStore(RandomSource source, std::uint64_t seed);

    std::span<const double> extend(std::size_t target);
    std::size_t size() const { return count_; }
    int dim() const { return source_.dim; }
    Realization at(std::size_t s) const;
    std::span<const double> view() const { return {data_.data(), count_ * static_cast<std::size_t>(source_.dim)}; }
    const std::vector<std::size_t>& batch_ends() const { return batches_; }
    const RandomSource& source() const { return source_; }

  private:
    RandomSource source_;
    CounterRng rng_;
    std::vector<double> data_;
    std::vector<std::size_t> batches_;
    std::size_t count_ = 0;
};

std::vector<std::vector<double>> read_sample_csv(const std::string& path);
void write_sample_csv(const std::string& path, std::span<const double> data, int dim);

// Fixed-topology pairwise summation.
double pairwise_sum(std::span<const double> v);
double empirical_mean(const std::function<double(const Vec&, Realization)>& f, const Vec& x,
                      std::span<const double> samples, int dim);

struct RademacherEstimate {
    double value = 0.0;
    double std_error = 0.0;
};
RademacherEstimate rademacher_estimate(const std::function<double(const Vec&, Realization)>& f,
                                       std::span<const double> samples, int dim, const std::vector<Vec>& x_grid,
                                       int sigma_draws, std::uint64_t seed = 11);

// value = clamp(base, floor, cap), optionally rounded up; base depends on kind.
struct SeqRule {
    enum class Kind { constant, power, log, ratio };
    Kind kind = Kind::constant;
    double coef = 1.0;
    double exponent = 0.0;
    double offset = 0.0;
    std::optional<double> floor;
    std::optional<double> cap;
    bool ceil = false;

    // ratio rule: coef * lambda / nu^exponent
    double at(int nu, double lambda = 0.0) const;
    bool operator==(const SeqRule&) const = default;
};

struct ScheduleConstants {
    double beta = 0.45;
    double c1 = 2.0, c2 = 5.0, c3 = 3.0, c4 = 1.0;
    double delta = 0.3;
    double alpha1 = 0.5, alpha2 = 2.0;
    int nu_bar = 8;
    bool operator==(const ScheduleConstants&) const = default;
};

struct Schedule {
    SeqRule N, lambda, rho, gamma;
    ScheduleConstants constants;

    std::size_t N_at(int nu) const;
    double lambda_at(int nu) const { return lambda.at(nu); }
    double rho_at(int nu) const { return rho.at(nu, lambda_at(nu)); }
    double gamma_at(int nu) const { return gamma.at(nu); }
    double gamma_limit(int horizon) const;
    bool gamma_constant() const;
    bool operator==(const Schedule&) const = default;
};

struct ScheduleViolation {
    std::string tag;
    int nu = 0;
    std::string detail;
};

struct ScheduleReport {
    bool ok = true;
    std::vector<ScheduleViolation> violations;
    std::vector<double> partial_sums;  // S1..S6
    std::vector<bool> tail_flags;      // true when the tail still looks non-negligible
    double gamma_variation = 0.0;      // partial sum of |h(gamma_nu) - h(gamma_nu-1)| when an h-oracle is given
    bool has_tag(const std::string& t) const;
};

ScheduleReport validate_schedule(const Schedule& s, int horizon,
                                 const std::function<double(double)>* h_oracle = nullptr);

}  // namespace accsp
