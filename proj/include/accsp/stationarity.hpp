#pragma once

#include "accsp/approx.hpp"
#include "accsp/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace accsp {

using DdFn = std::function<double(const Vec& v)>;

// Constraint f(x) <= 0 seen from a fixed point x: its value there and its directional derivatives.
struct ConstraintAtPoint {
    double value = 0.0;
    DdFn dd;
    DdFn clarke;
};

enum class StationarityMode { d, B, weak_C };

struct StationarityVerdict {
    enum class Kind { d_stationary, B_stationary, C_stationary_upper, weak_C, not_stationary, indeterminate };
    Kind kind = Kind::indeterminate;
    Vec witness;
    double witness_dd = 0.0;
    double tolerance = 0.0;
    std::string regime;
    std::string note;
    bool stationary() const { return kind != Kind::not_stationary && kind != Kind::indeterminate; }
};

std::string to_string(StationarityVerdict::Kind k);

struct StationarityOptions {
    double active_tol = 1e-9;
    double feas_tol = 1e-7;
    double dd_tol = 1e-10;
    int direction_budget = 2000;
    unsigned long long seed = 5;
};

StationarityVerdict check_stationarity(const DdFn& objective_dd, const DdFn& objective_clarke,
                                       const std::vector<ConstraintAtPoint>& constraints, const Polytope& domain,
                                       const Vec& x, StationarityMode mode, const StationarityOptions& opt = {});

// Per-row residual system c_k(x) - zeta_k with exact and Clarke-upper dds.
struct RowSystem {
    virtual ~RowSystem() = default;
    virtual int rows() const = 0;
    virtual double zeta(int k) const = 0;
    virtual double value(int k, const Vec& x) const = 0;
    virtual double dd(int k, const Vec& x, const Vec& v) const = 0;
    virtual double clarke(int k, const Vec& x, const Vec& v) const = 0;
};

// Empirical rows of an AccProblem on a fixed sample set.
class EmpiricalRows : public RowSystem {
  public:
    EmpiricalRows(const AccProblem& p, std::span<const double> samples, double gamma, const ThetaPair& theta,
                  Variant variant);
    int rows() const override;
    double zeta(int k) const override;
    double value(int k, const Vec& x) const override;
    double dd(int k, const Vec& x, const Vec& v) const override;
    double clarke(int k, const Vec& x, const Vec& v) const override;

  private:
    const AccProblem& p_;
    std::span<const double> samples_;
    std::size_t N_;
    double gamma_;
    ThetaPair theta_;
    Variant variant_;
};

// Rows given directly as dc functions of x (no randomness), with thresholds.
class DcRows : public RowSystem {
  public:
    DcRows(std::vector<DcMaxFunction> f, std::vector<double> zeta) : f_(std::move(f)), zeta_(std::move(zeta)) {}
    int rows() const override { return static_cast<int>(f_.size()); }
    double zeta(int k) const override { return zeta_[k]; }
    double value(int k, const Vec& x) const override;
    double dd(int k, const Vec& x, const Vec& v) const override;
    double clarke(int k, const Vec& x, const Vec& v) const override;

  private:
    std::vector<DcMaxFunction> f_;
    std::vector<double> zeta_;
};

struct ResidualDd {
    double exact = 0.0;
    double clarke_upper = 0.0;
};

double penalty_residual(const RowSystem& rows, const Vec& x);
ResidualDd residual_dd(const RowSystem& rows, const Vec& x, const Vec& v, double active_tol = 1e-9);

struct ConvexLikeReport {
    std::vector<double> radii;
    std::vector<bool> holds;
    double worst_gap = 0.0;
    bool structural = false;
    bool certified = false;
    std::string label;
};

ConvexLikeReport convexlike_localmin_test(const std::function<double(const Vec&)>& f,
                                          const std::function<double(const Vec&, const Vec&)>& f_dd, const Vec& xbar,
                                          const std::vector<double>& radii, bool b_stationary, bool structural,
                                          int probes_per_radius = 64, double tol = 1e-12);

// True when every functional is built from affine pieces, which makes each row convex-like near any point.
bool rows_structurally_convexlike(const AccProblem& p);

}  // namespace accsp
