#pragma once

#include "accsp/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace accsp {

enum class Variant { rst, rlx };

struct ScalarTheta {
    enum class Kind { identity, piecewise_affine, smooth_power, smooth_root };
    Kind kind = Kind::identity;
    bool convex = true;             // theta_cvx when true, theta_cve otherwise
    std::vector<double> bx, by;     // breakpoints for piecewise_affine
    double p = 2.0;

    double value(double s) const;
    double right_slope(double s) const;
    double left_slope(double s) const;
    double lipschitz() const;
    bool differentiable() const;
    bool piecewise_affine() const;
    std::string describe() const;
    bool operator==(const ScalarTheta&) const = default;

  private:
    std::vector<double> slopes() const;
};

struct ThetaPair {
    ScalarTheta cvx;
    ScalarTheta cve;
    double lip_theta = 1.0;

    static ThetaPair identity();
    static ThetaPair piecewise(std::vector<double> bx, std::vector<double> cvx_y, std::vector<double> cve_y);
    static ThetaPair smooth(double p);
    // Throws std::invalid_argument when the endpoint or shape conditions fail.
    void validate() const;
    bool operator==(const ThetaPair&) const = default;
};

// Parses "identity", "pa:0,0.5,1:0,0.25,1:0,0.75,1" and "smooth:<p>".
ThetaPair parse_theta(const std::string& spec);
std::string format_theta(const ThetaPair& t);

// gamma == 0 selects the Heaviside limits.
double phi_ub(double t, double gamma, const ThetaPair& theta);
double phi_lb(double t, double gamma, const ThetaPair& theta);

struct Slopes {
    double left = 0.0;
    double right = 0.0;
};
Slopes phi_ub_slopes(double t, double gamma, const ThetaPair& theta);
Slopes phi_lb_slopes(double t, double gamma, const ThetaPair& theta);

inline double heaviside_closed(double t) { return t >= 0 ? 1.0 : 0.0; }
inline double heaviside_open(double t) { return t > 0 ? 1.0 : 0.0; }

double c_row_rst(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta);
double c_row_rlx(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta);
double c_row(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
             Variant variant);
double c_row_dd(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
                Variant variant, const Vec& v);
double c_row_clarke(const AccProblem& p, int k, const Vec& x, Realization z, double gamma, const ThetaPair& theta,
                    Variant variant, const Vec& v);
// Sum_l e_kl 1{Z_l >= 0}, the exact probability row integrand.
double c_row_indicator(const AccProblem& p, int k, const Vec& x, Realization z);

enum class Side { lb, ub };

// Exact integral of the empirical CDF.
double h_Z(const std::vector<double>& values, double gamma, Side side);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        std::vector<double> breakpoints = {});

struct DistributionOracle {
    enum class Kind { uniform, discrete };
    Kind kind = Kind::uniform;
    double a = 0.0, b = 1.0;
    std::vector<double> values;
    std::vector<double> probs;

    static DistributionOracle uniform(double a, double b);
    static DistributionOracle bernoulli(double p, double v0, double v1);
    static DistributionOracle table(std::vector<double> values, std::vector<double> probs);

    double cdf(double t) const;
    double integral_cdf(double lo, double hi) const;
    double expect(const std::function<double(double)>& f, const std::vector<double>& breakpoints) const;
    double point_mass(double t) const;
    double h(double gamma, Side side) const;
};

struct GammaShiftReport {
    double lhs_ub = 0.0, rhs_ub = 0.0;
    double lhs_lb = 0.0, rhs_lb = 0.0;
    bool holds = false;
};

GammaShiftReport check_gamma_shift_bound(const DistributionOracle& dist, double gamma1, double gamma2,
                                const ThetaPair& theta, double tol = 1e-12);

}  // namespace accsp
