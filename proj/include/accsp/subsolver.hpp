#pragma once

#include "accsp/qp.hpp"
#include "accsp/surrogate.hpp"

#include <string>
#include <vector>

namespace accsp {

struct SurrogateProgram {
    std::vector<SurrogateRow> objective;      // per-sample objective surrogates
    double objective_weight = 1.0;            // weight of each objective entry (1/N, or 1 when deterministic)
    std::vector<std::vector<SurrogateRow>> rows;  // K x N
    std::vector<double> zeta;
    double lambda = 1.0;
    double rho = 1.0;
    Vec xbar;
    Polytope domain;

    int dim() const { return static_cast<int>(xbar.size()); }
    double row_mean(int k, const Vec& x) const;
    double objective_mean(const Vec& x) const;
    double value(const Vec& x) const;
    double dd(const Vec& x, const Vec& v) const;
    // Number of min-lists and the product of their sizes (saturating).
    std::size_t minlist_count() const;
    double branch_count() const;
};

// One atom index per min-list, enumerated objective first then rows k, samples s, terms l.
using BranchSelection = std::vector<int>;

BranchSelection touching_selection(const SurrogateProgram& prog, const Vec& x);

enum class EpigraphForm { automatic, expanded, aggregated };

struct BranchOptions {
    EpigraphForm form = EpigraphForm::automatic;
    std::size_t expanded_limit = 200;
    CutOptions cuts;
};

struct BranchResult {
    Vec x;
    double value = 0.0;   // branch objective at x
    double kkt_residual = 0.0;
    int cut_rounds = 0;
    bool converged = false;
    EpigraphForm form_used = EpigraphForm::aggregated;
};

double branch_value(const SurrogateProgram& prog, const BranchSelection& sel, const Vec& x);
BranchResult solve_branch(const SurrogateProgram& prog, const BranchSelection& sel, const BranchOptions& opt = {});
std::string branch_qp_dump(const SurrogateProgram& prog, const BranchSelection& sel);

enum class GlobalStrategy { enumerate, single_branch, local_branch };

struct GlobalOptions {
    GlobalStrategy strategy = GlobalStrategy::single_branch;
    double branch_cap = 1e5;
    double tie_tol = 1e-10;
    int threads = 1;
    int max_local_rounds = 50;
    BranchOptions branch;
};

struct GlobalResult {
    Vec x;
    double value = 0.0;          // min-of-convex objective at x
    std::size_t branches_solved = 0;
    BranchSelection selection;
    double kkt_residual = 0.0;
    bool kept_reference = false;
};

GlobalResult solve_surrogate_global(const SurrogateProgram& prog, const GlobalOptions& opt = {});

GlobalStrategy parse_strategy(const std::string& s);

}  // namespace accsp
