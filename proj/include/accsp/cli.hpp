#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace accsp {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_schedule = 3, exit_solver = 4, exit_selftest = 5 };

struct RunConfig {
    std::string problem;
    std::string mode = "spsa";
    std::string variant = "rst";
    std::string theta = "identity";
    std::string schedule;
    std::string policy;          // empty selects the mode default
    std::string strategy;        // empty selects the mode default
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    bool strict = false;
    int threads = 1;
    int nu_max = 0;              // 0 keeps the schedule file value
    bool diminishing = false;
    std::size_t N = 1000;
    double gamma = 0.2;
    double lambda = 10.0;
    double rho = 1.0;
    int max_outer = 200;
    std::vector<double> start;
    std::vector<double> point;
    int grid = 401;
    std::string stationarity = "B";
};

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

struct SelftestLine {
    std::string name;
    bool pass = false;
    std::string detail;
};
std::vector<SelftestLine> run_selftest();

}  // namespace accsp
