#pragma once

#include "accsp/model.hpp"
#include "accsp/sampling.hpp"

#include <stdexcept>
#include <string>

namespace accsp {

// Load failure with a "file:line:col: message" diagnostic.
class LoadError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

AccProblem load_problem(const std::string& path, bool strict = false);
AccProblem parse_problem(const std::string& text, const std::string& origin = "<string>", bool strict = false);
std::string dump_problem(const AccProblem& p);

Schedule load_schedule(const std::string& path, int* nu_max = nullptr);
Schedule parse_schedule(const std::string& text, const std::string& origin = "<string>", int* nu_max = nullptr);
std::string dump_schedule(const Schedule& s, int nu_max);

}  // namespace accsp
