#include "accsp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return accsp::cli_main(argc, argv, std::cout, std::cerr); }
