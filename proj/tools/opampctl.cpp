#include <iostream>

#include "opamp/cli.hpp"

int main(int argc, char** argv) { return opamp::cli::run_cli(argc, argv, std::cout, std::cerr); }
