#include <iostream>

#include "clutterscope/cli.hpp"

int main(int argc, char** argv) { return clutterscope::run_cli(argc, argv, std::cout, std::cerr); }
