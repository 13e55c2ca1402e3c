#include <iostream>

#include "augat/cli.hpp"

int main(int argc, char** argv) { return augat::cli::run_cli(argc, argv, std::cout, std::cerr); }
