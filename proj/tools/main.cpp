#include <iostream>

#include "dpbl/cli/cli.hpp"

int main(int argc, char** argv) { return dpbl::cli::run(argc, argv, std::cout, std::cerr); }
