#include <iostream>

#include "flapsim/cli.hpp"

int main(int argc, char** argv) { return flapsim::cli::run(argc, argv, std::cout, std::cerr); }
