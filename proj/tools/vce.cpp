#include "vce/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return vce::cli::run(argc, argv, std::cout, std::cerr); }
