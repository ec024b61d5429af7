#include <iostream>

#include "fracnoether/cli.hpp"

int main(int argc, char** argv) { return fracnoether::cli::run(argc, argv, std::cout, std::cerr); }
