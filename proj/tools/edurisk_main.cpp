#include <iostream>

#include "edurisk/cli.hpp"

int main(int argc, char** argv) { return edurisk::cli::run(argc, argv, std::cout, std::cerr); }
