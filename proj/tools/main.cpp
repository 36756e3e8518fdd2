#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return pfenergy::cli::run(argc, argv, std::cout, std::cerr); }
