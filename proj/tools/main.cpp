#include <iostream>

#include "cansys/cli.hpp"

int main(int argc, char** argv) { return cansys::cli::run(argc, argv, std::cout, std::cerr); }
