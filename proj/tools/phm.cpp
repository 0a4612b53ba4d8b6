#include <iostream>

#include "phm/cli.hpp"

int main(int argc, char **argv) { return phm::run_cli(argc, argv, std::cout, std::cerr); }
