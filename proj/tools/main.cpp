#include "nonstat/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return nonstat::run_cli(argc, argv, std::cout, std::cerr); }
