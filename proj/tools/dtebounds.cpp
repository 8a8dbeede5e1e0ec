#include <iostream>

#include "dte/cli.hpp"

int main(int argc, char** argv) { return dte::run_cli(argc, argv, std::cout, std::cerr); }
