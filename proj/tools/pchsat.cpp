#include <iostream>

#include "pchsat/cli.hpp"

int main(int argc, char** argv) { return pchsat::run_cli(argc, argv, std::cout, std::cerr); }
