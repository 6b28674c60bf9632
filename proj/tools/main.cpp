#include <iostream>

#include "spongecake_tools/cli.hpp"

int main(int argc, char** argv) { return spongecake::tools::run_cli(argc, argv, std::cout, std::cerr); }
