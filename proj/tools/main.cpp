#include <iostream>

#include "ikit/cli.hpp"

int main(int argc, char** argv) { return ikit::run_cli(argc, argv, std::cout, std::cerr); }
