#include <iostream>

#include "qtsh/cli.hpp"

int main(int argc, char** argv) { return qtsh::run_cli(argc, argv, std::cout, std::cerr); }
