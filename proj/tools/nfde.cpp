#include <iostream>

#include "nfde/cli.hpp"

int main(int argc, char** argv) { return nfde::run_cli(argc, argv, std::cout, std::cerr); }
