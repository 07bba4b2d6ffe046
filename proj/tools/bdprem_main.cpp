#include <iostream>

#include "bdprem/cli.hpp"

int main(int argc, char** argv) { return bdprem::run_cli(argc, argv, std::cout, std::cerr); }
