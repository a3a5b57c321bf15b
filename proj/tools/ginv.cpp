#include <iostream>

#include "ginv/cli.hpp"

int main(int argc, char** argv) { return ginv::cli::run_cli(argc, argv, std::cout, std::cerr); }
