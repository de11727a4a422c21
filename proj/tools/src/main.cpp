#include <iostream>

#include "tome_cli/cli.hpp"

int main(int argc, char** argv) { return tome::cli::run_cli(argc, argv, std::cout, std::cerr); }
