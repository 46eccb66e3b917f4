#include <iostream>

#include "ptycho/cli.hpp"

int main(int argc, char** argv) { return ptycho::cli::main(argc, argv, std::cout, std::cerr); }
