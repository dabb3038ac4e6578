#include <iostream>

#include "mmrd/cli/commands.hpp"

int main(int argc, char** argv) { return mmrd::cli::run(argc, argv, std::cout, std::cerr); }
