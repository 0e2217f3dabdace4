#include <iostream>

#include "mcert/cli/commands.hpp"

int main(int argc, char** argv) { return mcert::cli::run(argc, argv, std::cout, std::cerr); }
