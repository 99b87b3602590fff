#include <iostream>

#include "orbit/cli/commands.hpp"

int main(int argc, char** argv) { return orbit::cli::main_entry(argc, argv, std::cout, std::cerr); }
