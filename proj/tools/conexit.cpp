#include <iostream>

#include "conexit/cli.hpp"

int main(int argc, char** argv) { return conexit::cli::main_entry(argc, argv, std::cout, std::cerr); }
