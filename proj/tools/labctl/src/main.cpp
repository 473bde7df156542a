#include <iostream>

#include "labctl/commands.hpp"

int main(int argc, char** argv) { return labctl::run_cli(argc, argv, std::cout, std::cerr); }
