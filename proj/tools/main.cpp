#include "sepsis/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sepsis::run_cli(argc, argv, std::cout, std::cerr); }
