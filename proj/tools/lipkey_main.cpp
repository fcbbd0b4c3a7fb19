#include <iostream>

#include "lipkey/cli.hpp"

int main(int argc, char** argv) { return lipkey::run_cli(argc, argv, std::cout, std::cerr); }
