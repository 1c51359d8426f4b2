#include <iostream>

#include "pooltest/cli.hpp"

int main(int argc, char** argv) { return pooltest::run_cli(argc, argv, std::cout, std::cerr); }
