#include <iostream>

#include "voltdmd/cli.hpp"

int main(int argc, char** argv) { return voltdmd::run_cli(argc, argv, std::cout, std::cerr); }
