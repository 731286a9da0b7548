#include <iostream>

#include "cavsync/cli.hpp"

int main(int argc, char** argv) { return cavsync::run_cli(argc, argv, std::cout, std::cerr); }
