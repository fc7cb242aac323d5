#include <iostream>

#include "vsl/cli.hpp"

int main(int argc, char** argv) { return vsl::run_cli(argc, argv, std::cout, std::cerr); }
