#include <iostream>

#include "conedef/cli.hpp"

int main(int argc, char** argv) { return conedef::cli::run(argc, argv, std::cout, std::cerr); }
