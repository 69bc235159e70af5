#include <iostream>

#include "coimg/cli.hpp"

int main(int argc, char** argv) { return coimg::cli::run(argc, argv, std::cout, std::cerr); }
