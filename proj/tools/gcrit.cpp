#include <iostream>

#include "gcrit/cli.hpp"

int main(int argc, char** argv) { return gcrit::cli::run(argc, argv, std::cout, std::cerr); }
