#include <iostream>

#include "ember/cli/cli.hpp"

int main(int argc, char** argv) { return ember::cli::run({argv + 1, argv + argc}, std::cout, std::cerr); }
