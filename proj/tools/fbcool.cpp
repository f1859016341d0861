#include <iostream>

#include "fbcool/cli.hpp"

int main(int argc, char** argv) { return fbcool::cli::run(argc, argv, std::cout, std::cerr); }
