#include <iostream>

#include <degcount/cli.hpp>

int main(int argc, char** argv) { return degcount::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
