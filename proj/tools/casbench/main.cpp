#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return casbench::cli::main(argc, argv, std::cin, std::cout, std::cerr);
}
