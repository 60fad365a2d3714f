#include <iostream>
#include <string>
#include <vector>

#include "monotraj/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return monotraj::cli::run(args, std::cout, std::cerr);
}
