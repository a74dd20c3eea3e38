#include <iostream>
#include <string>
#include <vector>

#include "markbench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return markbench::cli::run(args, std::cout, std::cerr);
}
