#include <iostream>
#include <string>
#include <vector>

#include "naklab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return naklab::cli::run(args, std::cout, std::cerr);
}
