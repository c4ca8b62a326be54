#include <iostream>

#include "dpkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dpkit::cli::run(args, std::cout, std::cerr);
}
