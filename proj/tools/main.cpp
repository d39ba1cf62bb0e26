#include <iostream>

#include "hvc/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hvc::cli::run(args, std::cout, std::cerr);
}
