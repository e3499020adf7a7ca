#include <iostream>

#include "ltts/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ltts::cli::run(args, std::cout, std::cerr);
}
