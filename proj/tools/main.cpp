#include <iostream>

#include "wseg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wseg::run_cli(args, std::cout, std::cerr);
}
