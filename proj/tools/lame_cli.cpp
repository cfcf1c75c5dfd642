#include <iostream>
#include <string>
#include <vector>

#include "lame/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lame::run_cli(args, std::cout, std::cerr);
}
