#include <iostream>
#include <string>
#include <vector>

#include "perpetuity/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return perp::run_cli(args, std::cout, std::cerr);
}
