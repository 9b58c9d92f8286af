#include <iostream>
#include <string>
#include <vector>

#include "ofbm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ofbm::run_cli(args, std::cout, std::cerr);
}
