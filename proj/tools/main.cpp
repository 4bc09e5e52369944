#include <iostream>
#include <string>
#include <vector>

#include "mglgcp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mglgcp::run_cli(args, std::cout, std::cerr);
}
