#include <iostream>
#include <string>
#include <vector>

#include "potforecast/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return potforecast::cli::run(args, std::cout, std::cerr);
}
