#include <iostream>
#include <string>
#include <vector>

#include "jschur/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return jschur::run(args, std::cout, std::cerr);
}
