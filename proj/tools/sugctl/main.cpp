#include <iostream>

#include "sugctl.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sugctl::run(args, std::cout, std::cerr);
}
