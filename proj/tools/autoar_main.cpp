#include <iostream>
#include <string>
#include <vector>

#include "autoar/cli.hpp"

int main(int argc, char** argv) {
  return autoar::run_cli(std::vector<std::string>(argv, argv + argc), std::cout,
                         std::cerr);
}
