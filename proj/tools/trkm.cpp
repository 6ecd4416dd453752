#include <iostream>

#include "trkm/cli.hpp"

int main(int argc, char** argv) {
  return trkm::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
