#include <iostream>

#include "belief_tuner/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return belief_tuner::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
