#include <iostream>
#include <string>
#include <vector>

#include "pctl_smc/cli.hpp"

int main(int argc, char** argv) {
  return pctl_smc::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
