#include <iostream>

#include "latentdyn/app/cli.hpp"

int main(int argc, char** argv) {
  return latentdyn::app::run_cli(argc, argv, std::cout, std::cerr);
}
