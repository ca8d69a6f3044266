#include <iostream>

#include "nsp/runner.hpp"

int main(int argc, char** argv) {
  return nsp::run_cli(argc, argv, std::cout, std::cerr);
}
