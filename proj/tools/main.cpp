#include <iostream>

#include "refactorkit/cli.hpp"

int main(int argc, char** argv) {
  return refactorkit::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
