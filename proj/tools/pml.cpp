#include <iostream>

#include "pml/cli.hpp"

int main(int argc, char** argv) {
  return pml::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
