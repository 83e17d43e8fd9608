#include <iostream>

#include "tglrn/cli.hpp"

int main(int argc, char** argv) {
  return tglrn::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
