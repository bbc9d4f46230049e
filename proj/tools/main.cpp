#include <iostream>

#include "adaptmt/cli.hpp"

int main(int argc, char** argv) {
  return adaptmt::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
