#include <iostream>

#include "lvgm/cli.hpp"

int main(int argc, char** argv) {
  return lvgm::cli::run(std::vector<std::string>(argv, argv + argc), std::cout,
                        std::cerr);
}
