#include "recur/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return recur::cli::run_command(argc, argv, std::cout, std::cerr);
}
