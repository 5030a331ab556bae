#include <iostream>

#include "qprim/cli.hpp"

int main(int argc, char** argv) {
  return qprim::cli::run(argc, argv, std::cout, std::cerr);
}
