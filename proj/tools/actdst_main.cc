#include <iostream>

#include "actdst/cli.h"

int main(int argc, char** argv) {
  return actdst::run_cli(argc, argv, std::cout, std::cerr);
}
