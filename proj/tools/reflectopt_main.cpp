#include "reflectopt/cli.hpp"

#include <iostream>

int main(int argc, char **argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return reflectopt::run_cli(args, std::cout, std::cerr);
}
