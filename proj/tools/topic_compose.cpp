#include <iostream>
#include <string>
#include <vector>

#include "topic_compose/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return topic_compose::run_cli(args, std::cout, std::cerr);
}
