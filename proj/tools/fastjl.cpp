#include <string>
#include <vector>

#include "fastjl/cli.hpp"

int main(int argc, char** argv) {
  return fastjl::run_main(std::vector<std::string>(argv, argv + argc));
}
