#include <string>
#include <vector>

#include "lsdot/cli_io.hpp"

int main(int argc, char** argv) {
  return lsdot::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
