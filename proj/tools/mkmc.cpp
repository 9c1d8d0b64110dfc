#include <string>
#include <vector>

#include "mkmc/cli.hpp"

int main(int argc, char** argv) {
  return mkmc::cli::run(std::vector<std::string>(argv, argv + argc));
}
