#include <string>
#include <vector>

#include "fddm/pipeline/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fddm::pipeline::run_cli(args);
}
