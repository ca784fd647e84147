#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "fddm/runtime.hpp"

int main(int argc, char** argv) {
  fddm::retain_heap_memory();
  doctest::Context context(argc, argv);
  return context.run();
}
